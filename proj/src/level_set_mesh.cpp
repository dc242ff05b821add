#include "mass_lab/errors.hpp"
#include "mass_lab/surface_geometry.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

namespace mass_lab {

namespace {

std::uint64_t edge_key(int a, int b) {
    const auto lo = static_cast<std::uint64_t>(std::min(a, b));
    const auto hi = static_cast<std::uint64_t>(std::max(a, b));
    return (hi << 32) | lo;
}

int find_root(std::vector<int>& parent, int v) {
    while (parent[static_cast<std::size_t>(v)] != v) {
        parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
        v = parent[static_cast<std::size_t>(v)];
    }
    return v;
}

}  // namespace

MeshCounts mesh_counts(const LevelSetMesh& mesh) {
    std::unordered_map<std::uint64_t, int> edges;
    edges.reserve(mesh.faces.size() * 2);
    for (const auto& f : mesh.faces)
        for (int e = 0; e < 3; ++e) {
            const int a = f[static_cast<std::size_t>(e)], b = f[static_cast<std::size_t>((e + 1) % 3)];
            if (a == b) throw MeshError("degenerate triangle with a repeated vertex");
            if (++edges[edge_key(a, b)] > 2) throw MeshError("non-manifold edge bounds more than two faces");
        }
    MeshCounts c;
    c.vertices = static_cast<long>(mesh.vertices.size());
    c.edges = static_cast<long>(edges.size());
    c.faces = static_cast<long>(mesh.faces.size());
    std::vector<int> parent(mesh.vertices.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::vector<char> on_boundary(mesh.vertices.size(), 0);
    for (const auto& [key, count] : edges) {
        if (count != 1) continue;
        const int a = static_cast<int>(key & 0xffffffffu), b = static_cast<int>(key >> 32);
        on_boundary[static_cast<std::size_t>(a)] = on_boundary[static_cast<std::size_t>(b)] = 1;
        parent[static_cast<std::size_t>(find_root(parent, a))] = find_root(parent, b);
    }
    for (std::size_t v = 0; v < parent.size(); ++v)
        if (on_boundary[v] && find_root(parent, static_cast<int>(v)) == static_cast<int>(v)) ++c.boundary_loops;
    return c;
}

long euler_characteristic(const LevelSetMesh& mesh) {
    const MeshCounts c = mesh_counts(mesh);
    return c.vertices - c.edges + c.faces;
}

LevelSetMesh icosphere_mesh(int subdivisions) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    LevelSetMesh m;
    for (const Vec3& v : {Vec3(-1, t, 0), Vec3(1, t, 0), Vec3(-1, -t, 0), Vec3(1, -t, 0), Vec3(0, -1, t),
                          Vec3(0, 1, t), Vec3(0, -1, -t), Vec3(0, 1, -t), Vec3(t, 0, -1), Vec3(t, 0, 1),
                          Vec3(-t, 0, -1), Vec3(-t, 0, 1)})
        m.vertices.push_back(v.normalized());
    m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
               {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
               {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::uint64_t, int> mid;
        auto midpoint = [&](int a, int b) {
            const std::uint64_t k = edge_key(a, b);
            auto it = mid.find(k);
            if (it != mid.end()) return it->second;
            m.vertices.push_back((m.vertices[static_cast<std::size_t>(a)] + m.vertices[static_cast<std::size_t>(b)]).normalized());
            const int idx = static_cast<int>(m.vertices.size()) - 1;
            mid.emplace(k, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        for (const auto& f : m.faces) {
            const int a = midpoint(f[0], f[1]), b = midpoint(f[1], f[2]), c = midpoint(f[2], f[0]);
            next.push_back({f[0], a, c});
            next.push_back({f[1], b, a});
            next.push_back({f[2], c, b});
            next.push_back({a, b, c});
        }
        m.faces = std::move(next);
    }
    return m;
}

LevelSetMesh torus_mesh(double major, double minor, int n_major, int n_minor) {
    if (n_major < 3 || n_minor < 3) throw ArgumentError("torus mesh needs at least 3 segments per direction");
    LevelSetMesh m;
    for (int i = 0; i < n_major; ++i)
        for (int j = 0; j < n_minor; ++j) {
            const double u = 2.0 * pi * i / n_major, v = 2.0 * pi * j / n_minor;
            m.vertices.emplace_back((major + minor * std::cos(v)) * std::cos(u),
                                    (major + minor * std::cos(v)) * std::sin(u), minor * std::sin(v));
        }
    auto id = [&](int i, int j) { return ((i % n_major) * n_minor) + (j % n_minor); };
    for (int i = 0; i < n_major; ++i)
        for (int j = 0; j < n_minor; ++j) {
            m.faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            m.faces.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    return m;
}

LevelSetMesh annulus_mesh(double inner, double outer, int n_radial, int n_angular) {
    if (n_radial < 1 || n_angular < 3) throw ArgumentError("annulus mesh resolution too small");
    LevelSetMesh m;
    for (int i = 0; i <= n_radial; ++i)
        for (int j = 0; j < n_angular; ++j) {
            const double r = inner + (outer - inner) * i / n_radial, a = 2.0 * pi * j / n_angular;
            m.vertices.emplace_back(r * std::cos(a), r * std::sin(a), 0.0);
        }
    auto id = [&](int i, int j) { return i * n_angular + (j % n_angular); };
    for (int i = 0; i < n_radial; ++i)
        for (int j = 0; j < n_angular; ++j) {
            m.faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            m.faces.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    return m;
}

LevelSetMesh surface_mesh(const SurfaceModel& surface, int n_theta, int n_phi) {
    if (n_theta < 2 || n_phi < 3) throw ArgumentError("surface mesh resolution too small");
    LevelSetMesh m;
    m.vertices.push_back(surface.eval(0.0, 0.0).x);
    for (int i = 1; i < n_theta; ++i)
        for (int j = 0; j < n_phi; ++j)
            m.vertices.push_back(surface.eval(pi * i / n_theta, 2.0 * pi * j / n_phi).x);
    m.vertices.push_back(surface.eval(pi, 0.0).x);
    const int south = static_cast<int>(m.vertices.size()) - 1;
    auto id = [&](int ring, int j) { return 1 + (ring - 1) * n_phi + (j % n_phi); };
    for (int j = 0; j < n_phi; ++j) m.faces.push_back({0, id(1, j), id(1, j + 1)});
    for (int i = 1; i + 1 < n_theta; ++i)
        for (int j = 0; j < n_phi; ++j) {
            m.faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            m.faces.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    for (int j = 0; j < n_phi; ++j) m.faces.push_back({south, id(n_theta - 1, j + 1), id(n_theta - 1, j)});
    return m;
}

Vec3 ScalarGrid::point(int i, int j, int k) const {
    const Vec3 step = (hi - lo) / n;
    return lo + Vec3(i * step.x(), j * step.y(), k * step.z());
}

ScalarGrid sample_grid(const std::function<double(const Vec3&)>& f, const Vec3& lo, const Vec3& hi, int n) {
    if (n < 1) throw ArgumentError("grid needs at least one cell");
    ScalarGrid g;
    g.lo = lo;
    g.hi = hi;
    g.n = n;
    const std::size_t side = static_cast<std::size_t>(n + 1);
    g.values.resize(side * side * side);
    const auto total = static_cast<std::ptrdiff_t>(g.values.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t idx = 0; idx < total; ++idx) {
        const auto u = static_cast<std::size_t>(idx);
        const int i = static_cast<int>(u % side), j = static_cast<int>((u / side) % side),
                  k = static_cast<int>(u / (side * side));
        g.values[u] = f(g.point(i, j, k));
    }
    return g;
}

namespace {

// Vertex identity: a grid edge, or a pair of grid edges for clip vertices.
struct VertexKey {
    std::uint64_t a, b;
    bool operator==(const VertexKey&) const = default;
};

struct VertexKeyHash {
    std::size_t operator()(const VertexKey& k) const noexcept {
        return std::hash<std::uint64_t>()(k.a * 0x9e3779b97f4a7c15ULL ^ (k.b + 0x632be59bd9b4e019ULL));
    }
};

struct PolyVertex {
    VertexKey key;
    Vec3 x;
    double region;
};

constexpr std::uint64_t none = ~std::uint64_t{0};

// Grid ids fit in 32 bits for any grid this code is used with.
std::uint64_t grid_edge(std::uint64_t a, std::uint64_t b) {
    return (std::max(a, b) << 32) | std::min(a, b);
}

}  // namespace

LevelSetMesh extract_level_set(const ScalarGrid& u, const ScalarGrid* region, double level) {
    if (region && (region->n != u.n || region->lo != u.lo || region->hi != u.hi))
        throw ArgumentError("region grid must match the field grid");
    const int n = u.n;
    if (static_cast<double>(n + 1) * (n + 1) * (n + 1) > 4.0e9) throw ArgumentError("grid too large");
    LevelSetMesh mesh;
    std::unordered_map<VertexKey, int, VertexKeyHash> ids;
    auto vertex_id = [&](const PolyVertex& v) {
        auto [it, inserted] = ids.emplace(v.key, static_cast<int>(mesh.vertices.size()));
        if (inserted) mesh.vertices.push_back(v.x);
        return it->second;
    };
    // Kuhn decomposition: six tetrahedra along the main diagonal of each cube.
    static constexpr int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    std::vector<PolyVertex> poly, clipped;
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                for (const auto& perm : perms) {
                    int c[3] = {i, j, k};
                    std::array<std::uint64_t, 4> gid{};
                    std::array<Vec3, 4> pos;
                    std::array<double, 4> s{}, d{};
                    for (int v = 0; v < 4; ++v) {
                        if (v > 0) ++c[perm[v - 1]];
                        const std::size_t idx = u.index(c[0], c[1], c[2]);
                        gid[static_cast<std::size_t>(v)] = idx;
                        pos[static_cast<std::size_t>(v)] = u.point(c[0], c[1], c[2]);
                        s[static_cast<std::size_t>(v)] = u.values[idx] - level;
                        d[static_cast<std::size_t>(v)] = region ? region->values[idx] : 1.0;
                    }
                    int above = 0;
                    for (double sv : s) above += sv >= 0.0 ? 1 : 0;
                    if (above == 0 || above == 4) continue;
                    if (region && d[0] < 0 && d[1] < 0 && d[2] < 0 && d[3] < 0) continue;
                    auto cut = [&](int a, int b) {
                        const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
                        const double lam = s[ua] / (s[ua] - s[ub]);
                        return PolyVertex{{grid_edge(gid[ua], gid[ub]), none},
                                          pos[ua] + lam * (pos[ub] - pos[ua]),
                                          d[ua] + lam * (d[ub] - d[ua])};
                    };
                    poly.clear();
                    std::array<int, 4> up{}, down{};
                    int nu = 0, nd = 0;
                    for (int v = 0; v < 4; ++v) {
                        if (s[static_cast<std::size_t>(v)] >= 0.0) up[static_cast<std::size_t>(nu++)] = v;
                        else down[static_cast<std::size_t>(nd++)] = v;
                    }
                    if (nu == 1 || nd == 1) {
                        const int lone = nu == 1 ? up[0] : down[0];
                        const auto& rest = nu == 1 ? down : up;
                        for (int r = 0; r < 3; ++r) poly.push_back(cut(lone, rest[static_cast<std::size_t>(r)]));
                    } else {
                        poly.push_back(cut(up[0], down[0]));
                        poly.push_back(cut(up[0], down[1]));
                        poly.push_back(cut(up[1], down[1]));
                        poly.push_back(cut(up[1], down[0]));
                    }
                    const std::vector<PolyVertex>* out = &poly;
                    if (region) {
                        clipped.clear();
                        const std::size_t m = poly.size();
                        for (std::size_t e = 0; e < m; ++e) {
                            const PolyVertex& p = poly[e];
                            const PolyVertex& q = poly[(e + 1) % m];
                            const bool pin = p.region >= 0.0, qin = q.region >= 0.0;
                            if (pin) clipped.push_back(p);
                            if (pin != qin) {
                                const double lam = p.region / (p.region - q.region);
                                const std::uint64_t ka = std::min(p.key.a, q.key.a), kb = std::max(p.key.a, q.key.a);
                                clipped.push_back({{ka, kb}, p.x + lam * (q.x - p.x), 0.0});
                            }
                        }
                        out = &clipped;
                    }
                    if (out->size() < 3) continue;
                    const int first = vertex_id((*out)[0]);
                    int prev = vertex_id((*out)[1]);
                    for (std::size_t v = 2; v < out->size(); ++v) {
                        const int cur = vertex_id((*out)[v]);
                        if (first != prev && prev != cur && cur != first) mesh.faces.push_back({first, prev, cur});
                        prev = cur;
                    }
                }
            }
    return mesh;
}

}  // namespace mass_lab
