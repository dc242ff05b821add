#include "mass_lab/build_info.hpp"
#include "mass_lab/cli_reports.hpp"
#include "mass_lab/errors.hpp"
#include "mass_lab/fillins.hpp"
#include "mass_lab/mass_functionals.hpp"
#include "mass_lab/numerics.hpp"
#include "mass_lab/weyl_embedding.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace mass_lab {

namespace {

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

// Config sections with defaults for missing keys.
struct Inputs {
    const ExperimentConfig& cfg;
    const Json& doc;
    Json params, resolution;
    Metric metric;
    SolverOptions solver;

    explicit Inputs(const ExperimentConfig& c)
        : cfg(c),
          doc(c.document),
          params(doc.value("parameters", Json::object())),
          resolution(doc.value("resolution", Json::object())),
          metric(build_metric(doc.at("metric"))),
          solver(build_solver_options(doc.value("solver", Json::object()))) {}

    [[nodiscard]] int res(const char* key, int fallback) const { return resolution.value(key, fallback); }
    [[nodiscard]] bool glued() const { return metric->as_glued() != nullptr; }
    [[nodiscard]] std::shared_ptr<const GluedMetric> glued_ptr() const {
        return std::dynamic_pointer_cast<const GluedMetric>(metric);
    }
    [[nodiscard]] SurfaceModel surface() const { return build_surface(doc.at("surface"), cfg.base_dir); }
    [[nodiscard]] double sphere_radius() const { return doc.at("surface").at("radius").get<double>(); }

    [[nodiscard]] VerifyOptions verify_options() const {
        VerifyOptions v;
        v.bulk.n_radial = res("n_radial", v.bulk.n_radial);
        v.bulk.n_angle = res("n_angle", v.bulk.n_angle);
        v.boundary.n_theta = res("n_theta", v.boundary.n_theta);
        v.boundary.n_phi = res("n_phi", v.boundary.n_phi);
        v.boundary.keep_samples = false;
        v.deficit.grid = res("deficit_grid", v.deficit.grid);
        v.gradient_samples = static_cast<std::size_t>(res("samples", static_cast<int>(v.gradient_samples)));
        v.seed = cfg.seed;
        return v;
    }

    [[nodiscard]] InnerCondition inner(const InnerCondition& fallback) const {
        if (!params.contains("inner")) return fallback;
        const Json& in = params.at("inner");
        const std::string kind = in.at("kind").get<std::string>();
        if (kind == "none") return InnerCondition::none();
        if (kind == "transmission") return InnerCondition::transmission();
        const double r = in.contains("radius") ? in.at("radius").get<double>() : sphere_radius();
        if (kind == "neumann") return InnerCondition::neumann(r);
        return InnerCondition::dirichlet(r, in.value("value", 0.0));
    }
};

ResultTable quantity_table(const std::vector<std::pair<std::string, double>>& values) {
    ResultTable t;
    t.columns = {"quantity", "value"};
    t.descriptions = {"name of the computed quantity", "its value"};
    for (const auto& [name, v] : values) t.rows.push_back({name, v});
    return t;
}

Json summary_of(const std::vector<std::pair<std::string, double>>& values) {
    Json s = Json::object();
    for (const auto& [name, v] : values) s[name] = v;
    return s;
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json vec3(const Vec3& x) { return Json::array({x[0], x[1], x[2]}); }

VectorFieldModel vector_field(const Json& spec) {
    if (spec.is_null() || spec.at("kind") == "zero") return VectorFieldModel::zero();
    const double c = spec.at("coefficient").get<double>();
    const double p = spec.at("exponent").get<double>();
    std::ostringstream label;
    label << c << " x / r^" << (p + 1.0);
    return VectorFieldModel([c, p](const Vec3& x) -> Vec3 { return c * x / std::pow(x.norm(), p + 1.0); }, p,
                            label.str());
}

// ---------------------------------------------------------------------------

void run_adm(const Inputs& in, RunReport& out) {
    const MetricModel& m = *in.metric;
    const double radius =
        in.params.value("radius", 10.0 * std::max({1.0, m.asymptotic_radius(), m.excluded_radius()}));
    const AdmMethod method = in.params.value("method", std::string("surface-integral")) == "conformal-flux"
                                 ? AdmMethod::conformal_flux
                                 : AdmMethod::surface_integral;
    AdmOptions opt;
    opt.n_theta = in.res("n_theta", opt.n_theta);
    opt.n_phi = in.res("n_phi", opt.n_phi);
    opt.levels = in.params.value("levels", opt.levels);
    const AdmResult r = adm_mass(m, radius, method, in.params.value("extrapolate", true), opt);
    out.table.columns = {"radius", "value"};
    out.table.descriptions = {"coordinate sphere radius", "flux integral of the mass at that radius"};
    for (std::size_t i = 0; i < r.radii.size(); ++i) out.table.rows.push_back({r.radii[i], r.values[i]});
    out.summary = {{"metric", m.describe()},
                   {"method", to_string(method)},
                   {"mass", r.mass},
                   {"extrapolated", r.extrapolated},
                   {"extrapolation_error", r.extrapolation_error},
                   {"curvature_warning", r.curvature_warning}};
}

void run_brown_york(const Inputs& in, RunReport& out) {
    const SurfaceModel surface = in.surface();
    const int n_theta = in.res("n_theta", 96);
    const SurfaceTotals totals = surface_totals(surface, *in.metric);
    if (!(totals.min_K > 0.0)) {
        std::ostringstream os;
        os << "Gauss curvature non-positive (min K = " << totals.min_K << ") on " << surface.describe()
           << "; the Brown-York mass needs a convex surface";
        throw PreconditionError(os.str());
    }
    const EmbeddingResult emb = embed_revolution(RevolutionMetric::induced(surface, in.metric));
    const double m_by = brown_york(surface, *in.metric, emb, n_theta);
    out.table.columns = {"theta", "H", "H0"};
    out.table.descriptions = {"polar parameter", "mean curvature in the metric", "mean curvature of the flat embedding"};
    const numerics::QuadratureRule rule = numerics::gauss_legendre(n_theta, 0.0, pi);
    for (double theta : rule.nodes)
        out.table.rows.push_back(
            {theta, fundamental_forms(surface, *in.metric, theta, 0.0).H, emb.mean_curvature(theta)});
    out.summary = {{"surface", surface.describe()},
                   {"metric", in.metric->describe()},
                   {"m_by", m_by},
                   {"area", totals.area},
                   {"min_K", totals.min_K},
                   {"gauss_bonnet", totals.gauss_bonnet},
                   {"embedding_height", emb.height},
                   {"closure_residual", emb.closure_residual},
                   {"embedding_margin", emb.margin},
                   {"round_radius", optional_number(emb.round_radius)}};
}

void run_bkks_verify(const Inputs& in, RunReport& out) {
    const std::string inequality = in.params.value("inequality", std::string(in.glued() ? "fillin" : "boundary"));
    const VerifyOptions vopt = in.verify_options();
    if (inequality == "fillin") {
        const HarmonicField u = solve_asymptotic(in.metric, in.inner(InnerCondition::transmission()), in.solver);
        const FillinInequalityReport r = verify_fillin_inequality(u, vopt, in.params.value("tolerance", 1e-3));
        const std::vector<std::pair<std::string, double>> values{
            {"bulk_exterior", r.bulk_exterior}, {"bulk_fillin", r.bulk_fillin},
            {"bulk_error", r.bulk_error},       {"boundary_H_term", r.boundary_H_term},
            {"angle_term", r.angle_term},       {"angle_term_fillin", r.angle_term_fillin},
            {"corner_term", r.corner_term},     {"chi_deficit", r.chi_deficit},
            {"mass", r.mass},                   {"rhs", r.rhs},
            {"residual", r.residual},           {"min_grad", r.min_grad}};
        out.table = quantity_table(values);
        out.summary = summary_of(values);
        out.summary["inequality"] = inequality;
        out.summary["equality_expected"] = r.equality_expected;
        out.summary["tolerance"] = r.tolerance;
        out.summary["passed"] = r.passed;
        out.summary["divergent"] = r.divergent;
        return;
    }
    if (inequality == "boundary") {
        const SurfaceModel sigma = in.surface();
        const HarmonicField u =
            solve_asymptotic(in.metric, in.inner(InnerCondition::dirichlet(in.sphere_radius())), in.solver);
        const BoundaryInequalityReport r = verify_boundary_inequality(u, sigma, vopt);
        const std::vector<std::pair<std::string, double>> values{
            {"mass", r.mass},       {"chi_deficit", r.chi_deficit}, {"bulk", r.bulk},
            {"bulk_error", r.bulk_error}, {"H_term", r.H_term}, {"angle_term", r.angle_term},
            {"lhs", r.lhs},         {"rhs", r.rhs},                 {"residual", r.residual}};
        out.table = quantity_table(values);
        out.summary = summary_of(values);
        out.summary["inequality"] = inequality;
        out.summary["passed"] = r.lhs >= r.rhs - in.params.value("tolerance", 1e-3) * std::max(1.0, std::abs(r.lhs));
        return;
    }
    const auto glued = in.glued_ptr();
    const VectorFieldConditionsReport r = verify_vector_field_conditions(
        *glued, vector_field(in.params.value("X", Json())), vector_field(in.params.value("Y", Json())),
        in.params.value("C1", 2.0 / 3.0), in.params.value("C2", 2.0 / 3.0),
        static_cast<std::size_t>(in.res("samples", 4000)), in.cfg.seed);
    const std::vector<std::pair<std::string, double>> values{{"fillin_margin", r.fillin.margin},
                                                             {"exterior_margin", r.exterior.margin},
                                                             {"boundary_margin", r.boundary.margin}};
    out.table = quantity_table(values);
    out.summary = summary_of(values);
    out.summary["inequality"] = inequality;
    out.summary["fillin_passed"] = r.fillin.passed;
    out.summary["exterior_passed"] = r.exterior.passed;
    out.summary["boundary_passed"] = r.boundary.passed;
    out.summary["fillin_witness"] = vec3(r.fillin.witness);
    out.summary["exterior_witness"] = vec3(r.exterior.witness);
    out.summary["boundary_witness"] = vec3(r.boundary.witness);
    out.summary["constants_valid"] = r.constants_valid;
    out.summary["decay_warning"] = r.decay_warning;
    out.summary["nonnegative_mass_implied"] = r.nonnegative_mass_implied;
}

void corner_rows(const CornerJump& c, RunReport& out) {
    out.table.columns = {"theta", "H", "H_fillin", "jump"};
    out.table.descriptions = {"polar parameter", "mean curvature on the exterior side",
                              "mean curvature on the fill-in side", "H_fillin - H"};
    for (std::size_t i = 0; i < c.theta.size(); ++i) out.table.rows.push_back({c.theta[i], c.H[i], c.H_fillin[i], c.jump[i]});
}

void run_fillin(const Inputs& in, RunReport& out) {
    const std::string kind = in.params.value("fillin", std::string(in.glued() ? "glued" : "euclidean"));
    const int n_theta = in.res("n_theta", 48);
    if (kind == "conformal") {
        const ConformalFillin c = conformal_fillin(in.metric, in.surface(), in.solver, n_theta);
        out.table.columns = {"theta", "H", "H_formula", "H_direct"};
        out.table.descriptions = {"polar parameter", "host mean curvature", "-H - 4 dG/dmu",
                                  "mean curvature of the boundary in G^4 g"};
        for (std::size_t i = 0; i < c.theta.size(); ++i)
            out.table.rows.push_back({c.theta[i], c.H[i], c.H_formula[i], c.H_direct[i]});
        out.summary = {{"fillin", kind},
                       {"label", c.model.label},
                       {"dG_dmu", c.dG_dmu},
                       {"max_difference", c.max_difference},
                       {"isometry_residual", c.model.isometry_residual}};
        return;
    }
    auto [model, corner] = kind == "glued" ? glued_fillin(in.glued_ptr(), n_theta)
                                           : euclidean_fillin(in.surface(), in.metric, n_theta);
    corner_rows(corner, out);
    out.summary = {{"fillin", kind},
                   {"label", model.label},
                   {"max_abs_jump", corner.max_abs_jump},
                   {"isometry_residual", corner.isometry_residual},
                   {"ball_radius", optional_number(model.ball_radius)}};
}

void run_mollify(const Inputs& in, RunReport& out) {
    const auto glued = in.glued_ptr();
    const std::vector<double> deltas = in.params.at("deltas").get<std::vector<double>>();
    const HarmonicField u = solve_asymptotic(in.metric, InnerCondition::transmission(), in.solver);
    CollarOptions opt;
    opt.resolve = in.params.value("resolve", false);
    opt.n_angle = in.res("n_angle", opt.n_angle);
    const CollarResult c = collar_integral(glued, u, deltas, opt);
    const CornerJump jump = glued_fillin(glued, 8).second;
    const double mean_jump = jump.jump.front();
    out.table.columns = {"delta", "integral", "extrapolant", "resolved", "peak_curvature", "peak_ratio",
                         "sup_warp_change"};
    out.table.descriptions = {"collar half-width",
                              "collar integral of R_delta |grad u| with the unsmoothed u",
                              "Richardson estimate from the rows so far",
                              "same integral with u re-solved on the smoothed metric (nan when not requested)",
                              "R_delta at the interface",
                              "peak / (2 jump phi(0) / delta^2)",
                              "sup over the collar of the change in the areal radius"};
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        const auto m = mollify(glued, deltas[i]);
        const double peak = m->collar_curvature(0.0);
        const double law = 2.0 * mean_jump * mollifier(0.0) / (deltas[i] * deltas[i]);
        double sup = 0.0;
        for (int k = 0; k <= 200; ++k) {
            const double t = -deltas[i] + 2.0 * deltas[i] * k / 200.0;
            sup = std::max(sup, std::abs(m->warp(t).v - m->raw_warp(t).v));
        }
        out.table.rows.push_back({deltas[i], c.integral[i], c.extrapolant[i],
                                  opt.resolve ? c.resolved[i] : nan_value, peak, law != 0.0 ? peak / law : nan_value,
                                  sup});
    }
    out.summary = {{"metric", glued->describe()},
                   {"expected", c.expected},
                   {"limit", optional_number(c.limit)},
                   {"monotone", c.monotone},
                   {"interface_jump", mean_jump}};
    if (c.limit && c.expected != 0.0) out.summary["limit_relative_error"] = std::abs(*c.limit - c.expected) / std::abs(c.expected);
}

void run_converge(const Inputs& in, RunReport& out) {
    const SurfaceFamily family = build_family(in.doc.value("family", Json{{"kind", "coordinate-spheres"}}), in.cfg.base_dir);
    StudyOptions opt;
    opt.n_theta = in.res("n_theta", opt.n_theta);
    const ConvergenceStudy s =
        by_convergence_study(in.metric, family, in.params.at("r_list").get<std::vector<double>>(), opt);
    out.table.columns = {"r", "area", "min_K", "m_BY", "flag"};
    out.table.descriptions = {"family scale", "area of the surface", "minimum Gauss curvature",
                              "Brown-York mass (nan when flagged)", "empty, or why the row is invalid"};
    for (const StudyRow& r : s.rows) out.table.rows.push_back({r.r, r.area, r.min_K, r.m_by, r.flag});
    out.summary = {{"family", s.family},
                   {"metric", in.metric->describe()},
                   {"adm_mass", s.adm_mass},
                   {"rate", optional_number(s.rate)},
                   {"limit", optional_number(s.limit)},
                   {"monotone", s.monotone}};
}

void run_kato(const Inputs& in, RunReport& out) {
    const std::string which = in.params.value("field", std::string("asymptotic"));
    const HarmonicField u =
        which == "green" ? solve_green(in.metric, in.surface(), in.solver)
                         : solve_asymptotic(in.metric, in.inner(in.glued() ? InnerCondition::transmission()
                                                                           : InnerCondition::none()),
                                            in.solver);
    const std::size_t n = static_cast<std::size_t>(in.res("samples", 10000));
    const KatoReport r = kato_check(u, random_field_points(u, n, in.cfg.seed));
    out.table.columns = {"field", "evaluated", "skipped", "min_slack", "min_relative_slack", "equality_points"};
    out.table.descriptions = {"harmonic function", "sample points used", "points with vanishing gradient",
                              "min |Hess u|^2 - (3/2) |grad |grad u||^2", "min slack / |Hess u|^2",
                              "points with slack below 1e-8"};
    out.table.rows.push_back({u.describe(), static_cast<double>(r.evaluated), static_cast<double>(r.skipped),
                              r.min_slack, r.min_relative_slack, static_cast<double>(r.equality_points.size())});
    out.summary = {{"field", u.describe()},
                   {"evaluated", r.evaluated},
                   {"skipped", r.skipped},
                   {"min_slack", r.min_slack},
                   {"min_relative_slack", r.min_relative_slack},
                   {"equality_points", r.equality_points.size()},
                   {"passed", r.min_slack >= -1e-8}};
}

void run_robin(const Inputs& in, RunReport& out) {
    const double radius = in.params.contains("radius") ? in.params.at("radius").get<double>() : in.sphere_radius();
    const RobinReport r = robin_mass_bound(in.metric, radius, in.verify_options());
    const std::vector<std::pair<std::string, double>> values{
        {"coefficient", r.solution.coefficient}, {"robin_residual", r.solution.robin_residual},
        {"dG_dmu", r.solution.dG_dmu},           {"dw_dmu", r.solution.dw_dmu},
        {"dv_dmu", r.solution.dv_dmu},           {"bulk", r.bulk},
        {"boundary", r.boundary},                {"bound", r.bound},
        {"mass", r.mass}};
    out.table = quantity_table(values);
    out.summary = summary_of(values);
    out.summary["radius"] = radius;
    out.summary["bound_holds"] = r.bound <= r.mass + 1e-8 * std::max(1.0, std::abs(r.mass));
}

}  // namespace

std::string input_digest(const Json& document, std::uint64_t seed) {
    const std::string canonical = document.dump() + "\nseed=" + std::to_string(seed);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunReport run_experiment(const ExperimentConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    RunReport out;
    out.experiment = config.experiment;
    out.seed = config.seed;
    out.tool_version = build_info::version;
    out.input_digest = input_digest(config.document, config.seed);
    const Inputs in(config);
    switch (config.experiment) {
        case Experiment::adm: run_adm(in, out); break;
        case Experiment::brown_york: run_brown_york(in, out); break;
        case Experiment::bkks_verify: run_bkks_verify(in, out); break;
        case Experiment::fillin: run_fillin(in, out); break;
        case Experiment::mollify: run_mollify(in, out); break;
        case Experiment::converge: run_converge(in, out); break;
        case Experiment::kato: run_kato(in, out); break;
        case Experiment::robin: run_robin(in, out); break;
    }
    out.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

}  // namespace mass_lab
