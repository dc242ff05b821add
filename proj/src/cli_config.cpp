#include "mass_lab/build_info.hpp"
#include "mass_lab/cli_reports.hpp"
#include "mass_lab/errors.hpp"
#include "mass_lab/fillins.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

namespace mass_lab {

namespace {

const std::vector<std::pair<Experiment, std::string>>& experiment_table() {
    static const std::vector<std::pair<Experiment, std::string>> table{
        {Experiment::adm, "adm"},           {Experiment::brown_york, "brown-york"},
        {Experiment::bkks_verify, "bkks-verify"}, {Experiment::fillin, "fillin"},
        {Experiment::mollify, "mollify"},   {Experiment::converge, "converge"},
        {Experiment::kato, "kato"},         {Experiment::robin, "robin"},
    };
    return table;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + items[i];
    return out;
}

std::string child(const std::string& path, const std::string& key) { return path + "/" + key; }

// ---------------------------------------------------------------------------
// Schema subset

class SchemaValidator {
public:
    SchemaValidator(const Json& root, std::vector<ValidationIssue>& issues) : root_(root), issues_(issues) {}

    void check(const Json& value, const Json& schema, const std::string& path) {
        if (schema.contains("$ref")) {
            const std::string ref = schema.at("$ref").get<std::string>();
            if (ref.rfind("#", 0) != 0) throw ConfigError("only local schema references are supported: " + ref);
            check(value, root_.at(Json::json_pointer(ref.substr(1))), path);
            return;
        }
        if (schema.contains("type") && !type_matches(value, schema.at("type"))) {
            report(path, "expected " + type_names(schema.at("type")) + ", found " + std::string(value.type_name()));
            return;
        }
        if (schema.contains("enum")) check_enum(value, schema.at("enum"), path);
        if (value.is_number()) check_bounds(value.get<double>(), schema, path);
        if (value.is_string()) {
            const auto& s = value.get_ref<const std::string&>();
            if (schema.contains("minLength") && s.size() < schema.at("minLength").get<std::size_t>())
                report(path, "string shorter than " + schema.at("minLength").dump());
            if (schema.contains("pattern") && !std::regex_search(s, std::regex(schema.at("pattern").get<std::string>())))
                report(path, "does not match " + schema.at("pattern").get<std::string>());
        }
        if (value.is_array()) {
            if (schema.contains("minItems") && value.size() < schema.at("minItems").get<std::size_t>())
                report(path, "needs at least " + schema.at("minItems").dump() + " items");
            if (schema.contains("items"))
                for (std::size_t i = 0; i < value.size(); ++i)
                    check(value[i], schema.at("items"), child(path, std::to_string(i)));
        }
        if (value.is_object()) check_object(value, schema, path);
    }

private:
    void report(const std::string& path, std::string message) { issues_.push_back({path, std::move(message)}); }

    static bool one_type(const Json& v, const std::string& t) {
        if (t == "object") return v.is_object();
        if (t == "array") return v.is_array();
        if (t == "string") return v.is_string();
        if (t == "boolean") return v.is_boolean();
        if (t == "null") return v.is_null();
        if (t == "number") return v.is_number();
        if (t == "integer") {
            if (v.is_number_integer()) return true;
            if (!v.is_number_float()) return false;
            const double d = v.get<double>();
            return std::isfinite(d) && std::floor(d) == d;
        }
        throw ConfigError("unsupported schema type " + t);
    }
    static bool type_matches(const Json& v, const Json& t) {
        if (t.is_string()) return one_type(v, t.get<std::string>());
        return std::any_of(t.begin(), t.end(), [&](const Json& x) { return one_type(v, x.get<std::string>()); });
    }
    static std::string type_names(const Json& t) {
        if (t.is_string()) return t.get<std::string>();
        std::vector<std::string> names;
        for (const Json& x : t) names.push_back(x.get<std::string>());
        return "one of " + join(names);
    }

    void check_enum(const Json& value, const Json& options, const std::string& path) {
        if (std::any_of(options.begin(), options.end(), [&](const Json& o) { return o == value; })) return;
        std::vector<std::string> names;
        for (const Json& o : options) names.push_back(o.is_string() ? o.get<std::string>() : o.dump());
        std::string message = "unknown value " + value.dump() + " (allowed: " + join(names) + ")";
        if (value.is_string())
            if (const auto near = nearest_match(value.get<std::string>(), names))
                message += "; did you mean " + quoted(*near) + "?";
        report(path, message);
    }

    void check_bounds(double x, const Json& s, const std::string& path) {
        if (s.contains("minimum") && x < s.at("minimum").get<double>())
            report(path, "must be >= " + s.at("minimum").dump());
        if (s.contains("maximum") && x > s.at("maximum").get<double>())
            report(path, "must be <= " + s.at("maximum").dump());
        if (s.contains("exclusiveMinimum") && !(x > s.at("exclusiveMinimum").get<double>()))
            report(path, "must be > " + s.at("exclusiveMinimum").dump());
        if (s.contains("exclusiveMaximum") && !(x < s.at("exclusiveMaximum").get<double>()))
            report(path, "must be < " + s.at("exclusiveMaximum").dump());
    }

    void check_object(const Json& value, const Json& schema, const std::string& path) {
        if (schema.contains("required"))
            for (const Json& key : schema.at("required"))
                if (!value.contains(key.get<std::string>()))
                    report(path, "missing required field " + quoted(key.get<std::string>()));
        const Json empty = Json::object();
        const Json& props = schema.contains("properties") ? schema.at("properties") : empty;
        std::vector<std::string> known;
        for (const auto& [k, _] : props.items()) known.push_back(k);
        for (const auto& [key, item] : value.items()) {
            if (props.contains(key)) {
                check(item, props.at(key), child(path, key));
                continue;
            }
            if (!schema.contains("additionalProperties")) continue;
            const Json& extra = schema.at("additionalProperties");
            if (extra.is_boolean()) {
                if (extra.get<bool>()) continue;
                std::string message = "unknown field " + quoted(key);
                if (const auto near = nearest_match(key, known)) message += "; did you mean " + quoted(*near) + "?";
                report(child(path, key), message);
            } else {
                check(item, extra, child(path, key));
            }
        }
    }

    const Json& root_;
    std::vector<ValidationIssue>& issues_;
};

// ---------------------------------------------------------------------------
// Semantic checks beyond the schema

struct Semantics {
    std::vector<ValidationIssue>& issues;

    void need(const Json& obj, const std::string& key, const std::string& path, const std::string& why) {
        if (!obj.contains(key)) issues.push_back({path, "missing required field " + quoted(key) + " " + why});
    }

    void metric(const Json& m, const std::string& path, bool as_fillin) {
        const std::string kind = m.at("kind").get<std::string>();
        const std::string why = "for metric kind " + kind;
        if (kind == "schwarzschild") need(m, "mass", path, why);
        if (kind == "sphere-cap") need(m, "radius", path, why);
        if (kind == "conformally-flat") {
            need(m, "profile", path, why);
            if (m.contains("profile")) {
                const std::string p = m.at("profile").get<std::string>();
                const std::string pw = "for profile " + p;
                if (p == "schwarzschild") need(m, "mass", path, pw);
                if (p == "bump")
                    for (const char* k : {"mass", "amplitude", "center", "width"}) need(m, k, path, pw);
                if (p == "power")
                    for (const char* k : {"coefficient", "exponent"}) need(m, k, path, pw);
            }
        }
        if (kind == "spherically-symmetric")
            for (const char* k : {"A", "B"}) need(m, k, path, why);
        if ((kind == "euclidean-ball" || kind == "matched-cap") && !as_fillin)
            issues.push_back({path, "metric kind " + kind + " is only valid as the fill-in of a glued metric"});
        if (kind == "glued") {
            for (const char* k : {"exterior", "fillin", "interface_radius"}) need(m, k, path, why);
            if (m.contains("exterior")) {
                metric(m.at("exterior"), child(path, "exterior"), false);
                if (m.at("exterior").at("kind") == "glued")
                    issues.push_back({child(path, "exterior"), "nested glued metrics are not supported"});
            }
            if (m.contains("fillin")) metric(m.at("fillin"), child(path, "fillin"), true);
        }
    }

    void surface(const Json& s, const std::string& path) {
        const std::string kind = s.at("kind").get<std::string>();
        const std::string why = "for surface kind " + kind;
        if (kind == "coordinate-sphere") need(s, "radius", path, why);
        if (kind == "ellipsoid")
            for (const char* k : {"a", "c"}) need(s, k, path, why);
        if (kind == "dumbbell") need(s, "neck", path, why);
        if (kind == "profile-file") need(s, "path", path, why);
    }

    void require_sphere(const Json& doc, const std::string& why) {
        if (!doc.contains("surface")) {
            issues.push_back({"", "missing required field \"surface\" " + why});
            return;
        }
        if (doc.at("surface").at("kind") != "coordinate-sphere")
            issues.push_back({"/surface", "a coordinate-sphere surface is required " + why});
    }

    void require_glued(const Json& doc, const std::string& why) {
        if (doc.at("metric").at("kind") != "glued") issues.push_back({"/metric", "a glued metric is required " + why});
    }

    void experiment(Experiment e, const Json& doc) {
        const Json empty = Json::object();
        const Json& p = doc.contains("parameters") ? doc.at("parameters") : empty;
        const bool glued = doc.at("metric").at("kind") == "glued";
        switch (e) {
            case Experiment::adm: break;
            case Experiment::brown_york:
                if (!doc.contains("surface")) issues.push_back({"", "missing required field \"surface\" for brown-york"});
                break;
            case Experiment::bkks_verify: {
                const std::string ineq = p.value("inequality", glued ? "fillin" : "boundary");
                if (ineq == "fillin" || ineq == "vector-field") require_glued(doc, "for the " + ineq + " check");
                if (ineq == "boundary") require_sphere(doc, "for the boundary inequality");
                break;
            }
            case Experiment::fillin: {
                const std::string kind = p.value("fillin", glued ? "glued" : "euclidean");
                if (kind == "glued") require_glued(doc, "for a glued fill-in");
                if (kind == "euclidean" && !doc.contains("surface"))
                    issues.push_back({"", "missing required field \"surface\" for a euclidean fill-in"});
                if (kind == "conformal") require_sphere(doc, "for a conformal fill-in");
                break;
            }
            case Experiment::mollify:
                require_glued(doc, "for mollify");
                need(p, "deltas", "/parameters", "for mollify");
                if (p.contains("deltas")) {
                    const Json& d = p.at("deltas");
                    for (std::size_t i = 1; i < d.size(); ++i)
                        if (!(d[i].get<double>() < d[i - 1].get<double>()))
                            issues.push_back({"/parameters/deltas/" + std::to_string(i),
                                              "delta sequence must be strictly decreasing (" + d[i - 1].dump() +
                                                  " then " + d[i].dump() + ")"});
                }
                break;
            case Experiment::converge: need(p, "r_list", "/parameters", "for converge"); break;
            case Experiment::kato:
                if (p.value("field", "asymptotic") == "green") require_sphere(doc, "for the green field");
                break;
            case Experiment::robin:
                if (!p.contains("radius")) require_sphere(doc, "for robin (or give parameters.radius)");
                break;
        }
        if (p.contains("inner")) {
            const Json& in = p.at("inner");
            const std::string k = in.at("kind").get<std::string>();
            if ((k == "dirichlet" || k == "neumann") && !in.contains("radius") && !doc.contains("surface"))
                issues.push_back({"/parameters/inner", "missing required field \"radius\" for inner kind " + k});
            if (k == "transmission" && !glued)
                issues.push_back({"/parameters/inner", "transmission needs a glued metric"});
        }
    }
};

}  // namespace

std::string to_string(Experiment e) {
    for (const auto& [x, name] : experiment_table())
        if (x == e) return name;
    return "?";
}

std::optional<Experiment> parse_experiment(const std::string& name) {
    for (const auto& [x, n] : experiment_table())
        if (n == name) return x;
    return std::nullopt;
}

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& [_, n] : experiment_table()) out.push_back(n);
        return out;
    }();
    return names;
}

std::optional<std::string> nearest_match(const std::string& word, const std::vector<std::string>& candidates) {
    std::optional<std::string> best;
    std::size_t best_d = std::max<std::size_t>(2, word.size() / 3) + 1;
    for (const std::string& c : candidates) {
        const std::size_t d = edit_distance(word, c);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

std::vector<ValidationIssue> validate_schema(const Json& document, const Json& schema) {
    std::vector<ValidationIssue> issues;
    SchemaValidator(schema, issues).check(document, schema, "");
    return issues;
}

const Json& config_schema() {
    static const Json schema = Json::parse(build_info::config_schema);
    return schema;
}

const Json& report_schema() {
    static const Json schema = Json::parse(build_info::report_schema);
    return schema;
}

ConfigResult validate_config_text(const std::string& text, std::optional<Experiment> experiment,
                                  const std::filesystem::path& base_dir) {
    ConfigResult out;
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        out.issues.push_back({"", std::string("not valid JSON: ") + e.what()});
        return out;
    }
    if (!doc.is_object()) {
        out.issues.push_back({"", "configuration must be a JSON object"});
        return out;
    }
    out.issues = validate_schema(doc, config_schema());
    if (doc.contains("experiment") && doc.at("experiment").is_string()) {
        const auto own = parse_experiment(doc.at("experiment").get<std::string>());
        if (experiment && own && *own != *experiment)
            out.issues.push_back({"/experiment", "config is for " + to_string(*own) + " but " +
                                                     to_string(*experiment) + " was requested"});
        if (!experiment) experiment = own;
    }
    if (!experiment) out.issues.push_back({"", "missing required field \"experiment\""});

    // Semantic checks also run on schema-invalid documents so that every
    // violation is listed; a section whose shape is already wrong is skipped.
    Semantics sem{out.issues};
    auto guarded = [](auto&& check) {
        try {
            check();
        } catch (const Json::exception&) {
        }
    };
    if (doc.contains("metric")) guarded([&] { sem.metric(doc.at("metric"), "/metric", false); });
    if (doc.contains("surface")) guarded([&] { sem.surface(doc.at("surface"), "/surface"); });
    guarded([&] {
        if (doc.contains("family") && doc.at("family").at("kind") == "scaled") {
            sem.need(doc.at("family"), "base", "/family", "for family kind scaled");
            if (doc.at("family").contains("base")) sem.surface(doc.at("family").at("base"), "/family/base");
        }
    });
    if (experiment && doc.contains("metric")) guarded([&] { sem.experiment(*experiment, doc); });
    if (!out.issues.empty()) return out;

    ExperimentConfig cfg;
    cfg.experiment = *experiment;
    cfg.seed = doc.value("seed", std::uint64_t{1});
    cfg.base_dir = base_dir;
    cfg.stem = to_string(*experiment);
    if (doc.contains("output")) {
        const Json& o = doc.at("output");
        cfg.stem = o.value("stem", cfg.stem);
        if (o.contains("formats")) {
            cfg.emit_csv = cfg.emit_json = false;
            for (const Json& f : o.at("formats")) (f == "csv" ? cfg.emit_csv : cfg.emit_json) = true;
        }
    }
    cfg.document = std::move(doc);
    out.config = std::move(cfg);
    return out;
}

ConfigResult validate_config(const std::filesystem::path& path, std::optional<Experiment> experiment) {
    std::ifstream in(path);
    if (!in) {
        ConfigResult out;
        out.issues.push_back({"", "cannot read config file " + path.string()});
        return out;
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    ConfigResult out = validate_config_text(buffer.str(), experiment, path.parent_path());
    if (out.config && !out.config->document.value("output", Json::object()).contains("stem"))
        out.config->stem = path.stem().string();
    return out;
}

// ---------------------------------------------------------------------------
// Catalog

namespace {

Metric euclidean_ball() { return make_conformally_flat([](double) { return Jet{1.0, 0.0, 0.0}; }, "euclidean ball", 1.0); }

}  // namespace

Metric build_metric(const Json& spec) {
    const std::string kind = spec.at("kind").get<std::string>();
    if (kind == "flat") return make_flat();
    if (kind == "schwarzschild") return make_schwarzschild(spec.at("mass").get<double>());
    if (kind == "sphere-cap") return make_sphere_cap(spec.at("radius").get<double>());
    if (kind == "euclidean-ball") return euclidean_ball();
    if (kind == "conformally-flat") {
        const std::string profile = spec.at("profile").get<std::string>();
        const double excluded = spec.value("excluded_radius", 0.0);
        if (profile == "schwarzschild") {
            const double m = spec.at("mass").get<double>();
            std::ostringstream label;
            label << "conformally-flat schwarzschild(m=" << m << ")";
            return make_conformally_flat(schwarzschild_factor(m), label.str(), spec.value("decay_rate", 1.0), excluded);
        }
        if (profile == "bump") {
            const double m = spec.at("mass").get<double>(), a = spec.at("amplitude").get<double>();
            const double c = spec.at("center").get<double>(), w = spec.at("width").get<double>();
            std::ostringstream label;
            label << "bump(m=" << m << ", amplitude=" << a << ", center=" << c << ", width=" << w << ")";
            return make_conformally_flat(bump_factor(m, a, c, w), label.str(), spec.value("decay_rate", 1.0), excluded);
        }
        const double k = spec.at("coefficient").get<double>(), p = spec.at("exponent").get<double>();
        std::ostringstream label;
        label << "power(" << k << " r^-" << p << ")";
        return make_conformally_flat(power_factor(k, p), label.str(), spec.value("decay_rate", std::min(p, 1.0)),
                                     excluded);
    }
    if (kind == "spherically-symmetric") {
        const Json& A = spec.at("A");
        const Json& B = spec.at("B");
        const double pa = A.at("exponent").get<double>(), pb = B.at("exponent").get<double>();
        std::ostringstream label;
        label << "spherically-symmetric(A=1+" << A.at("coefficient").get<double>() << " r^-" << pa
              << ", B=1+" << B.at("coefficient").get<double>() << " r^-" << pb << ")";
        return make_spherically_symmetric(power_coefficient(A.at("coefficient").get<double>(), pa),
                                          power_coefficient(B.at("coefficient").get<double>(), pb), label.str(),
                                          spec.value("decay_rate", std::min({pa, pb, 1.0})),
                                          spec.value("excluded_radius", 0.0));
    }
    if (kind == "glued") {
        const Metric exterior = build_metric(spec.at("exterior"));
        const double r0 = spec.at("interface_radius").get<double>();
        const Json& f = spec.at("fillin");
        const Metric fillin = f.at("kind") == "matched-cap" ? matched_cap(exterior, r0) : build_metric(f);
        return make_glued(exterior, fillin, r0);
    }
    throw ConfigError("metric kind " + kind + " cannot be built on its own");
}

SurfaceModel build_surface(const Json& spec, const std::filesystem::path& base_dir) {
    const std::string kind = spec.at("kind").get<std::string>();
    SurfaceModel s = [&] {
        if (kind == "coordinate-sphere") return SurfaceModel::coordinate_sphere(spec.at("radius").get<double>());
        if (kind == "ellipsoid") return SurfaceModel::ellipsoid(spec.at("a").get<double>(), spec.at("c").get<double>());
        if (kind == "dumbbell") return SurfaceModel::dumbbell(spec.at("neck").get<double>());
        std::filesystem::path p = spec.at("path").get<std::string>();
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        return SurfaceModel::from_profile_file(p.string());
    }();
    if (spec.contains("scale")) s = SurfaceModel::scaled(s, spec.at("scale").get<double>());
    return s;
}

SurfaceFamily build_family(const Json& spec, const std::filesystem::path& base_dir) {
    if (spec.at("kind") == "coordinate-spheres") return SurfaceFamily::coordinate_spheres();
    return SurfaceFamily::scaled(build_surface(spec.at("base"), base_dir));
}

SolverOptions build_solver_options(const Json& spec) {
    SolverOptions o;
    if (spec.is_null()) return o;
    if (spec.contains("representation"))
        o.representation = spec.at("representation") == "grid3d" ? Representation::grid3d : Representation::separated;
    o.tolerance = spec.value("tolerance", o.tolerance);
    o.log_step = spec.value("log_step", o.log_step);
    o.r_max_factor = spec.value("r_max_factor", o.r_max_factor);
    o.start_fraction = spec.value("start_fraction", o.start_fraction);
    o.grid_half_width = spec.value("grid_half_width", o.grid_half_width);
    o.grid_spacing = spec.value("grid_spacing", o.grid_spacing);
    o.cg_tolerance = spec.value("cg_tolerance", o.cg_tolerance);
    o.cg_max_iterations = spec.value("cg_max_iterations", o.cg_max_iterations);
    return o;
}

}  // namespace mass_lab
