#include "mass_lab/cli_reports.hpp"
#include "mass_lab/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

using namespace mass_lab;
namespace fs = std::filesystem;

namespace {

bool mentions(const std::vector<ValidationIssue>& issues, const std::string& a, const std::string& b = "") {
    for (const auto& i : issues)
        if (i.message.find(a) != std::string::npos && i.message.find(b) != std::string::npos) return true;
    return false;
}

ExperimentConfig load(const std::string& text) {
    ConfigResult r = validate_config_text(text);
    for (const auto& i : r.issues) INFO(i.path << ": " << i.message);
    REQUIRE(r.ok());
    return *r.config;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("mass_lab_test_" + name);
    fs::remove_all(p);
    return p;
}

const char* converge_config = R"({
  "experiment": "converge",
  "metric": {"kind": "schwarzschild", "mass": 1.0},
  "family": {"kind": "coordinate-spheres"},
  "parameters": {"r_list": [10, 31.6, 100]}
})";

}  // namespace

TEST_CASE("minimal adm config validates without issues") {
    const ConfigResult r = validate_config_text(R"({"experiment": "adm", "metric": {"kind": "flat"}})");
    CHECK(r.ok());
    CHECK(r.issues.empty());
    CHECK(r.config->experiment == Experiment::adm);
    CHECK(r.config->seed == 1);
    CHECK(r.config->stem == "adm");
}

TEST_CASE("misspelled metric kind names the nearest match") {
    const ConfigResult r = validate_config_text(R"({"experiment": "adm", "metric": {"kind": "schwarzschield", "mass": 1}})");
    REQUIRE_FALSE(r.ok());
    CHECK(mentions(r.issues, "schwarzschield", "\"schwarzschild\""));
    CHECK(r.issues.front().path == "/metric/kind");
}

TEST_CASE("unknown fields and experiment names get suggestions") {
    const ConfigResult r = validate_config_text(
        R"({"experiment": "brown-york", "metric": {"kind": "flat"}, "surface": {"kind": "coordinate-sphere", "radus": 2}})");
    REQUIRE_FALSE(r.ok());
    CHECK(mentions(r.issues, "radus", "radius"));
    CHECK(nearest_match("brownyork", experiment_names()) == std::optional<std::string>("brown-york"));
    CHECK_FALSE(nearest_match("xyz", experiment_names()).has_value());
}

TEST_CASE("delta sequence must decrease strictly") {
    const char* text = R"({
      "experiment": "mollify",
      "metric": {"kind": "glued", "exterior": {"kind": "schwarzschild", "mass": 1},
                 "fillin": {"kind": "euclidean-ball"}, "interface_radius": 1},
      "parameters": {"deltas": [0.1, 0.1, 0.05]}
    })";
    const ConfigResult r = validate_config_text(text);
    REQUIRE_FALSE(r.ok());
    CHECK(mentions(r.issues, "strictly decreasing"));
}

TEST_CASE("every violation is reported") {
    const char* text = R"({
      "experiment": "adm",
      "metric": {"kind": "schwarzschild"},
      "solver": {"tolerance": 0},
      "resolution": {"n_theta": -3}
    })";
    const ConfigResult r = validate_config_text(text);
    REQUIRE_FALSE(r.ok());
    CHECK(r.issues.size() >= 3);
    CHECK(mentions(r.issues, "mass"));
    bool tolerance = false;
    for (const auto& i : r.issues) tolerance = tolerance || i.path == "/solver/tolerance";
    CHECK(tolerance);
}

TEST_CASE("experiment argument must agree with the config") {
    const ConfigResult r = validate_config_text(R"({"experiment": "adm", "metric": {"kind": "flat"}})", Experiment::kato);
    CHECK_FALSE(r.ok());
    CHECK(validate_config_text(R"({"metric": {"kind": "flat"}})", Experiment::adm).ok());
    CHECK_FALSE(validate_config_text(R"({"metric": {"kind": "flat"}})").ok());
    CHECK_FALSE(validate_config_text("{not json").ok());
}

TEST_CASE("numbers print with 17 significant digits") {
    CHECK(format_number(0.1) == "0.10000000000000001");
    CHECK(format_number(10.0) == "10");
    CHECK(format_number(-0.0) == "0");
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(format_number(-HUGE_VAL) == "-inf");
    CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("converge on Schwarzschild spheres") {
    const RunReport rep = run_experiment(load(converge_config));
    REQUIRE(rep.table.rows.size() == 3);
    CHECK(rep.table.columns == std::vector<std::string>{"r", "area", "min_K", "m_BY", "flag"});
    CHECK(std::get<double>(rep.table.rows[0][0]) == 10.0);
    CHECK(std::get<double>(rep.table.rows[0][3]) == doctest::Approx(1.05).epsilon(1e-3));
    CHECK(std::get<double>(rep.table.rows[2][0]) == 100.0);
    CHECK(std::get<double>(rep.table.rows[2][3]) == doctest::Approx(1.005).epsilon(1e-3));
}

TEST_CASE("CSV re-parse round-trips exactly") {
    RunReport rep = run_experiment(load(converge_config));
    rep.table.rows.push_back({std::nan(""), HUGE_VAL, -0.0, 1e-300, std::string("quote \" and, comma")});
    const ResultTable back = parse_csv(format_csv(rep));
    CHECK(back.columns == rep.table.columns);
    REQUIRE(back.rows.size() == rep.table.rows.size());
    for (std::size_t i = 0; i < back.rows.size(); ++i)
        for (std::size_t j = 0; j < back.rows[i].size(); ++j) {
            const Cell& a = rep.table.rows[i][j];
            const Cell& b = back.rows[i][j];
            REQUIRE(a.index() == b.index());
            if (const double* x = std::get_if<double>(&a)) {
                const double y = std::get<double>(b);
                CHECK((std::isnan(*x) ? std::isnan(y) : (*x == y && (same_bits(*x, y) || *x == 0.0))));
            } else {
                CHECK(std::get<std::string>(a) == std::get<std::string>(b));
            }
        }
}

TEST_CASE("identical config and seed give byte-identical CSV") {
    const char* text = R"({
      "experiment": "kato",
      "metric": {"kind": "schwarzschild", "mass": 1},
      "parameters": {"inner": {"kind": "dirichlet", "radius": 1}},
      "resolution": {"samples": 500},
      "seed": 11
    })";
    const ExperimentConfig cfg = load(text);
    const std::string a = format_csv(run_experiment(cfg));
    const std::string b = format_csv(run_experiment(cfg));
    CHECK(a == b);
    ExperimentConfig other = cfg;
    other.seed = 12;
    CHECK(run_experiment(other).input_digest != run_experiment(cfg).input_digest);
}

TEST_CASE("JSON reports satisfy the shipped schema") {
    for (const char* text : {converge_config,
                             R"({"experiment": "robin", "metric": {"kind": "schwarzschild", "mass": 1}, "parameters": {"radius": 1}})",
                             R"({"experiment": "fillin", "metric": {"kind": "schwarzschild", "mass": 1},
                                 "surface": {"kind": "coordinate-sphere", "radius": 1}, "resolution": {"n_theta": 8}})"}) {
        const Json doc = to_json(run_experiment(load(text)));
        const auto issues = validate_schema(doc, report_schema());
        for (const auto& i : issues) INFO(i.path << ": " << i.message);
        CHECK(issues.empty());
    }
    Json bad = to_json(run_experiment(load(converge_config)));
    bad["input_digest"] = "md5:123";
    CHECK_FALSE(validate_schema(bad, report_schema()).empty());
}

TEST_CASE("empty result set gives a header-only CSV") {
    RunReport rep;
    rep.experiment = Experiment::converge;
    rep.tool_version = "test";
    rep.input_digest = input_digest(Json::object(), 1);
    rep.table.columns = {"r", "m_BY"};
    rep.table.descriptions = {"scale", "mass"};
    const fs::path dir = scratch("empty");
    const EmittedFiles files = emit_report(rep, dir, "empty", true, true);
    CHECK(files.paths.size() == 2);
    std::ifstream in(dir / "empty.csv");
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string csv = ss.str();
    CHECK(csv.substr(csv.find("\nr,")) == "\nr,m_BY\n");
    CHECK(parse_csv(csv).rows.empty());
    CHECK(validate_schema(to_json(rep), report_schema()).empty());
    fs::remove_all(dir);
}

TEST_CASE("failed emission leaves no files behind") {
    RunReport rep;
    rep.tool_version = "test";
    rep.input_digest = input_digest(Json::object(), 1);
    rep.table.columns = {"radius", "value"};
    const fs::path dir = scratch("partial");
    fs::create_directories(dir / "out.json");  // the JSON rename cannot replace a directory
    CHECK_THROWS(emit_report(rep, dir, "out", true, true));
    CHECK_FALSE(fs::exists(dir / "out.csv"));
    CHECK_FALSE(fs::exists(dir / "out.csv.partial"));
    CHECK_FALSE(fs::exists(dir / "out.json.partial"));
    fs::remove_all(dir);
}

TEST_CASE("non-convex surface is a precondition failure") {
    const ExperimentConfig cfg = load(R"({
      "experiment": "brown-york",
      "metric": {"kind": "schwarzschild", "mass": 1},
      "surface": {"kind": "dumbbell", "neck": 0.3, "scale": 10}
    })");
    std::exception_ptr error;
    try {
        (void)run_experiment(cfg);
    } catch (...) {
        error = std::current_exception();
    }
    REQUIRE(error);
    CHECK(exit_code_for(error) == 2);
    try {
        std::rethrow_exception(error);
    } catch (const PreconditionError& e) {
        CHECK(std::string(e.what()).find("Gauss curvature non-positive") != std::string::npos);
    }
    CHECK(exit_code_for(std::make_exception_ptr(SolverError("diverged"))) == 3);
    CHECK(exit_code_for(nullptr) == 0);
}

TEST_CASE("bkks-verify on the glued Schwarzschild model") {
    const RunReport rep = run_experiment(load(R"({
      "experiment": "bkks-verify",
      "metric": {"kind": "glued", "exterior": {"kind": "schwarzschild", "mass": 1},
                 "fillin": {"kind": "euclidean-ball"}, "interface_radius": 1}
    })"));
    CHECK(std::abs(rep.summary.at("residual").get<double>()) < 1e-3);
    CHECK(rep.summary.at("passed").get<bool>());
    CHECK(rep.summary.at("corner_term").get<double>() == doctest::Approx(0.5).epsilon(1e-3));
}
