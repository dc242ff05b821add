#pragma once

#include "mass_lab/harmonic_solver.hpp"
#include "mass_lab/metric_models.hpp"
#include "mass_lab/surface_geometry.hpp"

#include <json.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace mass_lab {

using Json = nlohmann::json;

enum class Experiment { adm, brown_york, bkks_verify, fillin, mollify, converge, kato, robin };

std::string to_string(Experiment e);
std::optional<Experiment> parse_experiment(const std::string& name);
const std::vector<std::string>& experiment_names();

// Closest candidate by edit distance, if any is within a third of the word length (at least 2).
std::optional<std::string> nearest_match(const std::string& word, const std::vector<std::string>& candidates);

struct ValidationIssue {
    std::string path;  // JSON pointer of the offending value
    std::string message;
};

// Validates against the subset of JSON Schema used by the shipped schemas:
// type, enum, properties, required, additionalProperties, items, minItems,
// minLength, pattern, minimum, maximum, exclusiveMinimum, exclusiveMaximum
// and local $ref. Unknown enum strings get a nearest-match hint.
std::vector<ValidationIssue> validate_schema(const Json& document, const Json& schema);

const Json& config_schema();
const Json& report_schema();

struct ExperimentConfig {
    Experiment experiment = Experiment::adm;
    Json document;          // as read, used for the digest
    std::uint64_t seed = 1;
    std::string stem;       // output file stem; defaults to the config file name, else the experiment
    bool emit_csv = true;
    bool emit_json = true;
    std::filesystem::path base_dir;  // relative paths in the config resolve here
};

struct ConfigResult {
    std::optional<ExperimentConfig> config;
    std::vector<ValidationIssue> issues;
    [[nodiscard]] bool ok() const { return config.has_value(); }
};

// Parses and validates; every violation found is reported. When the
// experiment is given it must agree with the config's own field, if any.
ConfigResult validate_config_text(const std::string& text, std::optional<Experiment> experiment = std::nullopt,
                                  const std::filesystem::path& base_dir = {});
ConfigResult validate_config(const std::filesystem::path& path, std::optional<Experiment> experiment = std::nullopt);

// Catalog constructors from validated specs.
Metric build_metric(const Json& spec);
SurfaceModel build_surface(const Json& spec, const std::filesystem::path& base_dir = {});
SurfaceFamily build_family(const Json& spec, const std::filesystem::path& base_dir = {});
SolverOptions build_solver_options(const Json& spec);

using Cell = std::variant<double, std::string>;

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::string> descriptions;  // one per column
    std::vector<std::vector<Cell>> rows;
};

struct RunReport {
    Experiment experiment = Experiment::adm;
    std::string input_digest;  // fnv1a64 of the canonical config and seed
    std::string tool_version;
    std::uint64_t seed = 1;
    double wall_time_seconds = 0.0;
    ResultTable table;
    Json summary = Json::object();
};

// FNV-1a 64-bit digest, formatted "fnv1a64:<16 hex digits>".
std::string input_digest(const Json& document, std::uint64_t seed);

RunReport run_experiment(const ExperimentConfig& config);

// 17 significant digits; non-finite values print as nan / inf / -inf.
std::string format_number(double value);

// Two comment lines (tool, digest, column documentation), then the column
// header and one line per row.
std::string format_csv(const RunReport& report);
Json to_json(const RunReport& report);

// Rows of a CSV produced by format_csv, comments skipped.
ResultTable parse_csv(const std::string& text);

struct EmittedFiles {
    std::vector<std::filesystem::path> paths;
};

// Writes <stem>.csv and/or <stem>.json under dir. Files are staged next to
// their targets and renamed once all have been written; on any failure the
// staged and already renamed files are removed.
EmittedFiles emit_report(const RunReport& report, const std::filesystem::path& dir, const std::string& stem,
                         bool csv = true, bool json = true);

// 0 success, 3 solver failure, 2 otherwise.
int exit_code_for(const std::exception_ptr& error);

}  // namespace mass_lab
