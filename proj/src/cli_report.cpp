#include "mass_lab/cli_reports.hpp"
#include "mass_lab/errors.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

namespace mass_lab {

namespace fs = std::filesystem;

namespace {

std::string csv_cell(const Cell& c) {
    if (const double* d = std::get_if<double>(&c)) return format_number(*d);
    std::string out = "\"";
    for (char ch : std::get<std::string>(c)) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

// Splits one CSV line; quoted cells come back as strings, others as numbers.
std::vector<Cell> split_csv_line(const std::string& line) {
    std::vector<Cell> cells;
    std::size_t i = 0;
    while (i <= line.size()) {
        if (i < line.size() && line[i] == '"') {
            std::string s;
            ++i;
            while (i < line.size()) {
                if (line[i] == '"') {
                    if (i + 1 < line.size() && line[i + 1] == '"') {
                        s += '"';
                        i += 2;
                        continue;
                    }
                    ++i;
                    break;
                }
                s += line[i++];
            }
            cells.emplace_back(std::move(s));
            if (i < line.size() && line[i] != ',') throw ArgumentError("malformed CSV cell in: " + line);
            ++i;
        } else {
            const std::size_t end = std::min(line.find(',', i), line.size());
            const std::string token = line.substr(i, end - i);
            if (token == "nan") cells.emplace_back(std::nan(""));
            else if (token == "inf") cells.emplace_back(HUGE_VAL);
            else if (token == "-inf") cells.emplace_back(-HUGE_VAL);
            else {
                std::size_t used = 0;
                double v = 0.0;
                try {
                    v = std::stod(token, &used);
                } catch (const std::exception&) {
                    used = 0;
                }
                if (used != token.size() || token.empty()) cells.emplace_back(token);
                else cells.emplace_back(v);
            }
            i = end + 1;
        }
    }
    return cells;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ArgumentError("cannot open " + path.string() + " for writing");
    os << content;
    os.close();
    if (!os) throw ArgumentError("write failed for " + path.string());
}

void remove_quietly(const fs::path& p) {
    std::error_code ec;
    fs::remove(p, ec);
}

}  // namespace

std::string format_number(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value == 0.0 ? 0.0 : value);  // no negative zero
    return buf;
}

std::string format_csv(const RunReport& report) {
    std::ostringstream os;
    os << "# mass-lab " << report.tool_version << " experiment=" << to_string(report.experiment)
       << " input=" << report.input_digest << " seed=" << report.seed << "\n";
    os << "# columns:";
    for (std::size_t i = 0; i < report.table.columns.size(); ++i) {
        os << (i ? ";" : "") << " " << report.table.columns[i];
        if (i < report.table.descriptions.size()) os << " = " << report.table.descriptions[i];
    }
    os << "\n";
    for (std::size_t i = 0; i < report.table.columns.size(); ++i) os << (i ? "," : "") << report.table.columns[i];
    os << "\n";
    for (const auto& row : report.table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_cell(row[i]);
        os << "\n";
    }
    return os.str();
}

ResultTable parse_csv(const std::string& text) {
    ResultTable t;
    std::istringstream is(text);
    std::string line;
    bool header = true;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            for (const Cell& c : split_csv_line(line))
                t.columns.push_back(std::holds_alternative<std::string>(c) ? std::get<std::string>(c)
                                                                            : format_number(std::get<double>(c)));
            header = false;
            continue;
        }
        auto row = split_csv_line(line);
        if (row.size() != t.columns.size())
            throw ArgumentError("CSV row has " + std::to_string(row.size()) + " cells, header has " +
                                std::to_string(t.columns.size()));
        t.rows.push_back(std::move(row));
    }
    return t;
}

Json to_json(const RunReport& report) {
    Json rows = Json::array();
    for (const auto& row : report.table.rows) {
        Json r = Json::array();
        for (const Cell& c : row) {
            if (const double* d = std::get_if<double>(&c)) r.push_back(std::isfinite(*d) ? Json(*d) : Json(nullptr));
            else r.push_back(std::get<std::string>(c));
        }
        rows.push_back(std::move(r));
    }
    Json summary = Json::object();
    for (const auto& [key, v] : report.summary.items())
        summary[key] = v.is_number_float() && !std::isfinite(v.get<double>()) ? Json(nullptr) : v;
    return Json{{"experiment", to_string(report.experiment)},
                {"tool_version", report.tool_version},
                {"input_digest", report.input_digest},
                {"seed", report.seed},
                {"wall_time_seconds", report.wall_time_seconds},
                {"status", "ok"},
                {"summary", summary},
                {"table",
                 {{"columns", report.table.columns}, {"descriptions", report.table.descriptions}, {"rows", rows}}}};
}

EmittedFiles emit_report(const RunReport& report, const fs::path& dir, const std::string& stem, bool csv,
                         bool json) {
    std::vector<std::pair<fs::path, std::string>> outputs;
    if (csv) outputs.emplace_back(dir / (stem + ".csv"), format_csv(report));
    if (json) outputs.emplace_back(dir / (stem + ".json"), to_json(report).dump(2) + "\n");

    EmittedFiles done;
    std::vector<fs::path> staged;
    try {
        fs::create_directories(dir);
        for (const auto& [target, content] : outputs) {
            fs::path tmp = target;
            tmp += ".partial";
            staged.push_back(tmp);
            write_file(tmp, content);
        }
        for (std::size_t i = 0; i < outputs.size(); ++i) {
            fs::rename(staged[i], outputs[i].first);
            done.paths.push_back(outputs[i].first);
        }
    } catch (...) {
        for (const auto& p : staged) remove_quietly(p);
        for (const auto& p : done.paths) remove_quietly(p);
        throw;
    }
    return done;
}

int exit_code_for(const std::exception_ptr& error) {
    if (!error) return 0;
    try {
        std::rethrow_exception(error);
    } catch (const SolverError&) {
        return 3;
    } catch (...) {
        return 2;
    }
}

}  // namespace mass_lab
