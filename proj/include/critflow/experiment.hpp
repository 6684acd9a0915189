#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "critflow/error.hpp"
#include "critflow/field.hpp"

namespace critflow {

// Flat key = value configuration with dotted keys (grid.N = 32). Only keys
// from the registry are accepted; values are type-checked on assignment.
class ExperimentConfig {
public:
    // Registry defaults with the scenario's own overrides applied.
    // Unknown scenario ids raise InvalidConfig.
    explicit ExperimentConfig(const std::string& scenario);

    const std::string& scenario() const { return scenario_; }

    void set(const std::string& key, const std::string& value);
    // "key=value", as given to --set.
    void set_assignment(const std::string& assignment);
    // Lines of key = value; '#' starts a comment. A "scenario" key must match.
    void merge_text(const std::string& text, const std::string& origin = "config");
    void merge_file(const std::filesystem::path& path);

    const std::string& get(const std::string& key) const;
    double real(const std::string& key) const;
    int integer(const std::string& key) const;
    std::uint64_t seed() const;
    std::vector<double> reals(const std::string& key) const;
    std::vector<std::string> words(const std::string& key) const;

    // Module preconditions checked before any work starts.
    void validate() const;

    const std::map<std::string, std::string>& values() const { return values_; }
    std::string text() const;  // every key, sorted, as key = value lines

private:
    std::string scenario_;
    std::map<std::string, std::string> values_;
};

std::vector<std::string> scenario_ids();
std::string scenario_description(const std::string& id);

struct SummaryRow {
    std::string check;
    double value = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool pass = false;
    std::string source;  // table:row the value was copied from
};

struct ReportBundle {
    std::string scenario;
    std::vector<std::pair<std::string, std::string>> manifest;  // key = value, in order
    std::vector<std::pair<std::string, std::string>> tables;    // file name, CSV content
    std::vector<std::pair<std::string, RealField>> fields;      // file name, field
    std::vector<SummaryRow> summary;

    bool passed() const;
    // check,value,lower,upper,pass,source
    std::string summary_csv() const;
    // Range check recorded as a summary row.
    void expect(const std::string& check, double value, double lower, double upper, const std::string& source);
};

// Runs the scenario named in cfg. Results accumulate in `bundle` as they are
// produced, so a failing run leaves the completed stages behind. Errors carry
// the stage that raised them.
void run_scenario(const ExperimentConfig& cfg, ReportBundle& bundle);
ReportBundle run_scenario(const ExperimentConfig& cfg);

// Writes <dir>/<scenario>/ through a temporary directory and a rename.
// File names depend only on the scenario and table names; the manifest
// timestamp is the only run-dependent content. Returns the written paths.
std::vector<std::filesystem::path> write_report(const ReportBundle& bundle, const std::filesystem::path& dir,
                                                bool with_timestamp = true);

// 0 pass, 1 threshold failure, 2 usage or config error, 3 numerical failure.
int exit_code(ErrorKind k);
constexpr int exit_pass = 0;
constexpr int exit_threshold = 1;
constexpr int exit_usage = 2;
constexpr int exit_numerical = 3;

std::string code_version();

}  // namespace critflow
