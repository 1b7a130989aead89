#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ctube/error.hpp"

namespace ctube {

struct ConfigError : PreconditionError {
    ConfigError(int line, const std::string& what)
        : PreconditionError(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line(line) {}
    int line;
};

using ConfigValue = std::variant<long, double, std::string>;

struct ExperimentConfig {
    std::map<std::string, ConfigValue> values;  // every known key, defaults included
    std::set<std::string> defaulted;             // keys whose value is the default
    std::vector<std::pair<std::string, std::vector<ConfigValue>>> axes;  // sweep axes, in file order

    double real(const std::string& key) const;
    long integer(const std::string& key) const;
    const std::string& text(const std::string& key) const;
    bool operator==(const ExperimentConfig& other) const = default;
};

std::string version_string();
const std::vector<std::string>& command_names();

ExperimentConfig default_config();
ExperimentConfig parse_config(const std::string& text);
std::string emit_config(const ExperimentConfig& cfg);
// applies `key=value` on top of cfg (command line overrides)
void set_value(ExperimentConfig& cfg, const std::string& assignment);

struct RunResult {
    int status = 0;      // 0 pass, 1 a check failed, 2 error
    std::string reason;  // empty on pass
    std::string report;  // JSON text
    std::string csv;
};

// runs the command and writes <out_dir>/report.json and <out_dir>/data.csv; an empty out_dir writes nothing
RunResult run_command(const std::string& name, const ExperimentConfig& cfg, const std::string& out_dir);

}  // namespace ctube
