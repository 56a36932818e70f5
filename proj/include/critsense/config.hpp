#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "critsense/jcm_analytics.hpp"

namespace critsense {

enum class ValueKind {
    number,          // name = x
    integer,         // name = n
    text,            // name = word
    number_list,     // name = a, b, c   or   name = linspace(a, b, n)
    frequency,       // name.value, name.unit, name.times_two_pi
    frequency_list,  // name.values, name.unit, name.times_two_pi
};

struct KeySpec {
    std::string name;
    ValueKind kind;
    std::string description;
    // Default in internal units; lists and numbers use `numbers`, text uses `text`.
    std::vector<double> numbers;
    std::string text;
    // Accepted range of every numeric entry.
    double lo = -1e300;
    double hi = 1e300;
    bool hi_open = false;
    bool lo_open = false;
    std::vector<std::string> choices;  // for text keys
};

struct ScenarioInfo {
    std::string name;
    std::string description;
    std::vector<KeySpec> keys;
};

// Every scenario the runner knows, with its [scenario] keys and defaults.
const std::vector<ScenarioInfo>& scenarios();
const ScenarioInfo& scenario_info(const std::string& name);

struct RunConfig {
    std::string scenario;
    std::string output_dir;  // empty when not given in the file
    int jobs = 1;
    SystemParams params;
    // Scenario keys with defaults filled in, frequencies converted to rad/us (or 1/us).
    std::map<std::string, std::vector<double>> values;
    std::map<std::string, std::string> texts;

    double number(const std::string& key) const;
    int integer(const std::string& key) const;
    const std::vector<double>& list(const std::string& key) const;
    const std::string& text(const std::string& key) const;
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> errors);
    const std::vector<std::string>& errors() const { return errors_; }

private:
    std::vector<std::string> errors_;
};

// Parses the INI-style text described in the README. Collects every problem
// and throws a single ConfigError listing all of them.
RunConfig parse_config(std::string_view text);

}  // namespace critsense
