#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "critsense/config.hpp"
#include "critsense/runner.hpp"

namespace {

void list_scenarios(std::ostream& os) {
    for (const auto& s : critsense::scenarios()) {
        os << s.name << "\n    " << s.description << "\n";
        for (const auto& k : s.keys) os << "    - " << k.name << ": " << k.description << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"critical-point quantum sensing simulations"};
    std::string config_path;
    std::string out_dir;
    int jobs = 0;
    bool list = false;
    app.add_option("--config", config_path, "scenario configuration file");
    app.add_option("--out", out_dir, "output directory (overrides 'out' in the config)");
    app.add_option("--jobs", jobs, "worker threads (overrides 'jobs' in the config)")->check(CLI::PositiveNumber);
    app.add_flag("--list-scenarios", list, "print every scenario with its keys and exit");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : critsense::kExitConfigError;
    }
    if (list) {
        list_scenarios(std::cout);
        return critsense::kExitOk;
    }
    if (config_path.empty()) {
        std::cerr << "error: --config is required\n";
        return critsense::kExitConfigError;
    }

    std::ifstream in(config_path, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot read " << config_path << "\n";
        if (!out_dir.empty()) {
            critsense::write_error_record(out_dir, "", critsense::kExitConfigError, "ConfigError",
                                          {"cannot read " + config_path});
        }
        return critsense::kExitConfigError;
    }
    std::ostringstream text;
    text << in.rdbuf();

    critsense::RunConfig config;
    try {
        config = critsense::parse_config(text.str());
    } catch (const critsense::ConfigError& e) {
        for (const auto& m : e.errors()) std::cerr << "config error: " << m << "\n";
        if (!out_dir.empty()) {
            critsense::write_error_record(out_dir, "", critsense::kExitConfigError, "ConfigError", e.errors());
        }
        return critsense::kExitConfigError;
    }
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (jobs > 0) config.jobs = jobs;
    if (config.output_dir.empty()) {
        std::cerr << "error: no output directory (set 'out' in the config or pass --out)\n";
        return critsense::kExitConfigError;
    }
    return critsense::run(config, config.output_dir, std::cerr);
}
