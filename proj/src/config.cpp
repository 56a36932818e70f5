#include "critsense/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "critsense/csv.hpp"

namespace critsense {

namespace {

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
    return v;
}

std::vector<double> two_pi(std::vector<double> v) {
    for (double& x : v) x *= kTwoPi;
    return v;
}

constexpr double kInf = 1e300;

KeySpec number(std::string name, std::string desc, double def, double lo = -kInf, double hi = kInf,
               bool hi_open = false) {
    KeySpec k{std::move(name), ValueKind::number, std::move(desc), {def}, {}, lo, hi, hi_open, false, {}};
    return k;
}

KeySpec integer(std::string name, std::string desc, int def, double lo, double hi) {
    return {std::move(name), ValueKind::integer, std::move(desc), {static_cast<double>(def)}, {}, lo, hi,
            false, false, {}};
}

KeySpec list(std::string name, std::string desc, std::vector<double> def, double lo = -kInf, double hi = kInf,
             bool hi_open = false) {
    return {std::move(name), ValueKind::number_list, std::move(desc), std::move(def), {}, lo, hi, hi_open, false, {}};
}

KeySpec freq(std::string name, std::string desc, double def, double lo = -kInf, bool lo_open = false) {
    return {std::move(name), ValueKind::frequency, std::move(desc), {def}, {}, lo, kInf, false, lo_open, {}};
}

KeySpec freq_list(std::string name, std::string desc, std::vector<double> def, double lo = -kInf,
                  bool lo_open = false) {
    return {std::move(name), ValueKind::frequency_list, std::move(desc), std::move(def), {}, lo, kInf, false,
            lo_open, {}};
}

KeySpec text(std::string name, std::string desc, std::string def, std::vector<std::string> choices) {
    return {std::move(name), ValueKind::text, std::move(desc), {}, std::move(def), -kInf, kInf, false, false,
            std::move(choices)};
}

KeySpec epsilon_target(double def) {
    return number("epsilon_target", "working point the ramp stops at", def, 0.0, 1.0, true);
}

KeySpec fock_cutoff() {
    return integer("fock_cutoff", "Fock cutoff N_max; 0 picks 30 up to eps 0.9 and 60 beyond", 0, 0, 1000);
}

KeySpec n_samples() { return integer("n_samples", "uniform trajectory samples", 400, 1, 1000000); }

std::vector<ScenarioInfo> build_scenarios() {
    std::vector<ScenarioInfo> s;
    s.push_back({"fig2-quench",
                 "two-level quench: trajectory and P_e versus eps for several ramp coefficients",
                 {epsilon_target(0.99), freq_list("k_values", "ramp coefficients for the P_e(eps) curves, 1/us",
                                                  {5.0, 10.0, 20.0}, 0.0, true),
                  fock_cutoff(), n_samples()}});
    s.push_back({"fig3-metrology",
                 "closed-form P_e, dP_e/deps, SNR and Fisher information, and F versus ramp time",
                 {list("epsilon", "control parameter grid", linspace(0.0, 0.99, 100), 0.0, 1.0, true),
                  list("time", "ramp times for F(t), us", linspace(0.0, 0.7, 71), 0.0)}});
    s.push_back({"fisher-scan",
                 "closed-form versus simulated Fisher information",
                 {list("epsilon", "working points (at least 3, increasing)", linspace(0.8, 0.98, 10), 0.0, 1.0, true),
                  text("derivative", "dP_e/deps from finite differences or the fitted curve", "finite_difference",
                       {"finite_difference", "fit"}),
                  fock_cutoff()}});
    s.push_back({"figS1-master",
                 "master-equation quench: fidelity and ratios of <n> and P_e to the dark state",
                 {epsilon_target(0.99), fock_cutoff(), n_samples()}});
    s.push_back({"figS2-frequency",
                 "P_e and <n> at the working point versus signal detuning",
                 {freq_list("delta_omega", "signal detunings, rad/us", two_pi(linspace(-0.2, 0.2, 9))),
                  number("epsilon_w", "working point", 0.98, 0.0, 1.0, true),
                  text("detuning_mode", "detuning on the resonator only or on both", "resonator",
                       {"resonator", "common"}),
                  fock_cutoff()}});
    s.push_back({"figS3-scan",
                 "relative error D of P_e versus working point and ramp coefficient",
                 {list("epsilon_w", "working points", linspace(0.8, 0.98, 10), 0.0, 1.0, true),
                  freq_list("k_values", "ramp coefficients, 1/us", linspace(2.0, 20.0, 10), 0.0, true),
                  freq_list("kappa_q_sets", "qubit decay of each rate set, 1/us", {0.05}, 0.0),
                  freq_list("kappa_r_sets", "resonator decay of each rate set, 1/us", {0.08}, 0.0),
                  freq_list("gamma_q_sets", "qubit dephasing of each rate set, 1/us", {0.08}, 0.0),
                  fock_cutoff()}});
    s.push_back({"figS4-qutrit",
                 "resonant qutrit quench: fidelity, <n> and P_g, P_e, P_f versus eps",
                 {epsilon_target(0.99), fock_cutoff(), n_samples()}});
    s.push_back({"figS5-detuning",
                 "max P_f of the detuned qutrit quench over a detuning grid",
                 {freq_list("delta_r", "resonator detunings, rad/us", two_pi({-2.4, -2.0, -1.6, -1.2, -0.8})),
                  freq_list("delta_e", "qubit detunings, rad/us", two_pi({0.6, 0.8, 1.0, 1.2, 1.4})),
                  epsilon_target(0.98), fock_cutoff()}});
    s.push_back({"figS5-detuned-quench",
                 "qutrit quench at fixed detunings: fidelity, <n> and populations versus eps",
                 {freq("delta_r", "resonator detuning, rad/us", -1.6 * kTwoPi),
                  freq("delta_e", "qubit detuning, rad/us", 1.0 * kTwoPi), epsilon_target(0.98), fock_cutoff(),
                  n_samples()}});
    s.push_back({"figS6-crosstalk",
                 "synthetic crosstalk sweeps, extracted amplitude and phase, and the corrected drive",
                 {freq("crosstalk_amplitude", "true crosstalk Rabi rate, rad/us", 0.5 * kTwoPi, 0.0),
                  number("crosstalk_phase", "true crosstalk phase, rad", 1.0),
                  freq_list("offsets", "drive frequency offsets, rad/us", two_pi(linspace(-1.0, 1.0, 21))),
                  number("tau_max", "trace length, us", 4.0, 0.0),
                  integer("tau_points", "samples per trace", 401, 8, 100000),
                  integer("phase_points", "cancellation phases over [0, 2 pi)", 72, 3, 100000),
                  number("m12_amplitude", "crosstalk matrix entry used for the correction example", 0.1, 0.0, 1.0,
                         true),
                  number("m12_phase", "phase of that entry, rad", kPi),
                  number("m21_amplitude", "second off-diagonal amplitude", 0.0, 0.0, 1.0, true),
                  number("m21_phase", "second off-diagonal phase, rad", 0.0)}});
    s.push_back({"figS7-drive",
                 "drive strength G versus pulse amplitude from displacement magnitudes",
                 {number("tau", "drive duration, us", 0.1, 0.0),
                  list("amplitudes", "pulse amplitudes", linspace(0.1, 1.0, 10)),
                  freq("slope", "synthetic G per unit amplitude, 1/us", 10.0)}});
    s.push_back({"figS8-tomography",
                 "photon-number distribution recovered from a synthetic Rabi signal",
                 {freq("omega_a", "swap rate, rad/us", 20.9 * kTwoPi, 0.0, true),
                  freq("kappa_fit", "base decay rate of the n-photon oscillation, 1/us", 0.08, 0.0),
                  number("l", "decay exponent", 0.7), number("pg0", "initial ground probability", 1.0, 0.0, 1.0),
                  integer("n_max", "largest photon number fitted", 10, 0, 200),
                  number("source_epsilon", "dark-state photon distribution used as ground truth", 0.964, 0.0, 1.0,
                         true),
                  number("tau_max", "signal length, us", 1.0, 0.0),
                  integer("tau_points", "signal samples", 400, 3, 1000000),
                  number("noise_sigma", "Gaussian noise added to P_e", 0.0, 0.0),
                  integer("seed", "noise seed", 1, 0, 4294967295.0),
                  text("decay_model", "kappa_n = n^l kappa_fit (product) or n^l / kappa_fit (reciprocal)", "product",
                       {"product", "reciprocal"})}});
    s.push_back({"ramping-time",
                 "P_e at a fixed working point versus total ramp time",
                 {epsilon_target(0.985), list("t_factors", "ramp times in units of T at the configured k",
                                              linspace(0.7, 1.3, 7), 0.0),
                  fock_cutoff()}});
    s.push_back({"rabi-comparison",
                 "conventional Rabi estimate: amplitude and timing errors",
                 {freq("eps0", "bias Rabi rate, rad/us", kTwoPi, 0.0, true),
                  list("n_values", "odd bias orders", {1.0, 3.0, 5.0}, 1.0),
                  list("delta_eps_rel", "amplitude errors relative to eps0", linspace(-0.02, 0.02, 9)),
                  list("delta_t", "timing errors, us", linspace(-0.01, 0.01, 9))}});
    s.push_back({"figS9-budget",
                 "Fisher information error budget: non-adiabaticity and decoherence",
                 {list("epsilon", "working points (at least 3, increasing)",
                       {0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.85, 0.9, 0.95, 0.97, 0.98, 0.985}, 0.0, 1.0, true),
                  text("derivative", "dP_e/deps from finite differences or the fitted curve", "finite_difference",
                       {"finite_difference", "fit"}),
                  fock_cutoff()}});
    s.push_back({"gate-infidelity",
                 "single-qubit gate infidelity versus rotation angle and amplitude error",
                 {list("phi", "rotation angles, rad", linspace(0.0, kTwoPi, 37), 0.0, kTwoPi),
                  list("delta_eps", "relative amplitude errors", linspace(-0.1, 0.1, 21), -1.0, 1.0, true),
                  number("theta", "rotation axis angle in the xy plane, rad", 0.0)}});
    s.push_back({"iontrap",
                 "trapped-ion mapping of P_e",
                 {list("lambda", "coupling values", linspace(0.0, 0.5, 51), 0.0),
                  number("eta0", "eta_0", 1.0, 0.0), number("chi0", "chi_0", 1.0, 0.0)}});
    return s;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

bool parse_double(std::string_view s, double& out) {
    const std::string t = trim(s);
    if (t.empty()) return false;
    const char* first = t.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), out);
    return ec == std::errc() && ptr == t.data() + t.size() && std::isfinite(out);
}

bool parse_list(std::string_view s, std::vector<double>& out, std::string& why) {
    out.clear();
    const std::string t = trim(s);
    if (t.rfind("linspace(", 0) == 0 && t.back() == ')') {
        std::vector<double> args;
        if (!parse_list(t.substr(9, t.size() - 10), args, why) || args.size() != 3) {
            why = "linspace takes (start, stop, count)";
            return false;
        }
        if (!(args[2] >= 1.0) || args[2] != std::floor(args[2]) || args[2] > 1e6) {
            why = "linspace count must be a positive integer";
            return false;
        }
        out = linspace(args[0], args[1], static_cast<int>(args[2]));
        return true;
    }
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, ',')) {
        double v;
        if (!parse_double(item, v)) {
            why = "'" + trim(item) + "' is not a number";
            return false;
        }
        out.push_back(v);
    }
    if (out.empty()) {
        why = "empty list";
        return false;
    }
    return true;
}

std::string describe_range(const KeySpec& k) {
    std::ostringstream os;
    os << (k.lo_open ? '(' : '[');
    if (k.lo <= -kInf) os << "-inf";
    else os << k.lo;
    os << ", ";
    if (k.hi >= kInf) os << "inf";
    else os << k.hi;
    os << (k.hi_open ? ')' : ']');
    return os.str();
}

bool in_range(const KeySpec& k, double v) {
    if (k.lo_open ? !(v > k.lo) : !(v >= k.lo)) return false;
    if (k.hi_open ? !(v < k.hi) : !(v <= k.hi)) return false;
    return true;
}

// Raw "key -> value" entries of one INI section, grouped by the part before the first '.'.
using Group = std::map<std::string, std::string>;  // suffix ("" for a plain key) -> value

std::map<std::string, Group> group_keys(const boost::property_tree::ptree& section) {
    std::map<std::string, Group> groups;
    for (const auto& [key, child] : section) {
        const auto dot = key.find('.');
        const std::string base = dot == std::string::npos ? key : key.substr(0, dot);
        const std::string suffix = dot == std::string::npos ? "" : key.substr(dot + 1);
        groups[base][suffix] = child.data();
    }
    return groups;
}

class Parser {
public:
    std::vector<std::string> errors;

    // Reads one key of the given spec from its group; returns false on error.
    bool read(const std::string& section, const KeySpec& spec, const Group& g, std::vector<double>& nums,
              std::string& txt) {
        const std::string where = section + "." + spec.name;
        const bool frequency = spec.kind == ValueKind::frequency || spec.kind == ValueKind::frequency_list;
        if (!frequency) {
            if (g.size() != 1 || g.count("") == 0) {
                errors.push_back(where + ": expected a plain '" + spec.name + " = ...' entry");
                return false;
            }
            const std::string& raw = g.at("");
            switch (spec.kind) {
                case ValueKind::text:
                    txt = trim(raw);
                    if (!spec.choices.empty() &&
                        std::find(spec.choices.begin(), spec.choices.end(), txt) == spec.choices.end()) {
                        std::string opts;
                        for (const auto& c : spec.choices) opts += (opts.empty() ? "" : "|") + c;
                        errors.push_back(where + ": '" + txt + "' is not one of " + opts);
                        return false;
                    }
                    return true;
                case ValueKind::number:
                case ValueKind::integer: {
                    double v;
                    if (!parse_double(raw, v)) {
                        errors.push_back(where + ": '" + trim(raw) + "' is not a number");
                        return false;
                    }
                    if (spec.kind == ValueKind::integer && v != std::floor(v)) {
                        errors.push_back(where + ": '" + trim(raw) + "' is not an integer");
                        return false;
                    }
                    nums = {v};
                    return check_range(where, spec, nums);
                }
                case ValueKind::number_list: {
                    std::string why;
                    if (!parse_list(raw, nums, why)) {
                        errors.push_back(where + ": " + why);
                        return false;
                    }
                    return check_range(where, spec, nums);
                }
                default: break;
            }
            return false;
        }

        const bool is_list = spec.kind == ValueKind::frequency_list;
        const std::string value_key = is_list ? "values" : "value";
        bool ok = true;
        for (const auto& [suffix, _] : g) {
            if (suffix != value_key && suffix != "unit" && suffix != "times_two_pi") {
                errors.push_back(where + (suffix.empty() ? "" : "." + suffix) + ": frequency-like keys take '" +
                                 spec.name + "." + value_key + "', '" + spec.name + ".unit' and '" + spec.name +
                                 ".times_two_pi'");
                ok = false;
            }
        }
        if (!g.count(value_key)) {
            errors.push_back(where + ": missing '" + spec.name + "." + value_key + "'");
            ok = false;
        }
        if (!g.count("unit")) {
            errors.push_back(where + ": missing unit flag '" + spec.name + ".unit' (MHz or rad_per_us)");
            ok = false;
        } else {
            const std::string u = trim(g.at("unit"));
            if (u != "MHz" && u != "rad_per_us") {
                errors.push_back(where + ".unit: '" + u + "' is not MHz or rad_per_us");
                ok = false;
            }
        }
        bool times_two_pi = false;
        if (!g.count("times_two_pi")) {
            errors.push_back(where + ": missing unit flag '" + spec.name + ".times_two_pi' (true or false)");
            ok = false;
        } else {
            const std::string b = trim(g.at("times_two_pi"));
            if (b == "true") times_two_pi = true;
            else if (b != "false") {
                errors.push_back(where + ".times_two_pi: '" + b + "' is not true or false");
                ok = false;
            }
        }
        if (!ok) return false;
        std::string why;
        if (is_list) {
            if (!parse_list(g.at(value_key), nums, why)) {
                errors.push_back(where + "." + value_key + ": " + why);
                return false;
            }
        } else {
            double v;
            if (!parse_double(g.at(value_key), v)) {
                errors.push_back(where + ".value: '" + trim(g.at(value_key)) + "' is not a number");
                return false;
            }
            nums = {v};
        }
        if (times_two_pi) {
            for (double& x : nums) x *= kTwoPi;
        }
        return check_range(where, spec, nums);
    }

private:
    bool check_range(const std::string& where, const KeySpec& spec, const std::vector<double>& nums) {
        for (double v : nums) {
            if (!in_range(spec, v)) {
                errors.push_back(where + ": value " + format_number(v) + " is out of range " + describe_range(spec));
                return false;
            }
        }
        return true;
    }
};

struct ParamField {
    const char* name;
    double SystemParams::*member;
    double lo;
    bool lo_open;
};

const ParamField kParamFields[] = {
    {"omega", &SystemParams::omega, 0.0, true},      {"k", &SystemParams::k, 0.0, true},
    {"kappa_q", &SystemParams::kappa_q, 0.0, false}, {"kappa_r", &SystemParams::kappa_r, 0.0, false},
    {"gamma_q", &SystemParams::gamma_q, 0.0, false}, {"chi", &SystemParams::chi, 0.0, false},
    {"delta_r", &SystemParams::delta_r, -kInf, false}, {"delta_e", &SystemParams::delta_e, -kInf, false},
};

}  // namespace

const std::vector<ScenarioInfo>& scenarios() {
    static const std::vector<ScenarioInfo> s = build_scenarios();
    return s;
}

const ScenarioInfo& scenario_info(const std::string& name) {
    for (const auto& s : scenarios()) {
        if (s.name == name) return s;
    }
    throw std::out_of_range("unknown scenario '" + name + "'");
}

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error([&] {
          std::string msg = "invalid configuration:";
          for (const auto& e : errors) msg += "\n  " + e;
          return msg;
      }()),
      errors_(std::move(errors)) {}

double RunConfig::number(const std::string& key) const {
    const auto it = values.find(key);
    if (it == values.end() || it->second.size() != 1) throw std::out_of_range("config has no scalar '" + key + "'");
    return it->second.front();
}

int RunConfig::integer(const std::string& key) const { return static_cast<int>(std::llround(number(key))); }

const std::vector<double>& RunConfig::list(const std::string& key) const {
    const auto it = values.find(key);
    if (it == values.end()) throw std::out_of_range("config has no list '" + key + "'");
    return it->second;
}

const std::string& RunConfig::text(const std::string& key) const {
    const auto it = texts.find(key);
    if (it == texts.end()) throw std::out_of_range("config has no text '" + key + "'");
    return it->second;
}

RunConfig parse_config(std::string_view text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream in{std::string(text)};
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError({std::string("syntax: ") + e.message() + " (line " + std::to_string(e.line()) + ")"});
    }

    Parser p;
    RunConfig cfg;
    const pt::ptree* params = nullptr;
    const pt::ptree* settings = nullptr;
    bool have_scenario = false;
    for (const auto& [key, child] : tree) {
        if (key == "params" && !child.empty()) {
            params = &child;
        } else if (key == "settings" && !child.empty()) {
            settings = &child;
        } else if (key == "params" || key == "settings") {
            // empty section
        } else if (!child.empty()) {
            p.errors.push_back("unknown section [" + key + "]");
        } else if (key == "scenario") {
            cfg.scenario = trim(child.data());
            have_scenario = true;
        } else if (key == "out") {
            cfg.output_dir = trim(child.data());
        } else if (key == "jobs") {
            double v;
            if (!parse_double(child.data(), v) || v < 1.0 || v != std::floor(v) || v > 4096) {
                p.errors.push_back("jobs: '" + trim(child.data()) + "' is not a positive integer");
            } else {
                cfg.jobs = static_cast<int>(v);
            }
        } else {
            p.errors.push_back("unknown top-level key '" + key + "'");
        }
    }

    const ScenarioInfo* info = nullptr;
    if (!have_scenario) {
        p.errors.push_back("scenario: missing 'scenario = <name>'");
    } else {
        try {
            info = &scenario_info(cfg.scenario);
        } catch (const std::out_of_range&) {
            p.errors.push_back("scenario: unknown scenario '" + cfg.scenario + "' (see --list-scenarios)");
        }
    }

    if (params) {
        const auto groups = group_keys(*params);
        for (const auto& [base, g] : groups) {
            const auto* field = std::find_if(std::begin(kParamFields), std::end(kParamFields),
                                             [&](const ParamField& f) { return base == f.name; });
            if (field == std::end(kParamFields)) {
                p.errors.push_back("params." + base + ": unknown parameter");
                continue;
            }
            KeySpec spec = freq(field->name, "", 0.0, field->lo, field->lo_open);
            std::vector<double> nums;
            std::string unused;
            if (p.read("params", spec, g, nums, unused)) cfg.params.*(field->member) = nums.front();
        }
    }

    if (info) {
        std::map<std::string, Group> groups;
        if (settings) groups = group_keys(*settings);
        for (const auto& [base, g] : groups) {
            const bool known = std::any_of(info->keys.begin(), info->keys.end(),
                                           [&](const KeySpec& k) { return k.name == base; });
            if (!known) p.errors.push_back("settings." + base + ": unknown key for scenario " + info->name);
        }
        for (const auto& spec : info->keys) {
            std::vector<double> nums = spec.numbers;
            std::string txt = spec.text;
            const auto it = groups.find(spec.name);
            if (it != groups.end()) p.read("settings", spec, it->second, nums, txt);
            if (spec.kind == ValueKind::text) cfg.texts[spec.name] = txt;
            else cfg.values[spec.name] = nums;
        }
        if (info->name == "figS3-scan") {
            const auto n = cfg.values["kappa_q_sets"].size();
            if (cfg.values["kappa_r_sets"].size() != n || cfg.values["gamma_q_sets"].size() != n) {
                p.errors.push_back("settings.kappa_q_sets/kappa_r_sets/gamma_q_sets: rate-set lists differ in length");
            }
        }
        if (info->name == "rabi-comparison") {
            for (double n : cfg.values["n_values"]) {
                if (n != std::floor(n) || static_cast<long>(n) % 2 == 0) {
                    p.errors.push_back("settings.n_values: " + format_number(n) + " is not an odd integer");
                }
            }
        }
        if (info->name == "fisher-scan" || info->name == "figS9-budget") {
            const auto& e = cfg.values["epsilon"];
            if (e.size() < 3) p.errors.push_back("settings.epsilon: need at least 3 working points");
            for (std::size_t i = 1; i < e.size(); ++i) {
                if (!(e[i] > e[i - 1])) {
                    p.errors.push_back("settings.epsilon: working points must be strictly increasing");
                    break;
                }
            }
        }
    }

    if (!p.errors.empty()) throw ConfigError(p.errors);
    return cfg;
}

}  // namespace critsense
