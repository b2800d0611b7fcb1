#include "afcdlcz/config_io.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace afcdlcz::config_io {

using protocol::ProtocolConfig;
using protocol::RfPulse;

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_number(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: invalid number for key '" + key + "': '" + value + "'");
    }
}

std::vector<double> parse_list(const std::string& key, std::string value) {
    for (auto& c : value)
        if (c == ',') c = ' ';
    std::istringstream ss(value);
    std::vector<double> out;
    std::string tok;
    while (ss >> tok) out.push_back(parse_number(key, tok));
    return out;
}

struct Field {
    const char* key;
    std::function<double&(ProtocolConfig&)> ref;
    bool sweepable;
};

const std::vector<Field>& fields() {
    static const std::vector<Field> f = {
        {"inv_delta_us", [](ProtocolConfig& c) -> double& { return c.inv_delta_us; }, true},
        {"gate_us", [](ProtocolConfig& c) -> double& { return c.gate_us; }, true},
        {"gate_offset_us", [](ProtocolConfig& c) -> double& { return c.gate_offset_us; }, true},
        {"t_spin_us", [](ProtocolConfig& c) -> double& { return c.t_spin_us; }, true},
        {"write_bandwidth_mhz", [](ProtocolConfig& c) -> double& { return c.write_bandwidth_mhz; }, false},
        {"write_pulse_us", [](ProtocolConfig& c) -> double& { return c.write_pulse_us; }, false},
        {"read_pulse_us", [](ProtocolConfig& c) -> double& { return c.read_pulse_us; }, false},
        {"eta_t", [](ProtocolConfig& c) -> double& { return c.eta_t; }, true},
        {"p_s", [](ProtocolConfig& c) -> double& { return c.p_s; }, true},
        {"eta_r_total", [](ProtocolConfig& c) -> double& { return c.eta_r_total; }, true},
        {"eta_r_per_bin", [](ProtocolConfig& c) -> double& { return c.eta_r_per_bin; }, true},
        {"p_n_per_bin", [](ProtocolConfig& c) -> double& { return c.p_n_per_bin; }, true},
        {"beta", [](ProtocolConfig& c) -> double& { return c.beta_override; }, true},
        {"bin_ns", [](ProtocolConfig& c) -> double& { return c.bin_ns; }, true},
        {"pair_fwhm_us", [](ProtocolConfig& c) -> double& { return c.pair_fwhm_us; }, true},
        {"prep_ms", [](ProtocolConfig& c) -> double& { return c.prep_ms; }, false},
        {"repump_ms", [](ProtocolConfig& c) -> double& { return c.repump_ms; }, false},
        {"t1_optical_ms", [](ProtocolConfig& c) -> double& { return c.t1_optical_ms; }, true},
        {"gamma_es", [](ProtocolConfig& c) -> double& { return c.gamma_es; }, false},
        {"gamma_eg", [](ProtocolConfig& c) -> double& { return c.gamma_eg; }, false},
        {"t2_spin_ms", [](ProtocolConfig& c) -> double& { return c.t2_spin_ms; }, true},
        {"spin_fwhm_khz", [](ProtocolConfig& c) -> double& { return c.spin_fwhm_khz; }, false},
        {"comb_finesse", [](ProtocolConfig& c) -> double& { return c.comb_finesse; }, true},
        {"comb_bandwidth_mhz", [](ProtocolConfig& c) -> double& { return c.comb_bandwidth_mhz; }, false},
    };
    return f;
}

std::string format_number(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

} // namespace

ProtocolConfig parse(std::istream& in) {
    ProtocolConfig cfg;
    std::vector<double> rf_fwhm, rf_phase, rf_chirp;
    bool rf_given = false;

    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) + " is not 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "repetitions_per_prep") {
            cfg.repetitions_per_prep = static_cast<int>(parse_number(key, value));
            continue;
        }
        if (key == "rf_pulse_fwhm_us") { rf_fwhm = parse_list(key, value); rf_given = true; continue; }
        if (key == "rf_pulse_phase_deg") { rf_phase = parse_list(key, value); rf_given = true; continue; }
        if (key == "rf_chirp_khz") { rf_chirp = parse_list(key, value); rf_given = true; continue; }

        bool matched = false;
        for (const auto& f : fields()) {
            if (key == f.key) {
                f.ref(cfg) = parse_number(key, value);
                matched = true;
                break;
            }
        }
        if (!matched) throw ConfigError("config: unknown key '" + key + "'");
    }

    if (rf_given) {
        if (rf_fwhm.empty())
            throw ConfigError("config: rf_pulse_fwhm_us required when rf_* keys are given");
        cfg.rf_sequence.clear();
        for (std::size_t i = 0; i < rf_fwhm.size(); ++i) {
            RfPulse p;
            p.fwhm_us = rf_fwhm[i];
            p.phase_deg = i < rf_phase.size() ? rf_phase[i] : 0.0;
            p.chirp_khz = rf_chirp.empty() ? 100.0 : rf_chirp[i < rf_chirp.size() ? i : 0];
            cfg.rf_sequence.push_back(p);
        }
    }
    cfg.validate();
    return cfg;
}

ProtocolConfig parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    return parse(in);
}

ProtocolConfig parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
}

std::string serialize(const ProtocolConfig& cfg) {
    std::ostringstream out;
    ProtocolConfig copy = cfg;
    for (const auto& f : fields())
        out << f.key << " = " << format_number(f.ref(copy)) << "\n";
    out << "repetitions_per_prep = " << cfg.repetitions_per_prep << "\n";
    out << "rf_pulse_fwhm_us =";
    for (const auto& p : cfg.rf_sequence) out << " " << format_number(p.fwhm_us);
    out << "\nrf_pulse_phase_deg =";
    for (const auto& p : cfg.rf_sequence) out << " " << format_number(p.phase_deg);
    out << "\nrf_chirp_khz =";
    for (const auto& p : cfg.rf_sequence) out << " " << format_number(p.chirp_khz);
    out << "\n";
    return out.str();
}

std::map<std::string, std::string> to_map(const ProtocolConfig& cfg) {
    std::map<std::string, std::string> m;
    std::istringstream in(serialize(cfg));
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        m[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return m;
}

void set_field(ProtocolConfig& cfg, const std::string& key, double value) {
    for (const auto& f : fields()) {
        if (f.sweepable && key == f.key) {
            f.ref(cfg) = value;
            return;
        }
    }
    std::string msg = "config: unknown or non-sweepable field '" + key + "'; sweepable fields:";
    for (const auto& name : sweepable_fields()) msg += " " + name;
    throw ConfigError(msg);
}

const std::vector<std::string>& sweepable_fields() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& f : fields())
            if (f.sweepable) v.emplace_back(f.key);
        return v;
    }();
    return names;
}

} // namespace afcdlcz::config_io
