#include "afcdlcz/protocol.hpp"

#include <algorithm>
#include <cmath>

namespace afcdlcz::protocol {

namespace {
void require_prob(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0))
        throw ConfigError(std::string("ProtocolConfig: ") + name + " must be in [0,1]");
}
void require_pos(double v, const char* name) {
    if (!(v > 0.0))
        throw ConfigError(std::string("ProtocolConfig: ") + name + " must be > 0");
}
} // namespace

void ProtocolConfig::validate() const {
    require_pos(inv_delta_us, "inv_delta_us");
    require_pos(gate_us, "gate_us");
    if (!(gate_us < inv_delta_us))
        throw ConfigError("ProtocolConfig: gate_us must satisfy tau_g < 1/Delta (inv_delta_us)");
    if (gate_offset_us < 0.0)
        throw ConfigError("ProtocolConfig: gate_offset_us must be >= 0");
    require_pos(t_spin_us, "t_spin_us");
    require_pos(write_bandwidth_mhz, "write_bandwidth_mhz");
    require_pos(write_pulse_us, "write_pulse_us");
    require_pos(read_pulse_us, "read_pulse_us");
    require_prob(eta_t, "eta_t");
    if (rf_sequence.empty() || rf_sequence.size() % 2 == 0)
        throw ConfigError("ProtocolConfig: rf_sequence must contain an odd number of pulses");
    for (const auto& p : rf_sequence)
        if (!(p.fwhm_us > 0.0))
            throw ConfigError("ProtocolConfig: rf_sequence pulse fwhm_us must be > 0");
    require_prob(p_s, "p_s");
    require_prob(eta_r_total, "eta_r_total");
    if (eta_r_per_bin >= 0.0) require_prob(eta_r_per_bin, "eta_r_per_bin");
    require_prob(p_n_per_bin, "p_n_per_bin");
    if (beta_override >= 0.0) require_prob(beta_override, "beta_override");
    require_pos(bin_ns, "bin_ns");
    require_pos(pair_fwhm_us, "pair_fwhm_us");
    if (repetitions_per_prep < 1)
        throw ConfigError("ProtocolConfig: repetitions_per_prep must be >= 1");
    require_pos(prep_ms, "prep_ms");
    require_pos(repump_ms, "repump_ms");
    require_pos(t1_optical_ms, "t1_optical_ms");
    require_prob(gamma_es, "gamma_es");
    require_prob(gamma_eg, "gamma_eg");
    require_pos(t2_spin_ms, "t2_spin_ms");
    if (spin_fwhm_khz < 0.0)
        throw ConfigError("ProtocolConfig: spin_fwhm_khz must be >= 0");
    require_pos(comb_finesse, "comb_finesse");
    require_pos(comb_bandwidth_mhz, "comb_bandwidth_mhz");
}

double ProtocolConfig::resolved_eta_r_total() const {
    if (eta_r_per_bin < 0.0) return eta_r_total;
    return eta_r_per_bin / model::gaussian_window_fraction(pair_fwhm_us, bin_us());
}

double ProtocolConfig::resolved_eta_r_per_bin() const {
    return resolved_eta_r_total() * model::gaussian_window_fraction(pair_fwhm_us, bin_us());
}

double ProtocolConfig::resolved_beta() const {
    if (beta_override >= 0.0) return beta_override;
    model::BetaInputs in;
    in.t_spin_ms = t_spin_us * 1e-3;
    in.t1_ms = t1_optical_ms;
    in.gamma_es = gamma_es;
    in.gamma_eg = gamma_eg;
    in.eta_t = eta_t;
    return model::compute_beta(in);
}

std::string to_string(IntervalLabel label) {
    switch (label) {
        case IntervalLabel::prepare: return "prepare";
        case IntervalLabel::write: return "write";
        case IntervalLabel::stokes_gate: return "stokes_gate";
        case IntervalLabel::rf_pulse: return "rf_pulse";
        case IntervalLabel::read: return "read";
        case IntervalLabel::anti_stokes_gate: return "anti_stokes_gate";
        case IntervalLabel::repump: return "repump";
    }
    return "?";
}

void Timeline::validate() const {
    if (intervals.empty()) throw ConfigError("Timeline: empty");
    for (std::size_t i = 0; i < intervals.size(); ++i) {
        const auto& iv = intervals[i];
        if (!(iv.end_us > iv.start_us))
            throw ConfigError("Timeline: empty or inverted interval " + to_string(iv.label));
        if (i > 0 && iv.start_us < intervals[i - 1].end_us - 1e-9)
            throw ConfigError("Timeline: interval " + to_string(iv.label) +
                              " overlaps " + to_string(intervals[i - 1].label));
    }
    // Gate ordering within each cycle.
    double last_write_end = -1.0;
    double last_read_end = -1.0;
    for (const auto& iv : intervals) {
        switch (iv.label) {
            case IntervalLabel::write: last_write_end = iv.end_us; break;
            case IntervalLabel::read: last_read_end = iv.end_us; break;
            case IntervalLabel::stokes_gate:
                if (iv.start_us < last_write_end)
                    throw ConfigError("Timeline: stokes_gate must begin after the write pulse");
                break;
            case IntervalLabel::anti_stokes_gate:
                if (last_read_end < 0.0 || iv.start_us < last_read_end)
                    throw ConfigError("Timeline: anti_stokes_gate must begin after the read pulse");
                break;
            default: break;
        }
    }
}

Timeline build_timeline(const ProtocolConfig& cfg) {
    cfg.validate();
    Timeline tl;
    double t = 0.0;
    tl.intervals.push_back({IntervalLabel::prepare, t, t + cfg.prep_ms * 1e3});
    t += cfg.prep_ms * 1e3;

    for (int cycle = 0; cycle < cfg.repetitions_per_prep; ++cycle) {
        const double write_end = t + cfg.write_pulse_us;
        tl.intervals.push_back({IntervalLabel::write, t, write_end});
        // t_ref: AFC dephasing reference, taken at the end of the write pulse.
        const double t_ref = write_end;
        tl.intervals.push_back({IntervalLabel::stokes_gate,
                                t_ref + cfg.stokes_gate_begin(),
                                t_ref + cfg.stokes_gate_end()});
        // RF pulses spaced uniformly at k T_spin / (n+1); with the phase sign
        // flipping at each pulse this refocuses inhomogeneous spin dephasing
        // at the read time for any odd pulse count.
        const auto n_rf = cfg.rf_sequence.size();
        for (std::size_t k = 0; k < n_rf; ++k) {
            const double center = t_ref + cfg.t_spin_us * static_cast<double>(k + 1) /
                                              static_cast<double>(n_rf + 1);
            const double half = 0.5 * cfg.rf_sequence[k].fwhm_us;
            const Interval iv{IntervalLabel::rf_pulse, center - half, center + half};
            if (iv.start_us < t_ref + cfg.stokes_gate_end())
                throw ConfigError("ProtocolConfig: rf_sequence pulse " + std::to_string(k) +
                                  " overlaps the Stokes gate (t_spin_us too short)");
            tl.intervals.push_back(iv);
        }
        const double read_end = t_ref + cfg.t_spin_us;
        const Interval read{IntervalLabel::read, read_end - cfg.read_pulse_us, read_end};
        if (read.start_us < tl.intervals.back().end_us)
            throw ConfigError("ProtocolConfig: read pulse overlaps rf_sequence (t_spin_us too short)");
        tl.intervals.push_back(read);
        tl.intervals.push_back({IntervalLabel::anti_stokes_gate,
                                t_ref + cfg.anti_stokes_gate_begin(),
                                t_ref + cfg.anti_stokes_gate_end()});
        const double repump_start = t_ref + cfg.anti_stokes_gate_end();
        tl.intervals.push_back({IntervalLabel::repump, repump_start,
                                repump_start + cfg.repump_ms * 1e3});
        t = repump_start + cfg.repump_ms * 1e3;
    }
    tl.validate();
    return tl;
}

double expected_anti_stokes_time(double t_stokes_us, const ProtocolConfig& cfg) {
    // The timing law also holds for the trivial substitution T_S = 1/Delta,
    // so the accepted domain extends to max(tau_g, 1/Delta).
    const double upper = std::max(cfg.gate_us, cfg.inv_delta_us);
    if (t_stokes_us < 0.0 || t_stokes_us > upper)
        throw DomainError("expected_anti_stokes_time: T_S outside the Stokes gate");
    return cfg.t_spin_us + cfg.inv_delta_us - t_stokes_us;
}

bool check_phase_matching(const Vec3& k_write, const Vec3& k_read,
                          const Vec3& k_stokes, const Vec3& k_anti_stokes,
                          double tolerance) {
    double norm2 = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double d = k_write[i] + k_read[i] - k_stokes[i] - k_anti_stokes[i];
        if (!std::isfinite(d)) throw DomainError("check_phase_matching: non-finite wave-vector");
        norm2 += d * d;
    }
    return std::sqrt(norm2) <= tolerance;
}

int mode_count(double gate_us, double tau_c_us) {
    if (!(gate_us > 0.0) || !(tau_c_us > 0.0))
        throw DomainError("mode_count: gate and tau_c must be > 0");
    return static_cast<int>(std::floor(gate_us / (2.0 * tau_c_us)));
}

} // namespace afcdlcz::protocol
