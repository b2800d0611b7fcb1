#pragma once

#include <array>
#include <string>
#include <vector>

#include "afcdlcz/errors.hpp"
#include "afcdlcz/model.hpp"

namespace afcdlcz::protocol {

using Vec3 = std::array<double, 3>;

struct RfPulse {
    double fwhm_us = 45.0;
    double phase_deg = 0.0;
    double chirp_khz = 100.0;
};

/// All timing, efficiency and noise parameters of one experimental cycle.
/// Times in us unless the field name says otherwise.
struct ProtocolConfig {
    double inv_delta_us = 20.0;       ///< AFC rephasing time 1/Delta
    double gate_us = 10.0;            ///< detection gate duration tau_g
    double gate_offset_us = 1.0;      ///< dead time between write pulse and gate
    double t_spin_us = 1000.0;
    double write_bandwidth_mhz = 2.0;
    double write_pulse_us = 8.0;      ///< metadata, chirped hyperbolic-square-hyperbolic
    double read_pulse_us = 8.0;
    double eta_t = 0.75;              ///< read transfer efficiency
    std::vector<RfPulse> rf_sequence = {{45.0, 0.0, 100.0},
                                        {90.0, 90.0, 100.0},
                                        {45.0, 0.0, 100.0}};
    double p_s = 0.002;               ///< Stokes emission probability per gate
    double eta_r_total = 0.025;       ///< conditional readout efficiency, whole peak
    double eta_r_per_bin = -1.0;      ///< if >= 0, overrides eta_r_total via the bin fraction
    double p_n_per_bin = 0.0012;      ///< uncorrelated readout noise per analysis bin
    double beta_override = -1.0;      ///< if >= 0, overrides the computed beta
    double bin_ns = 100.0;            ///< analysis bin width
    double pair_fwhm_us = 0.41;       ///< Stokes/anti-Stokes pair coherence FWHM
    int repetitions_per_prep = 14;
    double prep_ms = 575.0;
    double repump_ms = 10.0;
    double t1_optical_ms = 1.97;
    double gamma_es = 0.75;
    double gamma_eg = 0.2;
    double t2_spin_ms = 1.0;
    double spin_fwhm_khz = 27.0;
    double comb_finesse = 4.0;
    double comb_bandwidth_mhz = 5.0;

    void validate() const;

    double bin_us() const { return bin_ns * 1e-3; }

    /// Stokes gate [begin, end) relative to the write pulse.
    double stokes_gate_begin() const { return gate_offset_us; }
    double stokes_gate_end() const { return gate_offset_us + gate_us; }

    /// Anti-Stokes gate, positioned so the AFC-conjugate time of every point
    /// of the Stokes gate falls inside it.
    double anti_stokes_gate_begin() const {
        return t_spin_us + inv_delta_us - stokes_gate_end();
    }
    double anti_stokes_gate_end() const {
        return t_spin_us + inv_delta_us - stokes_gate_begin();
    }

    /// Expected coincidence peak position tau = T_spin + 1/Delta.
    double tau_peak_us() const { return t_spin_us + inv_delta_us; }

    /// Total conditional readout efficiency resolved from either eta_r_total
    /// or eta_r_per_bin (via the Gaussian pair-coherence bin fraction).
    double resolved_eta_r_total() const;

    /// Per-central-bin readout efficiency implied by the resolved total.
    double resolved_eta_r_per_bin() const;

    /// Write-induced noise fraction: beta_override if set, else computed
    /// from the branching/lifetime model (t_spin, T1, branching, eta_t).
    double resolved_beta() const;
};

enum class IntervalLabel { prepare, write, stokes_gate, rf_pulse, read, anti_stokes_gate, repump };

std::string to_string(IntervalLabel label);

struct Interval {
    IntervalLabel label;
    double start_us;
    double end_us;
};

struct Timeline {
    std::vector<Interval> intervals;

    /// Throws ConfigError if intervals overlap, are unordered, or violate
    /// the gate/pulse ordering constraints.
    void validate() const;
};

/// Full cycle: preparation, then repetitions_per_prep repetitions of
/// write / Stokes gate / XYX RF pulses / read / anti-Stokes gate / repump.
Timeline build_timeline(const ProtocolConfig& config);

/// T_aS = T_spin + 1/Delta - T_S for a Stokes time inside the gate.
/// T_S here is measured from the write pulse with the gate dead time already
/// removed, i.e. valid for 0 <= T_S <= tau_g.
double expected_anti_stokes_time(double t_stokes_us, const ProtocolConfig& config);

/// |k_W + k_R - k_S - k_aS| <= tolerance.
bool check_phase_matching(const Vec3& k_write, const Vec3& k_read,
                          const Vec3& k_stokes, const Vec3& k_anti_stokes,
                          double tolerance);

/// Number of temporal modes: floor(tau_g / (2 tau_c)).
int mode_count(double gate_us, double tau_c_us);

} // namespace afcdlcz::protocol
