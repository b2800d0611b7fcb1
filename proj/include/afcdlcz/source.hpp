#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "afcdlcz/protocol.hpp"
#include "afcdlcz/rng.hpp"

namespace afcdlcz::source {

enum class Channel : std::uint8_t { stokes = 0, anti_stokes = 1 };

std::string channel_name(Channel c);
Channel channel_from_name(const std::string& name);

/// One detection event. Timestamps are us from the trial origin (the end of
/// the write pulse).
struct DetectionRecord {
    std::uint64_t trial_id = 0;
    Channel channel = Channel::stokes;
    double timestamp_us = 0.0;

    friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

/// Debug/oracle sidecar: what actually happened inside each trial.
struct PairTruth {
    std::uint64_t trial_id = 0;
    double t_stokes_us = 0.0;
    double t_anti_stokes_us = 0.0; ///< meaningful when survived_readout
    bool survived_readout = false;
};

enum class NoiseOrigin : std::uint8_t { readout_noise = 0, write_induced_fluorescence = 1 };

struct NoiseTruth {
    std::uint64_t trial_id = 0;
    Channel channel = Channel::anti_stokes;
    double timestamp_us = 0.0;
    NoiseOrigin origin = NoiseOrigin::readout_noise;
};

struct SourceTruth {
    std::vector<PairTruth> pairs;
    std::vector<NoiseTruth> noise;
};

struct RunOptions {
    bool parallel = true;
    bool with_truth = false;
};

struct RunOutput {
    std::vector<DetectionRecord> records; ///< grouped by trial, trials in order
    SourceTruth truth;                    ///< filled when with_truth
    std::vector<std::string> warnings;
};

/// Bose-Einstein photon number with the given mean (two-mode-squeezed
/// per-mode marginal).
std::uint64_t thermal_sample(double mean, Rng& rng);

/// Monte Carlo generation of n_trials experimental cycles:
///  1. split the Stokes gate into M = mode_count(tau_g, tau_c) equal slots
///     and draw a thermal photon number of mean p_s/M per slot, photons
///     placed uniformly within their slot;
///  2. each Stokes photon is retrieved with probability eta_r_total at the
///     AFC-conjugate time T_spin + 1/Delta - T_S plus Gaussian jitter of
///     FWHM pair_fwhm_us, clipped to the anti-Stokes gate;
///  3. write-correlated fluorescence noise, Poisson with per-trial mean
///     beta * p_s * (tau_g / bin), uniform over the anti-Stokes gate;
///  4. write-independent readout noise, Poisson with per-trial mean
///     p_n_per_bin * (tau_g / bin), uniform over the anti-Stokes gate.
/// Every trial is generated from an RNG stream derived from (seed,
/// trial_id), so output is identical for any worker count.
RunOutput run_trials(const protocol::ProtocolConfig& config, std::uint64_t n_trials,
                     std::uint64_t seed, const RunOptions& options = {});

/// Serial reference driver, kept for testing the parallel path against.
RunOutput run_trials_serial(const protocol::ProtocolConfig& config, std::uint64_t n_trials,
                            std::uint64_t seed, const RunOptions& options = {});

} // namespace afcdlcz::source
