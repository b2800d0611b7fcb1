#include "afcdlcz/source.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace afcdlcz::source {

namespace {

constexpr double kFwhmToSigma = 1.0 / 2.3548200450309493;
constexpr std::uint64_t kTrialStreamBase = 0x7261693a; // distinct from the ensemble stream

/// Per-run constants resolved once from the config.
struct TrialModel {
    double gate_begin, gate_end;
    double as_gate_begin, as_gate_end;
    double tau_peak;
    int n_modes;
    double mode_width;
    double mu_per_mode;
    double eta_r;
    double jitter_sigma;
    double write_noise_mean;   // per trial, whole anti-Stokes gate
    double readout_noise_mean; // per trial, whole anti-Stokes gate

    explicit TrialModel(const protocol::ProtocolConfig& cfg) {
        gate_begin = cfg.stokes_gate_begin();
        gate_end = cfg.stokes_gate_end();
        as_gate_begin = cfg.anti_stokes_gate_begin();
        as_gate_end = cfg.anti_stokes_gate_end();
        tau_peak = cfg.tau_peak_us();
        n_modes = std::max(1, protocol::mode_count(cfg.gate_us, cfg.pair_fwhm_us));
        mode_width = cfg.gate_us / n_modes;
        mu_per_mode = cfg.p_s / n_modes;
        eta_r = cfg.resolved_eta_r_total();
        jitter_sigma = cfg.pair_fwhm_us * kFwhmToSigma;
        const double bins_per_gate = cfg.gate_us / cfg.bin_us();
        // The write-correlated rate is beta * p_s per analysis bin, matching
        // the per-bin accounting of the cross-correlation model.
        write_noise_mean = cfg.resolved_beta() * cfg.p_s * bins_per_gate;
        readout_noise_mean = cfg.p_n_per_bin * bins_per_gate;
    }
};

struct TrialBuffer {
    std::vector<DetectionRecord> records;
    std::vector<PairTruth> pairs;
    std::vector<NoiseTruth> noise;

    void clear() {
        records.clear();
        pairs.clear();
        noise.clear();
    }
};

void generate_trial(const TrialModel& m, std::uint64_t trial_id, std::uint64_t seed,
                    bool with_truth, TrialBuffer& out) {
    Rng rng(seed, kTrialStreamBase + trial_id);

    std::vector<double> stokes_times;
    std::vector<double> anti_times;

    for (int mode = 0; mode < m.n_modes; ++mode) {
        const std::uint64_t n_photons = rng.thermal(m.mu_per_mode);
        for (std::uint64_t p = 0; p < n_photons; ++p) {
            const double t_s = m.gate_begin + (mode + rng.uniform()) * m.mode_width;
            stokes_times.push_back(t_s);
            const bool retrieved = rng.uniform() < m.eta_r;
            double t_as = 0.0;
            bool survived = false;
            if (retrieved) {
                t_as = m.tau_peak - t_s + rng.normal(0.0, m.jitter_sigma);
                // The detection gate clips retrieval jitter.
                survived = t_as >= m.as_gate_begin && t_as < m.as_gate_end;
                if (survived) anti_times.push_back(t_as);
            }
            if (with_truth)
                out.pairs.push_back({trial_id, t_s, t_as, survived});
        }
    }

    const std::uint64_t n_write_noise = rng.poisson(m.write_noise_mean);
    for (std::uint64_t i = 0; i < n_write_noise; ++i) {
        const double t = rng.uniform(m.as_gate_begin, m.as_gate_end);
        anti_times.push_back(t);
        if (with_truth)
            out.noise.push_back({trial_id, Channel::anti_stokes, t,
                                 NoiseOrigin::write_induced_fluorescence});
    }
    const std::uint64_t n_readout_noise = rng.poisson(m.readout_noise_mean);
    for (std::uint64_t i = 0; i < n_readout_noise; ++i) {
        const double t = rng.uniform(m.as_gate_begin, m.as_gate_end);
        anti_times.push_back(t);
        if (with_truth)
            out.noise.push_back({trial_id, Channel::anti_stokes, t, NoiseOrigin::readout_noise});
    }

    std::sort(stokes_times.begin(), stokes_times.end());
    std::sort(anti_times.begin(), anti_times.end());
    for (double t : stokes_times) out.records.push_back({trial_id, Channel::stokes, t});
    for (double t : anti_times) out.records.push_back({trial_id, Channel::anti_stokes, t});
}

std::vector<std::string> check_config(const protocol::ProtocolConfig& cfg, std::uint64_t n_trials,
                                      const TrialModel& m) {
    cfg.validate();
    if (n_trials < 1) throw DomainError("run_trials: n_trials must be >= 1");
    std::vector<std::string> warnings;
    if (m.mu_per_mode > 0.1)
        warnings.push_back("run_trials: mean photon number per mode " +
                           std::to_string(m.mu_per_mode) +
                           " exceeds 0.1; the single-excitation approximation degrades");
    return warnings;
}

} // namespace

std::string channel_name(Channel c) {
    return c == Channel::stokes ? "stokes" : "anti_stokes";
}

Channel channel_from_name(const std::string& name) {
    if (name == "stokes") return Channel::stokes;
    if (name == "anti_stokes") return Channel::anti_stokes;
    throw DataError("unknown channel name '" + name + "'");
}

std::uint64_t thermal_sample(double mean, Rng& rng) { return rng.thermal(mean); }

RunOutput run_trials_serial(const protocol::ProtocolConfig& cfg, std::uint64_t n_trials,
                            std::uint64_t seed, const RunOptions& options) {
    const TrialModel model(cfg);
    RunOutput out;
    out.warnings = check_config(cfg, n_trials, model);

    TrialBuffer buf;
    for (std::uint64_t trial = 0; trial < n_trials; ++trial) {
        buf.clear();
        generate_trial(model, trial, seed, options.with_truth, buf);
        out.records.insert(out.records.end(), buf.records.begin(), buf.records.end());
        out.truth.pairs.insert(out.truth.pairs.end(), buf.pairs.begin(), buf.pairs.end());
        out.truth.noise.insert(out.truth.noise.end(), buf.noise.begin(), buf.noise.end());
    }
    return out;
}

RunOutput run_trials(const protocol::ProtocolConfig& cfg, std::uint64_t n_trials,
                     std::uint64_t seed, const RunOptions& options) {
#ifndef _OPENMP
    return run_trials_serial(cfg, n_trials, seed, options);
#else
    if (!options.parallel) return run_trials_serial(cfg, n_trials, seed, options);

    const TrialModel model(cfg);
    RunOutput out;
    out.warnings = check_config(cfg, n_trials, model);

    int n_threads = 1;
#pragma omp parallel
    {
#pragma omp single
        n_threads = omp_get_num_threads();
    }
    const std::uint64_t n_chunks = std::min<std::uint64_t>(n_trials, 4u * n_threads);
    std::vector<TrialBuffer> chunks(n_chunks);

#pragma omp parallel for schedule(dynamic)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(n_chunks); ++c) {
        const std::uint64_t begin = n_trials * c / n_chunks;
        const std::uint64_t end = n_trials * (c + 1) / n_chunks;
        TrialBuffer trial_buf;
        for (std::uint64_t trial = begin; trial < end; ++trial) {
            trial_buf.clear();
            generate_trial(model, trial, seed, options.with_truth, trial_buf);
            auto& chunk = chunks[static_cast<std::size_t>(c)];
            chunk.records.insert(chunk.records.end(), trial_buf.records.begin(),
                                 trial_buf.records.end());
            chunk.pairs.insert(chunk.pairs.end(), trial_buf.pairs.begin(), trial_buf.pairs.end());
            chunk.noise.insert(chunk.noise.end(), trial_buf.noise.begin(), trial_buf.noise.end());
        }
    }

    // Concatenate in chunk order; chunk boundaries are trial boundaries, so
    // the stream is identical to the serial one.
    for (const auto& chunk : chunks) {
        out.records.insert(out.records.end(), chunk.records.begin(), chunk.records.end());
        out.truth.pairs.insert(out.truth.pairs.end(), chunk.pairs.begin(), chunk.pairs.end());
        out.truth.noise.insert(out.truth.noise.end(), chunk.noise.begin(), chunk.noise.end());
    }
    return out;
#endif
}

} // namespace afcdlcz::source
