#include "afcdlcz/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "afcdlcz/rng.hpp"

namespace afcdlcz::ensemble {

namespace {
constexpr double kFwhmToSigma = 1.0 / 2.3548200450309493; // 1 / (2 sqrt(2 ln 2))
} // namespace

void CombSpec::validate() const {
    if (!(period_inv_delta_us > 0.0))
        throw ConfigError("CombSpec: period_inv_delta_us must be > 0");
    if (!(finesse > 1.0))
        throw ConfigError("CombSpec: finesse must be > 1");
    if (!(bandwidth_mhz > tooth_spacing_mhz()))
        throw ConfigError("CombSpec: bandwidth must exceed one tooth spacing");
    if (effective_optical_depth < 0.0)
        throw ConfigError("CombSpec: effective_optical_depth must be >= 0");
}

IonPopulation sample_ions(const CombSpec& comb, double spin_fwhm_khz,
                          std::size_t n, std::uint64_t seed) {
    comb.validate();
    if (n == 0) throw DomainError("sample_ions: n must be >= 1");
    if (spin_fwhm_khz < 0.0) throw DomainError("sample_ions: negative spin FWHM");

    const double spacing = comb.tooth_spacing_mhz();
    const double half_bw = 0.5 * comb.bandwidth_mhz;
    const auto k_max = static_cast<long>(std::floor(half_bw / spacing));
    const long n_teeth = 2 * k_max + 1;
    const double tooth_fwhm = spacing / comb.finesse;

    IonPopulation pop;
    pop.seed = seed;
    pop.optical_detunings_mhz.reserve(n);
    pop.spin_detunings_khz.reserve(n);
    pop.weights.assign(n, 1.0 / std::sqrt(static_cast<double>(n)));

    Rng rng(seed, /*stream_id=*/0x1075);
    for (std::size_t i = 0; i < n; ++i) {
        double delta = 0.0;
        for (;;) {
            const long k = static_cast<long>(rng.next_u64() % static_cast<std::uint64_t>(n_teeth)) - k_max;
            const double center = static_cast<double>(k) * spacing;
            double offset = 0.0;
            if (comb.tooth_shape == ToothShape::square) {
                offset = rng.uniform(-0.5 * tooth_fwhm, 0.5 * tooth_fwhm);
            } else {
                offset = rng.normal(0.0, tooth_fwhm * kFwhmToSigma);
            }
            delta = center + offset;
            if (std::abs(delta) <= half_bw) break; // truncate to the bandwidth
        }
        pop.optical_detunings_mhz.push_back(delta);
        pop.spin_detunings_khz.push_back(rng.normal(0.0, spin_fwhm_khz * kFwhmToSigma));
    }
    return pop;
}

std::complex<double> collective_coherence(const IonPopulation& ions, double t_us) {
    double re = 0.0;
    double im = 0.0;
    const std::size_t n = ions.size();
    for (std::size_t j = 0; j < n; ++j) {
        const double w2 = ions.weights[j] * ions.weights[j];
        const double phase = -2.0 * M_PI * ions.optical_detunings_mhz[j] * t_us;
        re += w2 * std::cos(phase);
        im += w2 * std::sin(phase);
    }
    return {re, im};
}

std::vector<std::complex<double>> coherence_trace_serial(const IonPopulation& ions,
                                                         std::span<const double> times_us) {
    std::vector<std::complex<double>> out(times_us.size());
    for (std::size_t i = 0; i < times_us.size(); ++i)
        out[i] = collective_coherence(ions, times_us[i]);
    return out;
}

std::vector<std::complex<double>> coherence_trace(const IonPopulation& ions,
                                                  std::span<const double> times_us) {
    std::vector<std::complex<double>> out(times_us.size());
    const auto n = static_cast<std::int64_t>(times_us.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = collective_coherence(ions, times_us[static_cast<std::size_t>(i)]);
    return out;
}

EchoPeak echo_amplitude(const IonPopulation& ions, double t_stokes_us,
                        double inv_delta_us, double scan_step_us) {
    if (!(inv_delta_us > 0.0)) throw DomainError("echo_amplitude: inv_delta_us must be > 0");
    if (t_stokes_us < 0.0 || t_stokes_us >= inv_delta_us)
        throw DomainError("echo_amplitude: require 0 <= T_S < 1/Delta");
    if (!(scan_step_us > 0.0)) throw DomainError("echo_amplitude: scan step must be > 0");

    const auto n_steps = static_cast<std::size_t>(std::ceil(inv_delta_us / scan_step_us));
    std::vector<double> times(n_steps);
    for (std::size_t i = 0; i < n_steps; ++i)
        times[i] = t_stokes_us + std::min(static_cast<double>(i + 1) * scan_step_us, inv_delta_us);

    const auto trace = coherence_trace(ions, times);
    EchoPeak peak;
    for (std::size_t i = 0; i < n_steps; ++i) {
        const double mag2 = std::norm(trace[i]);
        if (mag2 > peak.magnitude_sq) {
            peak.magnitude_sq = mag2;
            peak.t_us = times[i] - t_stokes_us;
        }
    }
    return peak;
}

double spin_storage_factor(SpinDecayModel model, double t2_spin_us, double t_spin_us) {
    if (!(t2_spin_us > 0.0)) throw DomainError("spin_storage_factor: T2 must be > 0");
    if (t_spin_us < 0.0) throw DomainError("spin_storage_factor: negative T_spin");
    const double x = t_spin_us / t2_spin_us;
    return model == SpinDecayModel::exponential ? std::exp(-x) : std::exp(-x * x);
}

double comb_density(const CombSpec& comb, double delta_mhz) {
    const double half_bw = 0.5 * comb.bandwidth_mhz;
    if (std::abs(delta_mhz) > half_bw) return 0.0;
    const double spacing = comb.tooth_spacing_mhz();
    const auto k_max = static_cast<long>(std::floor(half_bw / spacing));
    const double tooth_fwhm = spacing / comb.finesse;
    double density = 0.0;
    for (long k = -k_max; k <= k_max; ++k) {
        const double x = delta_mhz - static_cast<double>(k) * spacing;
        if (comb.tooth_shape == ToothShape::square) {
            if (std::abs(x) <= 0.5 * tooth_fwhm) density += 1.0 / tooth_fwhm;
        } else {
            const double sigma = tooth_fwhm * kFwhmToSigma;
            density += std::exp(-0.5 * x * x / (sigma * sigma)) / (sigma * std::sqrt(2.0 * M_PI));
        }
    }
    return density;
}

} // namespace afcdlcz::ensemble
