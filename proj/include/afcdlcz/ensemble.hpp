#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "afcdlcz/errors.hpp"

namespace afcdlcz::ensemble {

enum class ToothShape { square, gaussian };

/// Spectral comb parameters. Times in us, frequencies in MHz.
struct CombSpec {
    double period_inv_delta_us = 20.0; ///< rephasing time 1/Delta
    double finesse = 4.0;              ///< tooth period / tooth FWHM
    double bandwidth_mhz = 5.0;        ///< total comb extent
    double effective_optical_depth = 1.0;
    ToothShape tooth_shape = ToothShape::gaussian;

    double tooth_spacing_mhz() const { return 1.0 / period_inv_delta_us; }

    /// Throws ConfigError on violated invariants.
    void validate() const;
};

/// Sampled per-ion detunings and coupling weights. Immutable after sampling.
struct IonPopulation {
    std::vector<double> optical_detunings_mhz; ///< relative to comb center
    std::vector<double> spin_detunings_khz;    ///< relative to the spin line center
    std::vector<double> weights;               ///< sum of squares = 1
    std::uint64_t seed = 0;

    std::size_t size() const { return optical_detunings_mhz.size(); }
};

struct EchoPeak {
    double t_us = 0.0;          ///< rephasing delay t' of the maximum
    double magnitude_sq = 0.0;  ///< |A|^2 at the maximum
};

/// Draw n ions from the comb spectral density (equal-weight teeth of the
/// given shape, spacing 1/period, truncated to the bandwidth) with Gaussian
/// spin detunings of the given FWHM and uniform weights 1/sqrt(n).
/// Deterministic for a given seed.
IonPopulation sample_ions(const CombSpec& comb, double spin_fwhm_khz,
                          std::size_t n, std::uint64_t seed);

/// Collective optical coherence A(t) = sum_j |c_j|^2 exp(-i 2 pi delta_j t).
std::complex<double> collective_coherence(const IonPopulation& ions, double t_us);

/// A(t) over a set of sample times. The parallel version distributes time
/// points over threads; each point is evaluated by the serial kernel, so the
/// output is bit-identical to the serial trace for any thread count.
std::vector<std::complex<double>> coherence_trace_serial(const IonPopulation& ions,
                                                         std::span<const double> times_us);
std::vector<std::complex<double>> coherence_trace(const IonPopulation& ions,
                                                  std::span<const double> times_us);

/// Scan t' over (0, 1/Delta] evaluating |A(T_S + t')|^2 and return the
/// maximizing delay. The peak satisfies T_S + t' = 1/Delta to one scan step.
EchoPeak echo_amplitude(const IonPopulation& ions, double t_stokes_us,
                        double inv_delta_us, double scan_step_us = 0.01);

enum class SpinDecayModel { exponential, gaussian };

/// Residual spin-storage efficiency after the RF echo sequence:
/// exp(-T/T2) or exp(-(T/T2)^2).
double spin_storage_factor(SpinDecayModel model, double t2_spin_us, double t_spin_us);

/// Analytic comb spectral density (unnormalized) at detuning delta_mhz,
/// matching the distribution sample_ions draws from. Exposed so empirical
/// histograms can be tested against the exact density.
double comb_density(const CombSpec& comb, double delta_mhz);

} // namespace afcdlcz::ensemble
