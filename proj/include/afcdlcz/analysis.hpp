#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "afcdlcz/source.hpp"

namespace afcdlcz::analysis {

/// tau = T_S + T_aS coincidence histogram. Bins are centered on the
/// expected peak tau = T_spin + 1/Delta; bin i covers
/// [center(i) - b/2, center(i) + b/2) with center(i) = tau_origin + i*b.
struct CoincidenceHistogram {
    double bin_width_us = 0.1;
    double tau_origin_us = 0.0; ///< center of bin 0
    std::vector<std::uint64_t> counts;
    std::uint64_t n_trials = 0;
    std::uint64_t n_stokes = 0;
    std::uint64_t n_anti_stokes = 0;

    double bin_center(std::size_t i) const {
        return tau_origin_us + static_cast<double>(i) * bin_width_us;
    }
    /// Index of the bin containing tau, or nullopt when out of range.
    std::optional<std::size_t> bin_index(double tau_us) const;
    /// Index of the bin whose center is the expected peak.
    std::size_t peak_model_bin() const { return peak_model_bin_; }

    std::size_t peak_model_bin_ = 0;
};

enum class AccidentalMethod { inter_trial, analytic_triangle };

struct AccidentalEstimate {
    AccidentalMethod method = AccidentalMethod::inter_trial;
    std::vector<double> expected;      ///< accidental counts per tau bin
    std::vector<double> raw_counts;    ///< mixed-pair counts behind each bin (inter_trial)
    double equivalent_counts = 0.0;    ///< per-bin stat weight for analytic_triangle
    int partner_trials = 0;            ///< K used by inter_trial mixing
};

struct CorrelationResult {
    std::vector<double> taus_us;
    std::vector<double> g_values;   ///< NaN where undefined (zero accidentals)
    std::vector<double> g_errors;
    std::vector<double> accidentals;
    std::vector<bool> defined;
    std::uint64_t n_trials = 0;
};

struct PeakFit {
    double center_us = 0.0;
    double fwhm_us = 0.0;
    double amplitude = 0.0;
    double baseline = 0.0;
    double fit_rms = 0.0;
};

struct ValueWithError {
    double value = 0.0;
    double error = 0.0;
};

struct CauchySchwarzResult {
    double r = 0.0;
    double err_plus = 0.0;  ///< upper 1-sigma excursion (log-space propagation)
    double err_minus = 0.0; ///< lower 1-sigma excursion
};

/// Records must be grouped by trial with trial ids non-decreasing; every
/// stokes record must lie inside the Stokes gate and every anti_stokes
/// record inside the anti-Stokes gate (DataError otherwise, naming the
/// trial). All same-trial stokes x anti_stokes combinations are counted.
/// The parallel path accumulates per-thread histograms over trial-aligned
/// chunks and merges them, which is exact; the serial path is the reference.
CoincidenceHistogram coincidence_histogram(const std::vector<source::DetectionRecord>& records,
                                           const protocol::ProtocolConfig& config,
                                           bool parallel = true);
CoincidenceHistogram coincidence_histogram_serial(const std::vector<source::DetectionRecord>& records,
                                                  const protocol::ProtocolConfig& config);

/// Expected accidental coincidences per tau bin. inter_trial mixes the
/// Stokes photons of each trial with the anti-Stokes photons of its K
/// following trials (cyclically); analytic_triangle scales the convolution
/// of the two uniform gate densities by the measured singles rates.
AccidentalEstimate accidental_estimate(const std::vector<source::DetectionRecord>& records,
                                       const protocol::ProtocolConfig& config,
                                       AccidentalMethod method,
                                       int partner_trials = 50);

/// g(tau) = counts / accidentals with Poisson errors propagated from both.
CorrelationResult cross_correlation(const CoincidenceHistogram& hist,
                                    const AccidentalEstimate& acc);

/// Zero-delay auto-correlation of one channel: same-trial photon pairs with
/// |dt| <= delta_max_us, normalized by the inter-trial pair expectation.
/// delta_max_us <= 0 selects the config bin width.
ValueWithError auto_correlation(const std::vector<source::DetectionRecord>& records,
                                source::Channel channel,
                                const protocol::ProtocolConfig& config,
                                double delta_max_us = -1.0,
                                int partner_trials = 50);

/// R = g_SaS^2 / (g_SS * g_aSaS) with asymmetric bounds from first-order
/// log-space error propagation.
CauchySchwarzResult cauchy_schwarz(const ValueWithError& g_s_as, const ValueWithError& g_ss,
                                   const ValueWithError& g_as_as);

/// Gaussian + baseline least-squares fit of the correlation peak.
PeakFit fit_peak(const CorrelationResult& result);

/// eta_R = (p_coinc - p_acc) / p_S over a centered tau window of the given
/// width (window_us <= 0 selects one bin width).
ValueWithError readout_efficiency(const std::vector<source::DetectionRecord>& records,
                                  const protocol::ProtocolConfig& config,
                                  double window_us = -1.0,
                                  int partner_trials = 50);

} // namespace afcdlcz::analysis
