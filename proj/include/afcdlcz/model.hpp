#pragma once

#include <vector>

#include "afcdlcz/errors.hpp"

namespace afcdlcz::model {

/// Parameters of the two-mode-squeezed-vacuum cross-correlation model.
/// eta_r and p_n are per-analysis-bin probabilities; bin_width_ns tags the
/// bin size they refer to so files carrying these numbers cannot silently
/// mix units.
struct ModelParams {
    double p_s = 0.0;
    double eta_r = 0.0;
    double beta = 0.0;
    double p_n = 0.0;
    double bin_width_ns = 100.0;

    void validate() const;
};

/// Inputs of the write-induced spontaneous-emission fraction.
struct BetaInputs {
    double t_spin_ms = 1.0;
    double t1_ms = 1.9;       ///< excited-state lifetime
    double gamma_es = 0.75;   ///< branching to |s>
    double gamma_eg = 0.2;    ///< branching to |g>
    double eta_t = 0.75;      ///< read transfer efficiency

    void validate() const;
};

struct ModelCurve {
    ModelParams params; ///< p_s field unused; per-point p_s in points
    std::vector<std::pair<double, double>> points; ///< (p_s, g)
};

struct ChiSquare {
    double chi2 = 0.0;
    int dof = 0;
    std::vector<double> pulls;
};

/// g_{S,aS} = 1 + eta_r / ((eta_r + beta) p_s + p_n).
double g_model(const ModelParams& params);

/// Write-induced excited-population fraction at readout time:
/// beta = (1 - e^{-T/2T1})(gamma_es + e^{-T/2T1} gamma_eg) eta_t
///        + (1 - eta_t) gamma_es e^{-T/T1}.
double compute_beta(const BetaInputs& inputs);

/// Pointwise g_model over a p_s grid at fixed (eta_r, beta, p_n).
ModelCurve model_curve(const std::vector<double>& p_s_grid, double eta_r,
                       double beta, double p_n, double bin_width_ns = 100.0);

struct MeasuredPoint {
    double p_s = 0.0;
    double g = 0.0;
    double sigma = 0.0;
};

/// Goodness of fit of measured points against the curve's parameters.
/// No fitting: the curve is re-evaluated at each measured p_s.
ChiSquare compare_model_to_analysis(const ModelCurve& curve,
                                    const std::vector<MeasuredPoint>& measured);

/// Fraction of a unit-area Gaussian of the given FWHM falling inside a
/// centered window of the given width. Relates per-bin and total readout
/// efficiencies through the pair-coherence profile.
double gaussian_window_fraction(double fwhm, double window_width);

} // namespace afcdlcz::model
