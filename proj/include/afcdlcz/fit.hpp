#pragma once

#include <span>
#include <vector>

#include "afcdlcz/errors.hpp"

namespace afcdlcz::fit {

struct GaussianFit {
    double amplitude = 0.0;
    double center = 0.0;
    double sigma = 0.0;
    double baseline = 0.0;
    double rms = 0.0; ///< weighted residual RMS
    int iterations = 0;
};

/// Weighted least-squares fit of y = baseline + amplitude *
/// exp(-(x-center)^2 / (2 sigma^2)) by Levenberg-Marquardt with an analytic
/// Jacobian. sigmas may be empty (unit weights). Throws AnalysisError when
/// the fit does not converge.
GaussianFit fit_gaussian_baseline(std::span<const double> x, std::span<const double> y,
                                  std::span<const double> sigmas = {});

} // namespace afcdlcz::fit
