#include "afcdlcz/fit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace afcdlcz::fit {

namespace {

using Vec4 = std::array<double, 4>;
using Mat4 = std::array<std::array<double, 4>, 4>;

// params: [amplitude, center, sigma, baseline]
double model(const Vec4& p, double x) {
    const double z = (x - p[1]) / p[2];
    return p[3] + p[0] * std::exp(-0.5 * z * z);
}

Vec4 jacobian_row(const Vec4& p, double x) {
    const double z = (x - p[1]) / p[2];
    const double e = std::exp(-0.5 * z * z);
    return {e, p[0] * e * z / p[2], p[0] * e * z * z / p[2], 1.0};
}

double chi2(const Vec4& p, std::span<const double> x, std::span<const double> y,
            std::span<const double> w) {
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = (y[i] - model(p, x[i])) * w[i];
        sum += r * r;
    }
    return sum;
}

// Solve (A + lambda diag(A)) d = b in place; returns false when singular.
bool solve_damped(Mat4 a, Vec4 b, double lambda, Vec4& out) {
    for (int i = 0; i < 4; ++i) a[i][i] *= 1.0 + lambda;
    for (int col = 0; col < 4; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 4; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < 1e-300) return false;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (int r = 0; r < 4; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (int c = col; c < 4; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (int i = 0; i < 4; ++i) out[i] = b[i] / a[i][i];
    return true;
}

} // namespace

GaussianFit fit_gaussian_baseline(std::span<const double> x, std::span<const double> y,
                                  std::span<const double> sigmas) {
    if (x.size() != y.size() || (!sigmas.empty() && sigmas.size() != x.size()))
        throw AnalysisError("fit: input arrays differ in length");
    if (x.size() < 5)
        throw AnalysisError("fit: need at least 5 points around the maximum");

    std::vector<double> w(x.size(), 1.0);
    if (!sigmas.empty())
        for (std::size_t i = 0; i < x.size(); ++i)
            w[i] = sigmas[i] > 0.0 ? 1.0 / sigmas[i] : 0.0;

    // Initial guess: baseline from the edge bins, amplitude/center from the
    // maximum, sigma from a crude half-maximum scan.
    std::vector<double> sorted_y(y.begin(), y.end());
    std::nth_element(sorted_y.begin(), sorted_y.begin() + sorted_y.size() / 2, sorted_y.end());
    const double baseline0 = sorted_y[sorted_y.size() / 2];
    std::size_t imax = 0;
    for (std::size_t i = 1; i < y.size(); ++i)
        if (y[i] > y[imax]) imax = i;
    const double amp0 = std::max(y[imax] - baseline0, 1e-12);
    double half_width = 0.0;
    for (std::size_t i = imax; i < y.size(); ++i) {
        if (y[i] - baseline0 < 0.5 * amp0) {
            half_width = std::abs(x[i] - x[imax]);
            break;
        }
    }
    if (half_width <= 0.0) half_width = 0.1 * std::abs(x.back() - x.front()) + 1e-9;

    Vec4 p{amp0, x[imax], half_width / 1.1774, baseline0};
    double lambda = 1e-3;
    double best = chi2(p, x, y, w);

    GaussianFit result;
    for (int iter = 0; iter < 500; ++iter) {
        Mat4 jtj{};
        Vec4 jtr{};
        for (std::size_t i = 0; i < x.size(); ++i) {
            const Vec4 j = jacobian_row(p, x[i]);
            const double r = (y[i] - model(p, x[i]));
            const double w2 = w[i] * w[i];
            for (int a = 0; a < 4; ++a) {
                jtr[a] += w2 * j[a] * r;
                for (int b = 0; b < 4; ++b) jtj[a][b] += w2 * j[a] * j[b];
            }
        }
        Vec4 step;
        if (!solve_damped(jtj, jtr, lambda, step))
            throw AnalysisError("fit: singular normal equations (flat data?)");
        Vec4 trial{p[0] + step[0], p[1] + step[1], p[2] + step[2], p[3] + step[3]};
        trial[2] = std::abs(trial[2]);
        if (trial[2] < 1e-12) trial[2] = 1e-12;
        const double trial_chi2 = chi2(trial, x, y, w);
        if (trial_chi2 <= best) {
            const double improvement = best - trial_chi2;
            p = trial;
            best = trial_chi2;
            lambda = std::max(lambda * 0.3, 1e-12);
            result.iterations = iter + 1;
            if (improvement < 1e-14 * (1.0 + best)) break;
        } else {
            lambda *= 10.0;
            if (lambda > 1e12)
                throw AnalysisError("fit: failed to converge (lambda overflow, chi2=" +
                                    std::to_string(best) + ")");
        }
    }

    result.amplitude = p[0];
    result.center = p[1];
    result.sigma = p[2];
    result.baseline = p[3];
    double wsum = 0.0;
    for (double wi : w) wsum += wi > 0.0 ? 1.0 : 0.0;
    result.rms = std::sqrt(best / std::max(wsum, 1.0));
    if (result.amplitude <= 0.0)
        throw AnalysisError("fit: no positive peak found");
    return result;
}

} // namespace afcdlcz::fit
