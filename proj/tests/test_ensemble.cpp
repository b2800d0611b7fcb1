#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "afcdlcz/ensemble.hpp"

using namespace afcdlcz;
using namespace afcdlcz::ensemble;

namespace {

/// CDF of the analytic comb density, by trapezoid integration on a fine grid.
/// Serves as an independent oracle for the sampler.
struct CombCdf {
    std::vector<double> x, cdf;

    explicit CombCdf(const CombSpec& comb, std::size_t n_grid = 200001) {
        const double half = 0.5 * comb.bandwidth_mhz;
        x.resize(n_grid);
        cdf.resize(n_grid);
        double acc = 0.0;
        double prev = comb_density(comb, -half);
        x[0] = -half;
        cdf[0] = 0.0;
        const double h = comb.bandwidth_mhz / static_cast<double>(n_grid - 1);
        for (std::size_t i = 1; i < n_grid; ++i) {
            x[i] = -half + static_cast<double>(i) * h;
            const double d = comb_density(comb, x[i]);
            acc += 0.5 * (prev + d) * h;
            cdf[i] = acc;
            prev = d;
        }
        for (auto& c : cdf) c /= acc;
    }

    double operator()(double v) const {
        const auto it = std::lower_bound(x.begin(), x.end(), v);
        if (it == x.begin()) return 0.0;
        if (it == x.end()) return 1.0;
        const auto i = static_cast<std::size_t>(it - x.begin());
        const double f = (v - x[i - 1]) / (x[i] - x[i - 1]);
        return cdf[i - 1] + f * (cdf[i] - cdf[i - 1]);
    }
};

} // namespace

TEST_CASE("ensemble: comb spec validation") {
    CombSpec c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.tooth_spacing_mhz() == doctest::Approx(0.05));
    c.finesse = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.bandwidth_mhz = 0.01; // narrower than one tooth spacing
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.period_inv_delta_us = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("ensemble: sampling is deterministic in the seed") {
    const CombSpec comb;
    const auto a = sample_ions(comb, 27.0, 500, 11);
    const auto b = sample_ions(comb, 27.0, 500, 11);
    const auto c = sample_ions(comb, 27.0, 500, 12);
    CHECK(a.optical_detunings_mhz == b.optical_detunings_mhz);
    CHECK(a.spin_detunings_khz == b.spin_detunings_khz);
    CHECK(a.optical_detunings_mhz != c.optical_detunings_mhz);
    CHECK_THROWS_AS(static_cast<void>(sample_ions(comb, 27.0, 0, 1)), DomainError);
}

TEST_CASE("ensemble: weights are uniform and normalized") {
    const auto pop = sample_ions(CombSpec{}, 27.0, 1000, 3);
    double sum_sq = 0.0;
    for (double w : pop.weights) sum_sq += w * w;
    CHECK(sum_sq == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pop.weights.front() == doctest::Approx(pop.weights.back()));
}

TEST_CASE("ensemble: sampled detunings follow the comb density (KS test)") {
    for (const auto shape : {ToothShape::gaussian, ToothShape::square}) {
        CombSpec comb;
        comb.tooth_shape = shape;
        const std::size_t n = 10000;
        auto pop = sample_ions(comb, 0.0, n, 2024);
        auto& d = pop.optical_detunings_mhz;
        std::sort(d.begin(), d.end());

        const CombCdf oracle(comb);
        double ks = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double f = oracle(d[i]);
            const double emp_hi = static_cast<double>(i + 1) / n;
            const double emp_lo = static_cast<double>(i) / n;
            ks = std::max({ks, std::abs(f - emp_hi), std::abs(f - emp_lo)});
        }
        // 1% critical value of the one-sample KS statistic.
        CHECK(ks < 1.63 / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("ensemble: delta-like comb rephases fully at multiples of 1/Delta") {
    CombSpec comb;
    comb.finesse = 1e9; // teeth collapse to delta functions
    const auto pop = sample_ions(comb, 0.0, 4000, 5);
    for (int k = 1; k <= 2; ++k) {
        const double mag = std::abs(collective_coherence(pop, k * comb.period_inv_delta_us));
        CHECK(mag > 0.999);
    }
    CHECK(std::abs(collective_coherence(pop, 0.0)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ensemble: coherence agrees with the O(n^2) pairwise oracle") {
    const auto pop = sample_ions(CombSpec{}, 27.0, 300, 9);
    for (const double t : {0.3, 5.0, 19.7, 20.0}) {
        const auto a = collective_coherence(pop, t);
        // |A|^2 = sum_jk w_j^2 w_k^2 cos(2 pi (d_j - d_k) t), evaluated directly.
        double oracle = 0.0;
        for (std::size_t j = 0; j < pop.size(); ++j)
            for (std::size_t k = 0; k < pop.size(); ++k)
                oracle += pop.weights[j] * pop.weights[j] * pop.weights[k] * pop.weights[k] *
                          std::cos(2.0 * M_PI *
                                   (pop.optical_detunings_mhz[j] - pop.optical_detunings_mhz[k]) *
                                   t);
        CHECK(std::norm(a) == doctest::Approx(oracle).epsilon(1e-9));
    }
}

TEST_CASE("ensemble: echo peaks at T_S + t' = 1/Delta") {
    CombSpec comb;
    const auto pop = sample_ions(comb, 0.0, 5000, 77);
    const auto peak = echo_amplitude(pop, 5.0, comb.period_inv_delta_us);
    CHECK(peak.t_us == doctest::Approx(15.0).epsilon(0.002));
    // Peak magnitude equals the direct evaluation at the rephasing time.
    const double at_rephase = std::norm(collective_coherence(pop, comb.period_inv_delta_us));
    CHECK(peak.magnitude_sq >= at_rephase * (1.0 - 1e-12));
    CHECK(peak.magnitude_sq == doctest::Approx(at_rephase).epsilon(0.02));

    CHECK_THROWS_AS(static_cast<void>(echo_amplitude(pop, 25.0, 20.0)), DomainError);
    CHECK_THROWS_AS(static_cast<void>(echo_amplitude(pop, -1.0, 20.0)), DomainError);
    CHECK_THROWS_AS(static_cast<void>(echo_amplitude(pop, 5.0, 20.0, 0.0)), DomainError);
}

TEST_CASE("ensemble: higher finesse rephases better") {
    double prev = -1.0;
    for (const double finesse : {2.0, 4.0, 8.0, 16.0}) {
        CombSpec comb;
        comb.finesse = finesse;
        const auto pop = sample_ions(comb, 0.0, 20000, 123);
        const double mag2 = std::norm(collective_coherence(pop, comb.period_inv_delta_us));
        CHECK(mag2 > prev);
        prev = mag2;
    }
    CHECK(prev > 0.5); // finesse 16 is nearly fully rephased
}

TEST_CASE("ensemble: coherence dephases between echoes") {
    const auto pop = sample_ions(CombSpec{}, 0.0, 20000, 6);
    CHECK(std::abs(collective_coherence(pop, 10.0)) < 0.05);
}

TEST_CASE("ensemble: parallel trace equals the serial reference bit for bit") {
    const auto pop = sample_ions(CombSpec{}, 27.0, 3000, 41);
    std::vector<double> times;
    for (double t = 0.0; t <= 25.0; t += 0.01) times.push_back(t);
    const auto serial = coherence_trace_serial(pop, times);
    const auto parallel = coherence_trace(pop, times);
    CHECK(serial == parallel);
}

TEST_CASE("ensemble: spin storage decay factors") {
    CHECK(spin_storage_factor(SpinDecayModel::exponential, 1000.0, 0.0) == doctest::Approx(1.0));
    CHECK(spin_storage_factor(SpinDecayModel::exponential, 1000.0, 1000.0) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(spin_storage_factor(SpinDecayModel::gaussian, 1000.0, 1000.0) ==
          doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    // Gaussian decay is slower early, faster late.
    CHECK(spin_storage_factor(SpinDecayModel::gaussian, 1000.0, 500.0) >
          spin_storage_factor(SpinDecayModel::exponential, 1000.0, 500.0));
    CHECK(spin_storage_factor(SpinDecayModel::gaussian, 1000.0, 2000.0) <
          spin_storage_factor(SpinDecayModel::exponential, 1000.0, 2000.0));
    CHECK_THROWS_AS(static_cast<void>(spin_storage_factor(SpinDecayModel::exponential, 0.0, 1.0)),
                    DomainError);
    CHECK_THROWS_AS(
        static_cast<void>(spin_storage_factor(SpinDecayModel::exponential, 1.0, -1.0)),
        DomainError);
}
