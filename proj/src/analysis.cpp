#include "afcdlcz/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "afcdlcz/fit.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace afcdlcz::analysis {

using source::Channel;
using source::DetectionRecord;

namespace {

constexpr double kGateTol = 1e-9;

/// Flat per-trial view of a record stream. Only trials with at least one
/// record are stored; n_trials counts the full id range.
struct TrialIndex {
    struct Trial {
        std::uint64_t id;
        std::uint32_t s_off, s_len;
        std::uint32_t a_off, a_len;
    };

    std::vector<double> stokes;
    std::vector<double> anti;
    std::vector<Trial> trials;
    std::vector<std::uint32_t> with_stokes; ///< indices into trials
    std::vector<std::uint32_t> with_anti;
    std::uint64_t n_trials = 0;

    TrialIndex(const std::vector<DetectionRecord>& records,
               const protocol::ProtocolConfig& cfg) {
        const double sb = cfg.stokes_gate_begin() - kGateTol;
        const double se = cfg.stokes_gate_end() + kGateTol;
        const double ab = cfg.anti_stokes_gate_begin() - kGateTol;
        const double ae = cfg.anti_stokes_gate_end() + kGateTol;

        bool have_trial = false;
        std::uint64_t current = 0;
        std::vector<double> s_buf, a_buf;
        auto flush = [&] {
            if (!have_trial) return;
            Trial t;
            t.id = current;
            t.s_off = static_cast<std::uint32_t>(stokes.size());
            t.s_len = static_cast<std::uint32_t>(s_buf.size());
            t.a_off = static_cast<std::uint32_t>(anti.size());
            t.a_len = static_cast<std::uint32_t>(a_buf.size());
            stokes.insert(stokes.end(), s_buf.begin(), s_buf.end());
            anti.insert(anti.end(), a_buf.begin(), a_buf.end());
            if (t.s_len > 0) with_stokes.push_back(static_cast<std::uint32_t>(trials.size()));
            if (t.a_len > 0) with_anti.push_back(static_cast<std::uint32_t>(trials.size()));
            trials.push_back(t);
            s_buf.clear();
            a_buf.clear();
        };

        for (const auto& rec : records) {
            if (have_trial && rec.trial_id != current) {
                if (rec.trial_id < current)
                    throw DataError("records not grouped by trial: trial " +
                                    std::to_string(rec.trial_id) + " follows " +
                                    std::to_string(current));
                flush();
            }
            current = rec.trial_id;
            have_trial = true;
            if (rec.channel == Channel::stokes) {
                if (rec.timestamp_us < sb || rec.timestamp_us > se)
                    throw DataError("stokes record outside its gate in trial " +
                                    std::to_string(rec.trial_id));
                s_buf.push_back(rec.timestamp_us);
            } else {
                if (rec.timestamp_us < ab || rec.timestamp_us > ae)
                    throw DataError("anti_stokes record outside its gate in trial " +
                                    std::to_string(rec.trial_id));
                a_buf.push_back(rec.timestamp_us);
            }
        }
        flush();
        n_trials = have_trial ? current + 1 : 0;
    }

    std::span<const double> stokes_of(const Trial& t) const {
        return {stokes.data() + t.s_off, t.s_len};
    }
    std::span<const double> anti_of(const Trial& t) const {
        return {anti.data() + t.a_off, t.a_len};
    }
    std::uint64_t n_stokes() const { return stokes.size(); }
    std::uint64_t n_anti() const { return anti.size(); }
};

struct BinGrid {
    double bin_width;
    double tau_origin; // center of bin 0
    std::size_t n_bins;
    std::size_t peak_bin;

    explicit BinGrid(const protocol::ProtocolConfig& cfg) {
        bin_width = cfg.bin_us();
        const double tau0 = cfg.tau_peak_us();
        const double tau_min = cfg.stokes_gate_begin() + cfg.anti_stokes_gate_begin();
        const double tau_max = cfg.stokes_gate_end() + cfg.anti_stokes_gate_end();
        const auto k_min = static_cast<long>(std::floor((tau_min - tau0) / bin_width + 0.5));
        const auto k_max = static_cast<long>(std::floor((tau_max - tau0) / bin_width + 0.5));
        n_bins = static_cast<std::size_t>(k_max - k_min + 1);
        tau_origin = tau0 + static_cast<double>(k_min) * bin_width;
        peak_bin = static_cast<std::size_t>(-k_min);
    }

    long index(double tau) const {
        return static_cast<long>(std::floor((tau - tau_origin) / bin_width + 0.5));
    }
};

void accumulate_pairs(const TrialIndex& idx, const TrialIndex::Trial& t, const BinGrid& grid,
                      std::vector<std::uint64_t>& counts) {
    for (double ts : idx.stokes_of(t)) {
        for (double ta : idx.anti_of(t)) {
            const long k = grid.index(ts + ta);
            if (k >= 0 && static_cast<std::size_t>(k) < counts.size())
                ++counts[static_cast<std::size_t>(k)];
        }
    }
}

CoincidenceHistogram make_histogram(const TrialIndex& idx, const BinGrid& grid,
                                    std::vector<std::uint64_t> counts) {
    CoincidenceHistogram hist;
    hist.bin_width_us = grid.bin_width;
    hist.tau_origin_us = grid.tau_origin;
    hist.counts = std::move(counts);
    hist.n_trials = idx.n_trials;
    hist.n_stokes = idx.n_stokes();
    hist.n_anti_stokes = idx.n_anti();
    hist.peak_model_bin_ = grid.peak_bin;
    return hist;
}

/// Mixed-pair loop shared by the accidental estimator, the auto-correlation
/// and the efficiency estimator. Calls fn(time_a, time_b) for every pair of
/// (photon in trial i from list_a) x (photon in partner trial from list_b).
template <typename Fn>
std::uint64_t mix_pairs(const TrialIndex& idx, const std::vector<std::uint32_t>& occupied_a,
                        const std::vector<std::uint32_t>& occupied_b, bool a_is_stokes,
                        bool b_is_stokes, int partners, Fn&& fn) {
    std::uint64_t total_pairs = 0;
    if (occupied_a.empty() || occupied_b.empty()) return 0;
    const std::size_t nb = occupied_b.size();
    for (std::size_t ia = 0; ia < occupied_a.size(); ++ia) {
        const auto& ta = idx.trials[occupied_a[ia]];
        const auto list_a = a_is_stokes ? idx.stokes_of(ta) : idx.anti_of(ta);
        // Partner with the next K occupied trials (cyclic), skipping itself.
        const auto start = static_cast<std::size_t>(
            std::upper_bound(occupied_b.begin(), occupied_b.end(), occupied_a[ia]) -
            occupied_b.begin());
        int used = 0;
        for (std::size_t step = 0; step < nb && used < partners; ++step) {
            const auto ib = occupied_b[(start + step) % nb];
            if (ib == occupied_a[ia]) continue;
            const auto& tb = idx.trials[ib];
            const auto list_b = b_is_stokes ? idx.stokes_of(tb) : idx.anti_of(tb);
            for (double x : list_a)
                for (double y : list_b) fn(x, y);
            total_pairs += list_a.size() * list_b.size();
            ++used;
        }
    }
    return total_pairs;
}

} // namespace

std::optional<std::size_t> CoincidenceHistogram::bin_index(double tau_us) const {
    const auto k = static_cast<long>(std::floor((tau_us - tau_origin_us) / bin_width_us + 0.5));
    if (k < 0 || static_cast<std::size_t>(k) >= counts.size()) return std::nullopt;
    return static_cast<std::size_t>(k);
}

CoincidenceHistogram coincidence_histogram_serial(const std::vector<DetectionRecord>& records,
                                                  const protocol::ProtocolConfig& cfg) {
    cfg.validate();
    const TrialIndex idx(records, cfg);
    const BinGrid grid(cfg);
    std::vector<std::uint64_t> counts(grid.n_bins, 0);
    for (const auto& t : idx.trials) accumulate_pairs(idx, t, grid, counts);
    return make_histogram(idx, grid, std::move(counts));
}

CoincidenceHistogram coincidence_histogram(const std::vector<DetectionRecord>& records,
                                           const protocol::ProtocolConfig& cfg, bool parallel) {
#ifndef _OPENMP
    (void)parallel;
    return coincidence_histogram_serial(records, cfg);
#else
    if (!parallel) return coincidence_histogram_serial(records, cfg);
    cfg.validate();
    const TrialIndex idx(records, cfg);
    const BinGrid grid(cfg);
    std::vector<std::uint64_t> counts(grid.n_bins, 0);
    const auto n = static_cast<std::int64_t>(idx.trials.size());
#pragma omp parallel
    {
        std::vector<std::uint64_t> local(grid.n_bins, 0);
#pragma omp for schedule(static) nowait
        for (std::int64_t i = 0; i < n; ++i)
            accumulate_pairs(idx, idx.trials[static_cast<std::size_t>(i)], grid, local);
#pragma omp critical
        for (std::size_t b = 0; b < grid.n_bins; ++b) counts[b] += local[b];
    }
    return make_histogram(idx, grid, std::move(counts));
#endif
}

AccidentalEstimate accidental_estimate(const std::vector<DetectionRecord>& records,
                                       const protocol::ProtocolConfig& cfg,
                                       AccidentalMethod method, int partner_trials) {
    cfg.validate();
    const TrialIndex idx(records, cfg);
    const BinGrid grid(cfg);

    AccidentalEstimate est;
    est.method = method;
    est.expected.assign(grid.n_bins, 0.0);
    est.raw_counts.assign(grid.n_bins, 0.0);
    est.partner_trials = partner_trials;

    if (method == AccidentalMethod::analytic_triangle) {
        if (idx.n_trials == 0) throw AnalysisError("accidental_estimate: empty stream");
        const double singles_rate =
            static_cast<double>(idx.n_stokes()) * static_cast<double>(idx.n_anti()) /
            static_cast<double>(idx.n_trials);
        const double sb = cfg.stokes_gate_begin(), se = cfg.stokes_gate_end();
        const double ab = cfg.anti_stokes_gate_begin(), ae = cfg.anti_stokes_gate_end();
        est.equivalent_counts =
            1.0 / (1.0 / std::max<double>(1, idx.n_stokes()) +
                   1.0 / std::max<double>(1, idx.n_anti()));
        for (std::size_t b = 0; b < grid.n_bins; ++b) {
            const double tau = grid.tau_origin + static_cast<double>(b) * grid.bin_width;
            // Overlap of the two uniform gate densities at this delay.
            const double overlap =
                std::max(0.0, std::min(se, tau - ab) - std::max(sb, tau - ae));
            est.expected[b] = singles_rate * overlap * grid.bin_width / (cfg.gate_us * cfg.gate_us);
            est.raw_counts[b] = est.equivalent_counts;
        }
        return est;
    }

    if (idx.n_trials < 2)
        throw AnalysisError("accidental_estimate: inter_trial needs >= 2 trials");
    if (partner_trials < 1)
        throw AnalysisError("accidental_estimate: partner_trials must be >= 1");

    std::vector<std::uint64_t> mixed(grid.n_bins, 0);
    const std::uint64_t total_mixed =
        mix_pairs(idx, idx.with_stokes, idx.with_anti, true, false, partner_trials,
                  [&](double ts, double ta) {
                      const long k = grid.index(ts + ta);
                      if (k >= 0 && static_cast<std::size_t>(k) < grid.n_bins)
                          ++mixed[static_cast<std::size_t>(k)];
                  });
    if (total_mixed == 0)
        throw AnalysisError("accidental_estimate: no mixed pairs (not enough occupied trials)");

    // Normalize mixed pairs to the same-trial accidental expectation:
    // expected accidental pairs over all bins = N_S * N_aS / n_trials.
    const double scale = static_cast<double>(idx.n_stokes()) *
                         static_cast<double>(idx.n_anti()) /
                         (static_cast<double>(idx.n_trials) * static_cast<double>(total_mixed));
    for (std::size_t b = 0; b < grid.n_bins; ++b) {
        est.expected[b] = static_cast<double>(mixed[b]) * scale;
        est.raw_counts[b] = static_cast<double>(mixed[b]);
    }
    est.equivalent_counts = static_cast<double>(total_mixed);
    return est;
}

CorrelationResult cross_correlation(const CoincidenceHistogram& hist,
                                    const AccidentalEstimate& acc) {
    if (acc.expected.size() != hist.counts.size())
        throw AnalysisError("cross_correlation: histogram/accidental bin mismatch");
    CorrelationResult result;
    const std::size_t n = hist.counts.size();
    result.taus_us.resize(n);
    result.g_values.assign(n, std::numeric_limits<double>::quiet_NaN());
    result.g_errors.assign(n, 0.0);
    result.accidentals = acc.expected;
    result.defined.assign(n, false);
    result.n_trials = hist.n_trials;
    for (std::size_t b = 0; b < n; ++b) {
        result.taus_us[b] = hist.bin_center(b);
        const double a = acc.expected[b];
        if (!(a > 0.0)) continue; // undefined bin, stays NaN
        const double c = static_cast<double>(hist.counts[b]);
        const double raw = acc.raw_counts[b];
        result.g_values[b] = c / a;
        const double count_var = std::max(c, 1.0);
        const double acc_rel_var = raw > 0.0 ? 1.0 / raw : 0.0;
        result.g_errors[b] = std::sqrt(count_var + c * c * acc_rel_var) / a;
        result.defined[b] = true;
    }
    return result;
}

ValueWithError auto_correlation(const std::vector<DetectionRecord>& records, Channel channel,
                                const protocol::ProtocolConfig& cfg, double delta_max_us,
                                int partner_trials) {
    cfg.validate();
    const TrialIndex idx(records, cfg);
    const bool is_stokes = channel == Channel::stokes;
    const auto& occupied = is_stokes ? idx.with_stokes : idx.with_anti;
    const std::uint64_t n_singles = is_stokes ? idx.n_stokes() : idx.n_anti();
    if (n_singles == 0)
        throw AnalysisError("auto_correlation: no " + source::channel_name(channel) + " records");
    if (delta_max_us <= 0.0) delta_max_us = cfg.bin_us();

    std::uint64_t same = 0;
    for (const auto ti : occupied) {
        const auto& t = idx.trials[ti];
        const auto list = is_stokes ? idx.stokes_of(t) : idx.anti_of(t);
        for (std::size_t a = 0; a < list.size(); ++a)
            for (std::size_t b = a + 1; b < list.size(); ++b)
                if (std::abs(list[a] - list[b]) <= delta_max_us) ++same;
    }

    std::uint64_t mixed_in_window = 0;
    const std::uint64_t total_mixed =
        mix_pairs(idx, occupied, occupied, is_stokes, is_stokes, partner_trials,
                  [&](double x, double y) {
                      if (std::abs(x - y) <= delta_max_us) ++mixed_in_window;
                  });
    if (total_mixed == 0 || mixed_in_window == 0)
        throw AnalysisError("auto_correlation: no mixed pairs in the window");

    // Expected accidental same-trial unordered pairs in the window.
    const double n = static_cast<double>(n_singles);
    const double expected_same_pairs = n * n / (2.0 * static_cast<double>(idx.n_trials));
    const double accidental =
        static_cast<double>(mixed_in_window) * expected_same_pairs / static_cast<double>(total_mixed);

    ValueWithError out;
    out.value = static_cast<double>(same) / accidental;
    const double count_var = std::max<double>(same, 1.0);
    out.error = std::sqrt(count_var + static_cast<double>(same) * static_cast<double>(same) /
                                          static_cast<double>(mixed_in_window)) /
                accidental;
    return out;
}

CauchySchwarzResult cauchy_schwarz(const ValueWithError& g_s_as, const ValueWithError& g_ss,
                                   const ValueWithError& g_as_as) {
    for (const auto* v : {&g_s_as, &g_ss, &g_as_as})
        if (!(v->value > 0.0))
            throw DomainError("cauchy_schwarz: correlation inputs must be > 0");
    CauchySchwarzResult result;
    result.r = g_s_as.value * g_s_as.value / (g_ss.value * g_as_as.value);
    const double rel1 = 2.0 * g_s_as.error / g_s_as.value;
    const double rel2 = g_ss.error / g_ss.value;
    const double rel3 = g_as_as.error / g_as_as.value;
    const double sigma_log = std::sqrt(rel1 * rel1 + rel2 * rel2 + rel3 * rel3);
    result.err_plus = result.r * (std::exp(sigma_log) - 1.0);
    result.err_minus = result.r * (1.0 - std::exp(-sigma_log));
    return result;
}

PeakFit fit_peak(const CorrelationResult& result) {
    std::vector<double> x, y, s;
    for (std::size_t b = 0; b < result.g_values.size(); ++b) {
        if (!result.defined[b]) continue;
        x.push_back(result.taus_us[b]);
        y.push_back(result.g_values[b]);
        s.push_back(result.g_errors[b]);
    }
    if (x.size() < 5) throw AnalysisError("fit_peak: need at least 5 defined bins");
    const auto fit = fit::fit_gaussian_baseline(x, y, s);
    if (fit.center < x.front() || fit.center > x.back())
        throw AnalysisError("fit_peak: fitted center outside the tau range");
    PeakFit peak;
    peak.center_us = fit.center;
    peak.fwhm_us = 2.3548200450309493 * fit.sigma;
    peak.amplitude = fit.amplitude;
    peak.baseline = fit.baseline;
    peak.fit_rms = fit.rms;
    return peak;
}

ValueWithError readout_efficiency(const std::vector<DetectionRecord>& records,
                                  const protocol::ProtocolConfig& cfg, double window_us,
                                  int partner_trials) {
    cfg.validate();
    const TrialIndex idx(records, cfg);
    if (idx.n_stokes() == 0)
        throw AnalysisError("readout_efficiency: no Stokes detections (p_S estimate is zero)");
    if (window_us <= 0.0) window_us = cfg.bin_us();
    const double tau0 = cfg.tau_peak_us();
    const double half = 0.5 * window_us;

    std::uint64_t coinc = 0;
    for (const auto& t : idx.trials)
        for (double ts : idx.stokes_of(t))
            for (double ta : idx.anti_of(t))
                if (std::abs(ts + ta - tau0) <= half) ++coinc;

    std::uint64_t mixed_in_window = 0;
    const std::uint64_t total_mixed =
        mix_pairs(idx, idx.with_stokes, idx.with_anti, true, false, partner_trials,
                  [&](double ts, double ta) {
                      if (std::abs(ts + ta - tau0) <= half) ++mixed_in_window;
                  });
    double accidental = 0.0;
    double acc_rel_var = 0.0;
    if (total_mixed > 0) {
        const double scale = static_cast<double>(idx.n_stokes()) *
                             static_cast<double>(idx.n_anti()) /
                             (static_cast<double>(idx.n_trials) * static_cast<double>(total_mixed));
        accidental = static_cast<double>(mixed_in_window) * scale;
        if (mixed_in_window > 0) acc_rel_var = 1.0 / static_cast<double>(mixed_in_window);
    }

    ValueWithError out;
    const double n_stokes = static_cast<double>(idx.n_stokes());
    out.value = (static_cast<double>(coinc) - accidental) / n_stokes;
    out.error = std::sqrt(std::max<double>(coinc, 1.0) + accidental * accidental * acc_rel_var) /
                n_stokes;
    return out;
}

} // namespace afcdlcz::analysis
