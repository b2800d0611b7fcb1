// Benchmark the OpenMP kernels against their serial reference
// implementations and verify that both produce identical output.
//
// Usage: bench_parallel [trials] [ions] [time_points]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "afcdlcz/analysis.hpp"
#include "afcdlcz/ensemble.hpp"
#include "afcdlcz/source.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using Clock = std::chrono::steady_clock;

template <typename F>
double time_ms(F&& f) {
    const auto t0 = Clock::now();
    f();
    const auto t1 = Clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

void report(const char* name, double serial_ms, double parallel_ms, bool identical) {
    std::printf("%-24s serial %9.2f ms   parallel %9.2f ms   speedup %5.2fx   %s\n", name,
                serial_ms, parallel_ms, serial_ms / parallel_ms,
                identical ? "outputs identical" : "OUTPUTS DIFFER");
}

} // namespace

int main(int argc, char** argv) {
    using namespace afcdlcz;

    const std::uint64_t trials = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 2'000'000;
    const std::size_t ions = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 20'000;
    const std::size_t points = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 4'000;

#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads = %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP disabled; parallel paths fall back to serial\n");
#endif
    std::printf("trials = %llu, ions = %zu, trace points = %zu\n\n",
                static_cast<unsigned long long>(trials), ions, points);

    protocol::ProtocolConfig cfg;
    const std::uint64_t seed = 42;

    // 1. Trial generation.
    source::RunOutput serial_run, parallel_run;
    const double t_src_serial = time_ms([&] {
        serial_run = source::run_trials_serial(cfg, trials, seed);
    });
    const double t_src_parallel = time_ms([&] {
        source::RunOptions opts;
        opts.parallel = true;
        parallel_run = source::run_trials(cfg, trials, seed, opts);
    });
    report("run_trials", t_src_serial, t_src_parallel,
           serial_run.records == parallel_run.records);

    // 2. Coincidence histogram over the generated stream.
    analysis::CoincidenceHistogram h_serial, h_parallel;
    const double t_hist_serial = time_ms([&] {
        h_serial = analysis::coincidence_histogram_serial(serial_run.records, cfg);
    });
    const double t_hist_parallel = time_ms([&] {
        h_parallel = analysis::coincidence_histogram(serial_run.records, cfg, true);
    });
    report("coincidence_histogram", t_hist_serial, t_hist_parallel,
           h_serial.counts == h_parallel.counts && h_serial.n_trials == h_parallel.n_trials);

    // 3. Collective coherence trace.
    ensemble::CombSpec comb;
    const auto pop = ensemble::sample_ions(comb, cfg.spin_fwhm_khz, ions, seed);
    std::vector<double> times(points);
    for (std::size_t i = 0; i < points; ++i)
        times[i] = 25.0 * static_cast<double>(i) / static_cast<double>(points);
    std::vector<std::complex<double>> trace_serial, trace_parallel;
    const double t_tr_serial = time_ms([&] {
        trace_serial = ensemble::coherence_trace_serial(pop, times);
    });
    const double t_tr_parallel = time_ms([&] {
        trace_parallel = ensemble::coherence_trace(pop, times);
    });
    report("coherence_trace", t_tr_serial, t_tr_parallel, trace_serial == trace_parallel);

    return 0;
}
