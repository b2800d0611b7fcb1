// afcdlcz: simulate and analyze multimode AFC-DLCZ photon-pair detection
// streams, evaluate the analytic cross-correlation model, and run parameter
// sweeps. All outputs are plot-ready delimited text plus a JSON manifest
// that pins the resolved configuration, seed and file digests.

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "afcdlcz/analysis.hpp"
#include "afcdlcz/config_io.hpp"
#include "afcdlcz/model.hpp"
#include "afcdlcz/record_io.hpp"
#include "afcdlcz/sha256.hpp"
#include "afcdlcz/source.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace afcdlcz;
using json = nlohmann::json;

constexpr const char* kVersion = "0.1.0";

enum ExitCode { kOk = 0, kUsage = 1, kConfig = 2, kData = 3, kAnalysis = 4 };

void apply_thread_env() {
#ifdef _OPENMP
    if (const char* env = std::getenv("AFCDLCZ_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) omp_set_num_threads(n);
    }
#endif
}

std::string utc_now() {
    char buf[32];
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(const std::string& out_path, const std::string& command,
                    const protocol::ProtocolConfig& cfg, std::uint64_t seed,
                    const std::map<std::string, std::string>& inputs,
                    const std::map<std::string, std::string>& outputs) {
    json m;
    m["tool"] = "afcdlcz";
    m["version"] = kVersion;
    m["command"] = command;
    m["seed"] = seed;
    m["created_utc"] = utc_now();
    m["config"] = config_io::to_map(cfg);
    json in = json::object(), out = json::object();
    for (const auto& [path, digest] : inputs) in[path] = digest;
    for (const auto& [path, digest] : outputs) out[path] = digest;
    m["inputs"] = in;
    m["outputs"] = out;
    std::ofstream f(out_path);
    if (!f) throw DataError("cannot open '" + out_path + "' for writing");
    f << m.dump(2) << "\n";
}

protocol::ProtocolConfig load_config(const std::string& path) {
    if (path.empty()) return protocol::ProtocolConfig{};
    return config_io::parse_file(path);
}

double format_or_nan(const std::optional<double>& v) {
    return v ? *v : std::numeric_limits<double>::quiet_NaN();
}

/// Everything cmd_analyze reports, reused by cmd_sweep.
struct AnalysisSummary {
    std::uint64_t n_trials = 0, n_stokes = 0, n_anti = 0;
    double peak_tau_us = 0.0;
    std::uint64_t peak_counts = 0;
    double peak_accidental = 0.0;
    std::optional<analysis::ValueWithError> central_g;
    std::optional<analysis::ValueWithError> g_ss, g_asas;
    std::optional<analysis::CauchySchwarzResult> cs;
    std::optional<analysis::ValueWithError> eta_r_bin, eta_r_2tauc;
    std::optional<analysis::PeakFit> fit;
    int mode_count = 0;
};

struct AnalysisFiles {
    analysis::CoincidenceHistogram hist;
    analysis::AccidentalEstimate acc;
    analysis::CorrelationResult corr;
    AnalysisSummary summary;
};

AnalysisFiles analyze_records(const std::vector<source::DetectionRecord>& records,
                              const protocol::ProtocolConfig& cfg,
                              analysis::AccidentalMethod method) {
    if (records.empty()) throw AnalysisError("analyze: record stream is empty");
    AnalysisFiles out;
    out.hist = analysis::coincidence_histogram(records, cfg);
    out.acc = analysis::accidental_estimate(records, cfg, method);
    out.corr = analysis::cross_correlation(out.hist, out.acc);

    auto& s = out.summary;
    s.n_trials = out.hist.n_trials;
    s.n_stokes = out.hist.n_stokes;
    s.n_anti = out.hist.n_anti_stokes;
    s.mode_count = protocol::mode_count(cfg.gate_us, cfg.pair_fwhm_us);

    std::size_t imax = 0;
    for (std::size_t i = 1; i < out.hist.counts.size(); ++i)
        if (out.hist.counts[i] > out.hist.counts[imax]) imax = i;
    s.peak_tau_us = out.hist.bin_center(imax);
    s.peak_counts = out.hist.counts[imax];
    s.peak_accidental = out.acc.expected[imax];

    const std::size_t pb = out.hist.peak_model_bin();
    if (pb < out.corr.g_values.size() && out.corr.defined[pb])
        s.central_g = analysis::ValueWithError{out.corr.g_values[pb], out.corr.g_errors[pb]};

    try {
        s.g_ss = analysis::auto_correlation(records, source::Channel::stokes, cfg);
    } catch (const AnalysisError&) {
    }
    try {
        s.g_asas = analysis::auto_correlation(records, source::Channel::anti_stokes, cfg);
    } catch (const AnalysisError&) {
    }
    if (s.central_g && s.g_ss && s.g_asas && s.central_g->value > 0.0 && s.g_ss->value > 0.0 &&
        s.g_asas->value > 0.0)
        s.cs = analysis::cauchy_schwarz(*s.central_g, *s.g_ss, *s.g_asas);

    try {
        s.eta_r_bin = analysis::readout_efficiency(records, cfg);
        s.eta_r_2tauc = analysis::readout_efficiency(records, cfg, 2.0 * cfg.pair_fwhm_us);
    } catch (const AnalysisError&) {
    }
    try {
        s.fit = analysis::fit_peak(out.corr);
    } catch (const AnalysisError&) {
    }
    return out;
}

void write_summary(std::ostream& os, const AnalysisFiles& a,
                   const protocol::ProtocolConfig& cfg, analysis::AccidentalMethod method) {
    const auto& s = a.summary;
    char buf[128];
    auto kv = [&](const char* key, double v) {
        std::snprintf(buf, sizeof(buf), "%s = %.10g\n", key, v);
        os << buf;
    };
    os << "n_trials = " << s.n_trials << "\n";
    os << "n_stokes = " << s.n_stokes << "\n";
    os << "n_anti_stokes = " << s.n_anti << "\n";
    kv("p_s_hat", static_cast<double>(s.n_stokes) / static_cast<double>(s.n_trials));
    kv("bin_ns", cfg.bin_ns);
    os << "accidental_method = "
       << (method == analysis::AccidentalMethod::inter_trial ? "inter_trial" : "analytic_triangle")
       << "\n";
    kv("peak_tau_us", s.peak_tau_us);
    os << "peak_counts = " << s.peak_counts << "\n";
    kv("peak_accidental", s.peak_accidental);
    kv("expected_peak_tau_us", cfg.tau_peak_us());
    kv("central_g", format_or_nan(s.central_g ? std::optional(s.central_g->value) : std::nullopt));
    kv("central_g_err",
       format_or_nan(s.central_g ? std::optional(s.central_g->error) : std::nullopt));
    kv("g_ss", format_or_nan(s.g_ss ? std::optional(s.g_ss->value) : std::nullopt));
    kv("g_ss_err", format_or_nan(s.g_ss ? std::optional(s.g_ss->error) : std::nullopt));
    kv("g_asas", format_or_nan(s.g_asas ? std::optional(s.g_asas->value) : std::nullopt));
    kv("g_asas_err", format_or_nan(s.g_asas ? std::optional(s.g_asas->error) : std::nullopt));
    kv("cauchy_schwarz_r", format_or_nan(s.cs ? std::optional(s.cs->r) : std::nullopt));
    kv("cauchy_schwarz_r_err_plus",
       format_or_nan(s.cs ? std::optional(s.cs->err_plus) : std::nullopt));
    kv("cauchy_schwarz_r_err_minus",
       format_or_nan(s.cs ? std::optional(s.cs->err_minus) : std::nullopt));
    kv("eta_r_bin",
       format_or_nan(s.eta_r_bin ? std::optional(s.eta_r_bin->value) : std::nullopt));
    kv("eta_r_bin_err",
       format_or_nan(s.eta_r_bin ? std::optional(s.eta_r_bin->error) : std::nullopt));
    kv("eta_r_2tauc",
       format_or_nan(s.eta_r_2tauc ? std::optional(s.eta_r_2tauc->value) : std::nullopt));
    kv("eta_r_2tauc_err",
       format_or_nan(s.eta_r_2tauc ? std::optional(s.eta_r_2tauc->error) : std::nullopt));
    kv("fit_center_us", format_or_nan(s.fit ? std::optional(s.fit->center_us) : std::nullopt));
    kv("fit_fwhm_us", format_or_nan(s.fit ? std::optional(s.fit->fwhm_us) : std::nullopt));
    kv("fit_amplitude", format_or_nan(s.fit ? std::optional(s.fit->amplitude) : std::nullopt));
    kv("fit_baseline", format_or_nan(s.fit ? std::optional(s.fit->baseline) : std::nullopt));
    kv("fit_rms", format_or_nan(s.fit ? std::optional(s.fit->fit_rms) : std::nullopt));
    os << "mode_count = " << s.mode_count << "\n";
}

void write_hist_file(const std::string& path, const AnalysisFiles& a) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open '" + path + "' for writing");
    f << "# tau_us\tcounts\taccidental\n";
    char line[96];
    for (std::size_t i = 0; i < a.hist.counts.size(); ++i) {
        std::snprintf(line, sizeof(line), "%.6f\t%llu\t%.10g\n", a.hist.bin_center(i),
                      static_cast<unsigned long long>(a.hist.counts[i]), a.acc.expected[i]);
        f << line;
    }
}

void write_corr_file(const std::string& path, const AnalysisFiles& a) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open '" + path + "' for writing");
    f << "# tau_us\tcounts\taccidental\tg\tg_err\n";
    char line[128];
    for (std::size_t i = 0; i < a.corr.taus_us.size(); ++i) {
        if (!a.corr.defined[i]) {
            std::snprintf(line, sizeof(line), "%.6f\t%llu\t%.10g\tundef\tundef\n",
                          a.corr.taus_us[i], static_cast<unsigned long long>(a.hist.counts[i]),
                          a.corr.accidentals[i]);
        } else {
            std::snprintf(line, sizeof(line), "%.6f\t%llu\t%.10g\t%.10g\t%.10g\n",
                          a.corr.taus_us[i], static_cast<unsigned long long>(a.hist.counts[i]),
                          a.corr.accidentals[i], a.corr.g_values[i], a.corr.g_errors[i]);
        }
        f << line;
    }
}

std::vector<double> parse_grid(const std::string& spec) {
    // Either "v1,v2,..." or "start:stop:count[:log]".
    std::vector<double> grid;
    if (spec.find(':') != std::string::npos) {
        std::istringstream ss(spec);
        std::string tok;
        std::vector<std::string> parts;
        while (std::getline(ss, tok, ':')) parts.push_back(tok);
        if (parts.size() < 3 || parts.size() > 4)
            throw ConfigError("grid spec must be start:stop:count[:log]");
        const double start = std::stod(parts[0]);
        const double stop = std::stod(parts[1]);
        const int count = std::stoi(parts[2]);
        const bool log_spaced = parts.size() == 4 && parts[3] == "log";
        if (count < 1) throw ConfigError("grid count must be >= 1");
        if (log_spaced && (start <= 0.0 || stop <= 0.0))
            throw ConfigError("log grid requires positive endpoints");
        for (int i = 0; i < count; ++i) {
            const double f = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
            grid.push_back(log_spaced ? start * std::pow(stop / start, f)
                                      : start + (stop - start) * f);
        }
    } else {
        std::string copy = spec;
        for (auto& c : copy)
            if (c == ',') c = ' ';
        std::istringstream ss(copy);
        double v = 0.0;
        while (ss >> v) grid.push_back(v);
    }
    if (grid.empty()) throw ConfigError("empty grid spec '" + spec + "'");
    return grid;
}

int cmd_simulate(const std::string& config_path, std::uint64_t trials, std::uint64_t seed,
                 const std::string& out_path, const std::string& format,
                 const std::string& truth_path, const std::string& command) {
    auto cfg = load_config(config_path);
    if (trials == 0) {
        std::cerr << "simulate: --trials must be >= 1\n";
        return kUsage;
    }
    source::RunOptions opts;
    opts.with_truth = !truth_path.empty();
    const auto run = source::run_trials(cfg, trials, seed, opts);
    for (const auto& w : run.warnings) std::cerr << "warning: " << w << "\n";

    const auto fmt = format == "text" ? record_io::Format::text : record_io::Format::binary;
    record_io::write_file(out_path, run.records, fmt);
    std::map<std::string, std::string> outputs{{out_path, sha256_file_hex(out_path)}};
    if (opts.with_truth) {
        record_io::write_truth_file(truth_path, run.truth);
        outputs[truth_path] = sha256_file_hex(truth_path);
    }
    std::map<std::string, std::string> inputs;
    if (!config_path.empty()) inputs[config_path] = sha256_file_hex(config_path);
    write_manifest(out_path + ".manifest.json", command, cfg, seed, inputs, outputs);

    std::uint64_t n_stokes = 0;
    for (const auto& r : run.records)
        if (r.channel == source::Channel::stokes) ++n_stokes;
    std::cout << "trials = " << trials << "\n"
              << "stokes_records = " << n_stokes << "\n"
              << "anti_stokes_records = " << run.records.size() - n_stokes << "\n"
              << "expected_peak_tau_us = " << cfg.tau_peak_us() << "\n"
              << "records_file = " << out_path << "\n";
    return kOk;
}

int cmd_analyze(const std::string& config_path, const std::string& records_path,
                const std::string& prefix, const std::string& method_name, double bin_ns,
                const std::string& command) {
    auto cfg = load_config(config_path);
    if (bin_ns > 0.0) cfg.bin_ns = bin_ns;
    const auto method = method_name == "analytic_triangle"
                            ? analysis::AccidentalMethod::analytic_triangle
                            : analysis::AccidentalMethod::inter_trial;
    const auto records = record_io::read_file(records_path);
    const auto a = analyze_records(records, cfg, method);

    const std::string hist_path = prefix + ".hist.tsv";
    const std::string corr_path = prefix + ".corr.tsv";
    const std::string summary_path = prefix + ".summary.txt";
    write_hist_file(hist_path, a);
    write_corr_file(corr_path, a);
    {
        std::ofstream f(summary_path);
        if (!f) throw DataError("cannot open '" + summary_path + "' for writing");
        write_summary(f, a, cfg, method);
    }
    std::map<std::string, std::string> inputs{{records_path, sha256_file_hex(records_path)}};
    if (!config_path.empty()) inputs[config_path] = sha256_file_hex(config_path);
    write_manifest(prefix + ".manifest.json", command, cfg, 0,
                   inputs,
                   {{hist_path, sha256_file_hex(hist_path)},
                    {corr_path, sha256_file_hex(corr_path)},
                    {summary_path, sha256_file_hex(summary_path)}});
    write_summary(std::cout, a, cfg, method);
    return kOk;
}

int cmd_model(const std::string& config_path, const std::string& grid_spec,
              const std::string& out_path, const std::string& command) {
    auto cfg = load_config(config_path);
    const auto grid = parse_grid(grid_spec);
    const double beta = cfg.resolved_beta();
    const double eta_r = cfg.resolved_eta_r_per_bin();
    const auto curve = model::model_curve(grid, eta_r, beta, cfg.p_n_per_bin, cfg.bin_ns);

    std::ofstream f(out_path);
    if (!f) throw DataError("cannot open '" + out_path + "' for writing");
    char line[256];
    f << "# afcdlcz model curve: g = 1 + eta_r / ((eta_r + beta) p_s + p_n)\n";
    std::snprintf(line, sizeof(line), "# bin_ns = %.10g\n", cfg.bin_ns);
    f << line;
    std::snprintf(line, sizeof(line), "# eta_r_per_bin = %.10g\n", eta_r);
    f << line;
    std::snprintf(line, sizeof(line), "# p_n_per_bin = %.10g\n", cfg.p_n_per_bin);
    f << line;
    std::snprintf(line, sizeof(line),
                  "# beta = %.10g (t_spin_ms = %.10g, t1_ms = %.10g, gamma_es = %.10g, "
                  "gamma_eg = %.10g, eta_t = %.10g)\n",
                  beta, cfg.t_spin_us * 1e-3, cfg.t1_optical_ms, cfg.gamma_es, cfg.gamma_eg,
                  cfg.eta_t);
    f << line;
    f << "# p_s\tg\n";
    for (const auto& [p_s, g] : curve.points) {
        std::snprintf(line, sizeof(line), "%.10g\t%.10g\n", p_s, g);
        f << line;
    }
    f.close();
    std::map<std::string, std::string> inputs;
    if (!config_path.empty()) inputs[config_path] = sha256_file_hex(config_path);
    write_manifest(out_path + ".manifest.json", command, cfg, 0, inputs,
                   {{out_path, sha256_file_hex(out_path)}});
    std::cout << "beta = " << beta << "\n"
              << "eta_r_per_bin = " << eta_r << "\n"
              << "points = " << curve.points.size() << "\n"
              << "curve_file = " << out_path << "\n";
    return kOk;
}

int cmd_sweep(const std::string& config_path, const std::string& axis,
              const std::string& values_spec, std::uint64_t trials, std::uint64_t seed,
              const std::string& out_path, const std::string& command) {
    const auto base_cfg = load_config(config_path);
    const auto values = parse_grid(values_spec);
    if (trials == 0) {
        std::cerr << "sweep: --trials must be >= 1\n";
        return kUsage;
    }
    {
        // Fail fast on an unknown axis before any simulation runs.
        auto probe = base_cfg;
        config_io::set_field(probe, axis, values.front());
    }

    std::ofstream f(out_path);
    if (!f) throw DataError("cannot open '" + out_path + "' for writing");
    f << "# axis = " << axis << ", trials_per_point = " << trials << ", seed = " << seed << "\n";
    f << "# " << axis
      << "\tcentral_g\tcentral_g_err\tr\tr_err_plus\tr_err_minus\teta_r_bin\teta_r_2tauc\t"
         "model_g\tbeta\n";
    char line[256];
    for (std::size_t i = 0; i < values.size(); ++i) {
        auto cfg = base_cfg;
        config_io::set_field(cfg, axis, values[i]);
        cfg.validate();
        const std::uint64_t point_seed = seed + i;
        const auto run = source::run_trials(cfg, trials, point_seed);
        for (const auto& w : run.warnings) std::cerr << "warning: " << w << "\n";
        const auto a = analyze_records(run.records, cfg, analysis::AccidentalMethod::inter_trial);
        const auto& s = a.summary;

        model::ModelParams mp;
        mp.p_s = cfg.p_s;
        mp.eta_r = cfg.resolved_eta_r_per_bin();
        mp.beta = cfg.resolved_beta();
        mp.p_n = cfg.p_n_per_bin;
        mp.bin_width_ns = cfg.bin_ns;
        const double model_g = model::g_model(mp);

        std::snprintf(
            line, sizeof(line),
            "%.10g\t%.10g\t%.10g\t%.10g\t%.10g\t%.10g\t%.10g\t%.10g\t%.10g\t%.10g\n", values[i],
            format_or_nan(s.central_g ? std::optional(s.central_g->value) : std::nullopt),
            format_or_nan(s.central_g ? std::optional(s.central_g->error) : std::nullopt),
            format_or_nan(s.cs ? std::optional(s.cs->r) : std::nullopt),
            format_or_nan(s.cs ? std::optional(s.cs->err_plus) : std::nullopt),
            format_or_nan(s.cs ? std::optional(s.cs->err_minus) : std::nullopt),
            format_or_nan(s.eta_r_bin ? std::optional(s.eta_r_bin->value) : std::nullopt),
            format_or_nan(s.eta_r_2tauc ? std::optional(s.eta_r_2tauc->value) : std::nullopt),
            model_g, mp.beta);
        f << line;
    }
    f.close();
    std::map<std::string, std::string> inputs;
    if (!config_path.empty()) inputs[config_path] = sha256_file_hex(config_path);
    write_manifest(out_path + ".manifest.json", command, base_cfg, seed, inputs,
                   {{out_path, sha256_file_hex(out_path)}});
    std::cout << "sweep_points = " << values.size() << "\n"
              << "table_file = " << out_path << "\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    apply_thread_env();

    CLI::App app{"AFC-DLCZ photon-pair source simulator and correlation analysis toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path, out_path, records_path, prefix, format = "binary";
    std::string truth_path, grid_spec, axis, values_spec, method = "inter_trial";
    std::uint64_t trials = 0, seed = 0;
    double bin_ns = -1.0;

    auto* sim = app.add_subcommand("simulate", "Generate a detection record stream");
    sim->add_option("--config", config_path, "protocol config file (key = value)");
    sim->add_option("--trials", trials, "number of trials")->required();
    sim->add_option("--seed", seed, "RNG seed")->default_val(0);
    sim->add_option("--out", out_path, "output record file")->required();
    sim->add_option("--format", format, "binary|text")
        ->check(CLI::IsMember({"binary", "text"}));
    sim->add_option("--truth", truth_path, "also write a source-truth sidecar");

    auto* ana = app.add_subcommand("analyze", "Analyze a detection record stream");
    ana->add_option("--config", config_path, "protocol config file");
    ana->add_option("--records", records_path, "record file (binary or text)")->required();
    ana->add_option("--out", prefix, "output prefix")->required();
    ana->add_option("--method", method, "accidental estimator")
        ->check(CLI::IsMember({"inter_trial", "analytic_triangle"}));
    ana->add_option("--bin-ns", bin_ns, "override analysis bin width (ns)");

    auto* mod = app.add_subcommand("model", "Evaluate the analytic cross-correlation curve");
    mod->add_option("--config", config_path, "protocol config file");
    mod->add_option("--ps-grid", grid_spec, "p_s grid: v1,v2,... or start:stop:count[:log]")
        ->required();
    mod->add_option("--out", out_path, "output curve file")->required();

    auto* swp = app.add_subcommand("sweep", "Simulate+analyze over a parameter axis");
    swp->add_option("--config", config_path, "protocol config file");
    swp->add_option("--axis", axis, "config field to sweep")->required();
    swp->add_option("--values", values_spec, "axis values: v1,v2,... or start:stop:count[:log]")
        ->required();
    swp->add_option("--trials", trials, "trials per point")->required();
    swp->add_option("--seed", seed, "base RNG seed")->default_val(0);
    swp->add_option("--out", out_path, "output table file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    std::string command;
    for (int i = 0; i < argc; ++i) {
        if (i) command += ' ';
        command += argv[i];
    }

    try {
        if (sim->parsed())
            return cmd_simulate(config_path, trials, seed, out_path, format, truth_path, command);
        if (ana->parsed())
            return cmd_analyze(config_path, records_path, prefix, method, bin_ns, command);
        if (mod->parsed()) return cmd_model(config_path, grid_spec, out_path, command);
        if (swp->parsed())
            return cmd_sweep(config_path, axis, values_spec, trials, seed, out_path, command);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kConfig;
    } catch (const DomainError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    } catch (const AnalysisError& e) {
        std::cerr << "analysis error: " << e.what() << "\n";
        return kAnalysis;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kAnalysis;
    }
    return kUsage;
}
