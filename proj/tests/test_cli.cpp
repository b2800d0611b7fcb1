// End-to-end tests of the afcdlcz command-line tool. The binary path is
// injected by the build as AFCDLCZ_CLI_PATH.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "afcdlcz/sha256.hpp"

namespace {

const std::string kCli = AFCDLCZ_CLI_PATH;

struct TempDir {
    std::string path;
    TempDir() {
        char tmpl[] = "/tmp/afcdlcz_cli_XXXXXX";
        path = mkdtemp(tmpl);
    }
    ~TempDir() {
        const std::string cmd = "rm -rf '" + path + "'";
        if (std::system(cmd.c_str()) != 0) {} // best effort
    }
    std::string file(const std::string& name) const { return path + "/" + name; }
};

int run(const std::string& args) {
    const std::string cmd = kCli + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string file_digest(const std::string& path) {
    return afcdlcz::sha256_hex(slurp(path));
}

/// Values parsed out of a summary file, for cross-run comparisons.
std::string summary_value(const std::string& summary, const std::string& key) {
    std::istringstream in(summary);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind(key + " = ", 0) == 0) return line.substr(key.size() + 3);
    }
    return "<missing " + key + ">";
}

} // namespace

TEST_CASE("cli: usage errors exit with code 1") {
    CHECK(run("") == 1);
    CHECK(run("frobnicate") == 1);
    CHECK(run("simulate --trials 10") == 1);        // missing --out
    CHECK(run("simulate --out /tmp/x.bin") == 1);   // missing --trials
    CHECK(run("--help") == 0);
}

TEST_CASE("cli: config errors exit with code 2") {
    TempDir dir;
    const auto cfg = dir.file("bad.cfg");
    std::ofstream(cfg) << "gate_us = 25\n";
    CHECK(run("simulate --config " + cfg + " --trials 10 --out " + dir.file("x.bin")) == 2);
    CHECK(run("simulate --config " + dir.file("missing.cfg") + " --trials 10 --out " +
              dir.file("x.bin")) == 2);
    // Unknown sweep axis is a config error too.
    CHECK(run("sweep --axis bogus --values 1,2 --trials 10 --out " + dir.file("s.tsv")) == 2);
}

TEST_CASE("cli: data errors exit with code 3, empty analysis with 4") {
    TempDir dir;
    const auto bad = dir.file("corrupt.bin");
    {
        std::ofstream f(bad, std::ios::binary);
        f << "AFCDLCZ1";
        f.write("\x05\x00\x00\x00", 4); // chunk of 5 records...
        f << "short";                   // ...but only 5 payload bytes
    }
    CHECK(run("analyze --records " + bad + " --out " + dir.file("a")) == 3);
    CHECK(run("analyze --records " + dir.file("missing.bin") + " --out " + dir.file("a")) == 3);

    const auto empty = dir.file("empty.txt");
    std::ofstream(empty) << "# afcdlcz detection records\n";
    CHECK(run("analyze --records " + empty + " --out " + dir.file("a")) == 4);
}

TEST_CASE("cli: simulate is deterministic and format-agnostic") {
    TempDir dir;
    const auto bin1 = dir.file("r1.bin");
    const auto bin2 = dir.file("r2.bin");
    const auto txt = dir.file("r3.txt");
    REQUIRE(run("simulate --trials 20000 --seed 42 --out " + bin1) == 0);
    REQUIRE(run("simulate --trials 20000 --seed 42 --out " + bin2) == 0);
    REQUIRE(run("simulate --trials 20000 --seed 42 --format text --out " + txt) == 0);
    CHECK(file_digest(bin1) == file_digest(bin2));

    // Binary and text streams carry identical data: analyses must agree.
    REQUIRE(run("analyze --records " + bin1 + " --out " + dir.file("ab")) == 0);
    REQUIRE(run("analyze --records " + txt + " --out " + dir.file("at")) == 0);
    CHECK(slurp(dir.file("ab.summary.txt")) == slurp(dir.file("at.summary.txt")));
    CHECK(file_digest(dir.file("ab.hist.tsv")) == file_digest(dir.file("at.hist.tsv")));

    // A different seed must change the stream.
    REQUIRE(run("simulate --trials 20000 --seed 43 --out " + dir.file("r4.bin")) == 0);
    CHECK(file_digest(bin1) != file_digest(dir.file("r4.bin")));
}

TEST_CASE("cli: manifests record the config and correct digests") {
    TempDir dir;
    const auto out = dir.file("run.bin");
    REQUIRE(run("simulate --trials 5000 --seed 7 --out " + out) == 0);
    const auto manifest = slurp(out + ".manifest.json");
    CHECK(manifest.find("\"seed\": 7") != std::string::npos);
    CHECK(manifest.find("\"p_s\": \"0.002\"") != std::string::npos);
    CHECK(manifest.find(file_digest(out)) != std::string::npos);
}

TEST_CASE("cli: analyze emits hist, corr and summary with consistent content") {
    TempDir dir;
    const auto out = dir.file("run.bin");
    std::ofstream(dir.file("run.cfg")) << "p_s = 0.05\n";
    REQUIRE(run("simulate --config " + dir.file("run.cfg") + " --trials 50000 --seed 3 --out " +
                out) == 0);
    REQUIRE(run("analyze --config " + dir.file("run.cfg") + " --records " + out + " --out " +
                dir.file("a")) == 0);

    const auto summary = slurp(dir.file("a.summary.txt"));
    CHECK(summary_value(summary, "n_trials") == "50000");
    CHECK(summary_value(summary, "expected_peak_tau_us") == "1020");
    CHECK(summary_value(summary, "mode_count") == "12");
    CHECK(summary_value(summary, "accidental_method") == "inter_trial");

    // The histogram file has one row per 100 ns bin over [1010, 1030].
    std::istringstream hist(slurp(dir.file("a.hist.tsv")));
    std::string line;
    int rows = 0;
    double tau_first = 0.0, tau_last = 0.0;
    while (std::getline(hist, line)) {
        if (line.empty() || line[0] == '#') continue;
        ++rows;
        const double tau = std::stod(line);
        if (rows == 1) tau_first = tau;
        tau_last = tau;
    }
    CHECK(rows == 201);
    CHECK(tau_first == doctest::Approx(1010.0));
    CHECK(tau_last == doctest::Approx(1030.0));

    // Correlation rows mirror the histogram binning.
    std::istringstream corr(slurp(dir.file("a.corr.tsv")));
    int corr_rows = 0;
    while (std::getline(corr, line))
        if (!line.empty() && line[0] != '#') ++corr_rows;
    CHECK(corr_rows == 201);

    // --bin-ns affects the analysis grid.
    REQUIRE(run("analyze --config " + dir.file("run.cfg") + " --records " + out +
                " --bin-ns 200 --out " + dir.file("b")) == 0);
    CHECK(summary_value(slurp(dir.file("b.summary.txt")), "bin_ns") == "200");

    // The analytic-triangle accidental method is accepted as well.
    REQUIRE(run("analyze --records " + out + " --method analytic_triangle --out " +
                dir.file("c")) == 0);
    CHECK(summary_value(slurp(dir.file("c.summary.txt")), "accidental_method") ==
          "analytic_triangle");
}

TEST_CASE("cli: model curve reproduces the closed form") {
    TempDir dir;
    const auto curve = dir.file("curve.tsv");
    std::ofstream(dir.file("m.cfg")) << "eta_r_per_bin = 0.0045\nbeta = 0.27\n";
    REQUIRE(run("model --config " + dir.file("m.cfg") + " --ps-grid 0.002 --out " + curve) == 0);
    const auto text = slurp(curve);
    // g(0.002) = 1 + 0.0045 / (0.2745 * 0.002 + 0.0012) = 3.5729...
    CHECK(text.find("0.002\t3.5728987") != std::string::npos);
    CHECK(text.find("# beta = 0.27") != std::string::npos);

    REQUIRE(run("model --ps-grid 1e-4:1e-1:13:log --out " + dir.file("c2.tsv")) == 0);
    std::istringstream rows(slurp(dir.file("c2.tsv")));
    std::string line;
    int n = 0;
    while (std::getline(rows, line))
        if (!line.empty() && line[0] != '#') ++n;
    CHECK(n == 13);

    CHECK(run("model --ps-grid 1:2:0 --out " + dir.file("c3.tsv")) == 2); // bad grid
}

TEST_CASE("cli: a one-point sweep equals simulate + analyze composition") {
    TempDir dir;
    REQUIRE(run("sweep --axis p_s --values 0.05 --trials 30000 --seed 11 --out " +
                dir.file("sweep.tsv")) == 0);

    std::ofstream(dir.file("p.cfg")) << "p_s = 0.05\n";
    REQUIRE(run("simulate --config " + dir.file("p.cfg") + " --trials 30000 --seed 11 --out " +
                dir.file("r.bin")) == 0);
    REQUIRE(run("analyze --config " + dir.file("p.cfg") + " --records " + dir.file("r.bin") +
                " --out " + dir.file("a")) == 0);

    const auto summary = slurp(dir.file("a.summary.txt"));
    const auto sweep = slurp(dir.file("sweep.tsv"));
    std::istringstream in(sweep);
    std::string line, data;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#') data = line;
    REQUIRE(!data.empty());
    std::istringstream cols(data);
    double axis_value = 0.0, g = 0.0, g_err = 0.0;
    cols >> axis_value >> g >> g_err;
    CHECK(axis_value == doctest::Approx(0.05));
    CHECK(g == doctest::Approx(std::stod(summary_value(summary, "central_g"))).epsilon(1e-9));
    CHECK(g_err ==
          doctest::Approx(std::stod(summary_value(summary, "central_g_err"))).epsilon(1e-9));
}

TEST_CASE("cli: sweep covers every axis value") {
    TempDir dir;
    REQUIRE(run("sweep --axis t_spin_us --values 500,1000,2000 --trials 5000 --seed 2 --out " +
                dir.file("s.tsv")) == 0);
    std::istringstream in(slurp(dir.file("s.tsv")));
    std::string line;
    std::vector<double> seen;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        seen.push_back(std::stod(line));
    }
    REQUIRE(seen.size() == 3);
    CHECK(seen[0] == doctest::Approx(500.0));
    CHECK(seen[1] == doctest::Approx(1000.0));
    CHECK(seen[2] == doctest::Approx(2000.0));
}

TEST_CASE("cli: truth sidecar is written on request") {
    TempDir dir;
    REQUIRE(run("simulate --trials 5000 --seed 9 --out " + dir.file("r.bin") + " --truth " +
                dir.file("r.truth")) == 0);
    const auto truth = slurp(dir.file("r.truth"));
    CHECK(truth.find("truth sidecar") != std::string::npos);
    const auto manifest = slurp(dir.file("r.bin.manifest.json"));
    CHECK(manifest.find("r.truth") != std::string::npos);
}
