#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "afcdlcz/record_io.hpp"
#include "afcdlcz/rng.hpp"

using namespace afcdlcz;
using namespace afcdlcz::record_io;
using source::Channel;
using source::DetectionRecord;

namespace {

std::vector<DetectionRecord> random_records(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<DetectionRecord> recs;
    std::uint64_t trial = 0;
    for (std::size_t i = 0; i < n; ++i) {
        trial += rng.next_u64() % 3; // non-decreasing, with gaps and repeats
        const bool anti = rng.uniform() < 0.5;
        const double t = anti ? rng.uniform(1009.0, 1019.0) : rng.uniform(1.0, 11.0);
        recs.push_back({trial, anti ? Channel::anti_stokes : Channel::stokes, t});
    }
    return recs;
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/afcdlcz_test_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("record_io: binary round trip is exact") {
    for (const std::size_t n : {std::size_t{0}, std::size_t{1}, std::size_t{5000}}) {
        const auto recs = random_records(n, 100 + n);
        std::stringstream ss;
        write_binary(ss, recs);
        CHECK(read_binary(ss) == recs);
    }
}

TEST_CASE("record_io: binary layout is 8-byte magic plus 17-byte records") {
    const auto recs = random_records(10, 7);
    std::stringstream ss;
    write_binary(ss, recs);
    const auto bytes = ss.str();
    CHECK(bytes.size() == 8 + 4 + 10 * kRecordBytes);
    CHECK(bytes.compare(0, 8, kMagic, 8) == 0);
}

TEST_CASE("record_io: text round trip is exact, including awkward doubles") {
    auto recs = random_records(200, 3);
    recs.push_back({99, Channel::stokes, 1.0000000000000002});
    std::stringstream ss;
    write_text(ss, recs);
    CHECK(read_text(ss) == recs);
}

TEST_CASE("record_io: read_file sniffs the format") {
    const auto recs = random_records(300, 8);
    TempFile bin("sniff.bin"), txt("sniff.txt");
    write_file(bin.path, recs, Format::binary);
    write_file(txt.path, recs, Format::text);
    CHECK(read_file(bin.path) == recs);
    CHECK(read_file(txt.path) == recs);
    CHECK_THROWS_AS(static_cast<void>(read_file("/nonexistent/records.bin")), DataError);
}

TEST_CASE("record_io: malformed binary input reports a byte offset") {
    const auto recs = random_records(10, 9);
    std::stringstream ok;
    write_binary(ok, recs);
    const auto bytes = ok.str();

    SUBCASE("bad magic") {
        std::stringstream ss("AFCDLCZ9" + bytes.substr(8));
        CHECK_THROWS_WITH_AS(static_cast<void>(read_binary(ss)),
                             doctest::Contains("offset 0"), DataError);
    }
    SUBCASE("truncated mid-record") {
        std::stringstream ss(bytes.substr(0, bytes.size() - 5));
        CHECK_THROWS_WITH_AS(static_cast<void>(read_binary(ss)),
                             doctest::Contains("byte offset"), DataError);
    }
    SUBCASE("truncated chunk header") {
        std::stringstream ss(bytes.substr(0, 10));
        CHECK_THROWS_WITH_AS(static_cast<void>(read_binary(ss)),
                             doctest::Contains("chunk header"), DataError);
    }
    SUBCASE("invalid channel byte") {
        auto bad = bytes;
        bad[8 + 4 + 8] = 7; // first record's channel
        std::stringstream ss(bad);
        CHECK_THROWS_WITH_AS(static_cast<void>(read_binary(ss)),
                             doctest::Contains("channel"), DataError);
    }
}

TEST_CASE("record_io: malformed text input names the line") {
    std::stringstream ss("# header\n1\tstokes\t5.0\n2\tnot_a_channel\t6.0\n");
    CHECK_THROWS_AS(static_cast<void>(read_text(ss)), DataError);
    std::stringstream ss2("1\tstokes\n");
    CHECK_THROWS_WITH_AS(static_cast<void>(read_text(ss2)), doctest::Contains("line 1"),
                         DataError);
}

TEST_CASE("record_io: truth sidecar round trip") {
    source::SourceTruth truth;
    truth.pairs.push_back({3, 5.25, 1014.75, true});
    truth.pairs.push_back({4, 2.0, 0.0, false});
    truth.noise.push_back({5, Channel::anti_stokes, 1010.125,
                           source::NoiseOrigin::write_induced_fluorescence});
    truth.noise.push_back({6, Channel::anti_stokes, 1018.5, source::NoiseOrigin::readout_noise});

    TempFile f("truth.txt");
    write_truth_file(f.path, truth);
    const auto back = read_truth_file(f.path);
    REQUIRE(back.pairs.size() == 2);
    REQUIRE(back.noise.size() == 2);
    CHECK(back.pairs[0].trial_id == 3);
    CHECK(back.pairs[0].t_stokes_us == 5.25);
    CHECK(back.pairs[0].t_anti_stokes_us == 1014.75);
    CHECK(back.pairs[0].survived_readout);
    CHECK_FALSE(back.pairs[1].survived_readout);
    CHECK(back.noise[0].origin == source::NoiseOrigin::write_induced_fluorescence);
    CHECK(back.noise[1].origin == source::NoiseOrigin::readout_noise);
}
