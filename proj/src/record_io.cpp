#include "afcdlcz/record_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace afcdlcz::record_io {

using source::Channel;
using source::DetectionRecord;

namespace {

static_assert(std::endian::native == std::endian::little,
              "record serialization assumes a little-endian host");

constexpr std::uint32_t kChunkRecords = 1u << 20;

template <typename T>
void put(std::string& buf, T value) {
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    buf.append(bytes, sizeof(T));
}

template <typename T>
T get(const char* data) {
    T value;
    std::memcpy(&value, data, sizeof(T));
    return value;
}

} // namespace

void write_binary(std::ostream& out, const std::vector<DetectionRecord>& records) {
    out.write(kMagic, 8);
    std::string buf;
    std::size_t i = 0;
    while (i < records.size() || records.empty()) {
        const auto count = static_cast<std::uint32_t>(
            std::min<std::size_t>(kChunkRecords, records.size() - i));
        buf.clear();
        put(buf, count);
        for (std::uint32_t k = 0; k < count; ++k, ++i) {
            put(buf, records[i].trial_id);
            put(buf, static_cast<std::uint8_t>(records[i].channel));
            put(buf, records[i].timestamp_us);
        }
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (records.empty()) break;
    }
    if (!out) throw DataError("write_binary: stream write failed");
}

std::vector<DetectionRecord> read_binary(std::istream& in) {
    char magic[8];
    in.read(magic, 8);
    if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0)
        throw DataError("read_binary: bad magic at byte offset 0");

    std::vector<DetectionRecord> records;
    std::uint64_t offset = 8;
    std::string buf;
    for (;;) {
        char count_bytes[4];
        in.read(count_bytes, 4);
        if (in.gcount() == 0) break; // clean EOF at a chunk boundary
        if (in.gcount() != 4)
            throw DataError("read_binary: truncated chunk header at byte offset " +
                            std::to_string(offset));
        const auto count = get<std::uint32_t>(count_bytes);
        offset += 4;
        buf.resize(static_cast<std::size_t>(count) * kRecordBytes);
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (static_cast<std::size_t>(in.gcount()) != buf.size())
            throw DataError("read_binary: truncated chunk payload at byte offset " +
                            std::to_string(offset + static_cast<std::uint64_t>(in.gcount())));
        for (std::uint32_t k = 0; k < count; ++k) {
            const char* p = buf.data() + static_cast<std::size_t>(k) * kRecordBytes;
            DetectionRecord rec;
            rec.trial_id = get<std::uint64_t>(p);
            const auto ch = get<std::uint8_t>(p + 8);
            if (ch > 1)
                throw DataError("read_binary: invalid channel byte at byte offset " +
                                std::to_string(offset + k * kRecordBytes + 8));
            rec.channel = static_cast<Channel>(ch);
            rec.timestamp_us = get<double>(p + 9);
            records.push_back(rec);
        }
        offset += static_cast<std::uint64_t>(count) * kRecordBytes;
    }
    return records;
}

void write_text(std::ostream& out, const std::vector<DetectionRecord>& records) {
    out << "# afcdlcz detection records\n# trial_id\tchannel\ttimestamp_us\n";
    char line[64];
    for (const auto& rec : records) {
        std::snprintf(line, sizeof(line), "%llu\t%s\t%.17g\n",
                      static_cast<unsigned long long>(rec.trial_id),
                      source::channel_name(rec.channel).c_str(), rec.timestamp_us);
        out << line;
    }
    if (!out) throw DataError("write_text: stream write failed");
}

std::vector<DetectionRecord> read_text(std::istream& in) {
    std::vector<DetectionRecord> records;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        unsigned long long trial = 0;
        std::string channel;
        double t = 0.0;
        if (!(ss >> trial >> channel >> t))
            throw DataError("read_text: malformed record at line " + std::to_string(lineno));
        records.push_back({trial, source::channel_from_name(channel), t});
    }
    return records;
}

void write_file(const std::string& path, const std::vector<DetectionRecord>& records,
                Format format) {
    std::ofstream out(path, format == Format::binary ? std::ios::binary : std::ios::out);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    if (format == Format::binary)
        write_binary(out, records);
    else
        write_text(out, records);
}

std::vector<DetectionRecord> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    char magic[8] = {};
    in.read(magic, 8);
    in.clear();
    in.seekg(0);
    if (std::memcmp(magic, kMagic, 8) == 0) return read_binary(in);
    return read_text(in);
}

void write_truth_file(const std::string& path, const source::SourceTruth& truth) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << "# afcdlcz source truth sidecar\n";
    char line[128];
    for (const auto& p : truth.pairs) {
        std::snprintf(line, sizeof(line), "pair\t%llu\t%.17g\t%.17g\t%d\n",
                      static_cast<unsigned long long>(p.trial_id), p.t_stokes_us,
                      p.t_anti_stokes_us, p.survived_readout ? 1 : 0);
        out << line;
    }
    for (const auto& n : truth.noise) {
        std::snprintf(line, sizeof(line), "noise\t%llu\t%s\t%.17g\t%s\n",
                      static_cast<unsigned long long>(n.trial_id),
                      source::channel_name(n.channel).c_str(), n.timestamp_us,
                      n.origin == source::NoiseOrigin::readout_noise ? "readout_noise"
                                                                     : "write_induced_fluorescence");
        out << line;
    }
    if (!out) throw DataError("write_truth_file: stream write failed");
}

source::SourceTruth read_truth_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    source::SourceTruth truth;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string kind;
        ss >> kind;
        if (kind == "pair") {
            source::PairTruth p;
            unsigned long long trial = 0;
            int survived = 0;
            if (!(ss >> trial >> p.t_stokes_us >> p.t_anti_stokes_us >> survived))
                throw DataError("read_truth_file: malformed pair at line " + std::to_string(lineno));
            p.trial_id = trial;
            p.survived_readout = survived != 0;
            truth.pairs.push_back(p);
        } else if (kind == "noise") {
            source::NoiseTruth n;
            unsigned long long trial = 0;
            std::string channel, origin;
            if (!(ss >> trial >> channel >> n.timestamp_us >> origin))
                throw DataError("read_truth_file: malformed noise at line " + std::to_string(lineno));
            n.trial_id = trial;
            n.channel = source::channel_from_name(channel);
            n.origin = origin == "readout_noise" ? source::NoiseOrigin::readout_noise
                                                 : source::NoiseOrigin::write_induced_fluorescence;
            truth.noise.push_back(n);
        } else {
            throw DataError("read_truth_file: unknown row kind at line " + std::to_string(lineno));
        }
    }
    return truth;
}

} // namespace afcdlcz::record_io
