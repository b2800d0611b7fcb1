#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "afcdlcz/source.hpp"

namespace afcdlcz::record_io {

inline constexpr char kMagic[9] = "AFCDLCZ1";
inline constexpr std::size_t kRecordBytes = 8 + 1 + 8; // trial_id, channel, timestamp

enum class Format { binary, text };

/// Binary stream layout (little-endian): 8-byte magic "AFCDLCZ1", then
/// chunks of { u32 record count, count * { u64 trial_id, u8 channel,
/// f64 timestamp_us } } until EOF.
void write_binary(std::ostream& out, const std::vector<source::DetectionRecord>& records);
std::vector<source::DetectionRecord> read_binary(std::istream& in);

/// Text form: '#'-comment lines, then one record per line as
/// "trial_id<TAB>channel_name<TAB>timestamp_us" with round-trip-exact
/// timestamps.
void write_text(std::ostream& out, const std::vector<source::DetectionRecord>& records);
std::vector<source::DetectionRecord> read_text(std::istream& in);

void write_file(const std::string& path, const std::vector<source::DetectionRecord>& records,
                Format format);

/// Reads either format, sniffing the magic. Malformed binary input raises
/// DataError with the byte offset.
std::vector<source::DetectionRecord> read_file(const std::string& path);

/// SourceTruth sidecar, text only, never mixed into the record stream.
void write_truth_file(const std::string& path, const source::SourceTruth& truth);
source::SourceTruth read_truth_file(const std::string& path);

} // namespace afcdlcz::record_io
