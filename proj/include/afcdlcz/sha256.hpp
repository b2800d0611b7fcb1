#pragma once

#include <cstdint>
#include <string>

namespace afcdlcz {

/// SHA-256 of a byte string / of a file's contents, as lowercase hex.
/// Used for the run manifests.
std::string sha256_hex(const std::string& data);
std::string sha256_file_hex(const std::string& path);

} // namespace afcdlcz
