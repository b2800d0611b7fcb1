#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "afcdlcz/protocol.hpp"

namespace afcdlcz::config_io {

/// Parse the flat "key = value" configuration format. '#' starts a comment,
/// blank lines are ignored, list-valued keys take space- or comma-separated
/// numbers. Unknown keys raise ConfigError. Keys not present keep defaults.
protocol::ProtocolConfig parse(std::istream& in);
protocol::ProtocolConfig parse_file(const std::string& path);
protocol::ProtocolConfig parse_string(const std::string& text);

/// Serialize every field (resolved defaults included) back to key = value
/// lines, in a fixed order so diffs and digests are stable.
std::string serialize(const protocol::ProtocolConfig& config);

/// Flat key -> value view of a config, for manifests.
std::map<std::string, std::string> to_map(const protocol::ProtocolConfig& config);

/// Overwrite one field by key name (used by sweeps). Throws ConfigError
/// listing the sweepable keys if the name is unknown or not sweepable.
void set_field(protocol::ProtocolConfig& config, const std::string& key, double value);

/// Names accepted by set_field.
const std::vector<std::string>& sweepable_fields();

} // namespace afcdlcz::config_io
