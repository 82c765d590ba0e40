#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

namespace invscope::testing {

/// Every complete `<len>\t<json>\n` record of a store log, read straight
/// from disk. Stops at the first incomplete or malformed record.
std::vector<nlohmann::json> read_raw_log(const std::filesystem::path& file);

/// Appends one `{"type", "data"}` record behind the store's back.
void append_raw_record(const std::filesystem::path& file, const std::string& type, const nlohmann::json& data);

}  // namespace invscope::testing
