#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "invscope/domain.hpp"

namespace invscope::store {
class Store;
}

namespace invscope::ingest {

enum class SourceFormat { IdsKv, AccessJson, CanonicalJsonl };

/// Accepts the CLI spellings `ids-kv`, `access-json` and `canonical`.
std::optional<SourceFormat> parse_format(std::string_view text);
std::string_view to_string(SourceFormat f);

struct Rejection {
    std::string reason;
    bool operator==(const Rejection&) const = default;
};

using ParseResult = std::variant<Event, Rejection>;

struct Reject {
    std::size_t line_number = 0;
    std::string reason;
};

struct ParseReport {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t duplicates_skipped = 0;
    std::vector<Reject> rejects;
    /// Set when the store failed mid-batch; counts cover durable writes only.
    std::optional<std::string> storage_error;
};

using KvTokens = std::vector<std::pair<std::string, std::string>>;

/// Splits `key=value key="quoted value"` records. Returns nullopt on any
/// token that does not follow the grammar.
std::optional<KvTokens> tokenize_kv(std::string_view line);

/// IdsKv: required keys ts, sensor, sig, asset, ref; other keys become
/// string attributes.
ParseResult parse_ids_line(std::string_view line);

/// AccessJson: one object with time, reader, action, badge_id, zone, seq.
ParseResult parse_access_record(std::string_view record);

/// Canonical Event JSONL pass-through.
ParseResult parse_canonical_line(std::string_view line);

ParseResult parse_line(SourceFormat format, std::string_view line);

bool is_blank(std::string_view line);

/// Parses every line, persists the parseable ones and accounts for each
/// non-blank line in the report. Never aborts on a bad line.
ParseReport ingest_batch(std::istream& lines, SourceFormat format, store::Store& store);

}  // namespace invscope::ingest
