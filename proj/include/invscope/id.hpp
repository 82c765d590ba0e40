#pragma once

#include <cstdint>
#include <mutex>
#include <random>
#include <string>
#include <string_view>

#include "invscope/timestamp.hpp"

namespace invscope {

inline constexpr std::size_t kIdLength = 26;

/// Produces 26-character Crockford base32 ids: 10 characters of
/// millisecond time followed by 16 characters of entropy. Within one
/// millisecond the entropy part is incremented, so ids are strictly
/// increasing for non-decreasing hints.
class IdGenerator {
public:
    IdGenerator();
    explicit IdGenerator(std::uint64_t seed);

    std::string next(Timestamp time_hint);

private:
    std::mutex mu_;
    std::mt19937_64 rng_;
    std::int64_t last_ms_ = -1;
    std::uint16_t hi_ = 0;
    std::uint64_t lo_ = 0;
};

/// Process-wide generator.
std::string new_id(Timestamp time_hint);

/// Deterministic id in the same format: the time prefix comes from
/// `time_hint`, the entropy part from a hash of `content_key`.
std::string derive_id(Timestamp time_hint, std::string_view content_key);

bool is_valid_id(std::string_view id);

std::uint32_t fnv1a32(std::string_view bytes);
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

}  // namespace invscope
