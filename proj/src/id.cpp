#include "invscope/id.hpp"

#include <algorithm>

namespace invscope {

namespace {

constexpr char kAlphabet[] = "0123456789ABCDEFGHJKMNPQRSTVWXYZ";

std::string encode(std::int64_t ms, std::uint16_t hi, std::uint64_t lo)
{
    std::string out(kIdLength, '0');
    auto t = static_cast<std::uint64_t>(std::max<std::int64_t>(ms, 0)) & ((1ULL << 48) - 1);
    for (int i = 9; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = kAlphabet[t & 31];
        t >>= 5;
    }
    // 80 entropy bits: 16 from hi, 64 from lo, emitted as 16 base32 digits.
    for (int i = 25; i >= 10; --i) {
        out[static_cast<std::size_t>(i)] = kAlphabet[lo & 31];
        lo = (lo >> 5) | (static_cast<std::uint64_t>(hi & 31) << 59);
        hi = static_cast<std::uint16_t>(hi >> 5);
    }
    return out;
}

}  // namespace

IdGenerator::IdGenerator() : rng_(std::random_device{}()) {}

IdGenerator::IdGenerator(std::uint64_t seed) : rng_(seed) {}

std::string IdGenerator::next(Timestamp time_hint)
{
    std::lock_guard lock(mu_);
    const std::int64_t ms = time_hint.millis();
    if (ms == last_ms_) {
        if (++lo_ == 0) ++hi_;
    } else {
        last_ms_ = ms;
        // Top bit left clear so same-millisecond increments cannot wrap.
        hi_ = static_cast<std::uint16_t>(rng_() & 0x7fff);
        lo_ = rng_();
    }
    return encode(ms, hi_, lo_);
}

std::string new_id(Timestamp time_hint)
{
    static IdGenerator generator;
    return generator.next(time_hint);
}

std::string derive_id(Timestamp time_hint, std::string_view content_key)
{
    const std::uint64_t lo = fnv1a64(content_key);
    const auto hi = static_cast<std::uint16_t>(fnv1a64(content_key, 0x84222325cbf29ce4ULL) & 0xffff);
    return encode(time_hint.millis(), hi, lo);
}

bool is_valid_id(std::string_view id)
{
    return id.size() == kIdLength && std::all_of(id.begin(), id.end(), [](char c) {
               return std::string_view(kAlphabet).find(c) != std::string_view::npos;
           });
}

std::uint32_t fnv1a32(std::string_view bytes)
{
    std::uint32_t h = 2166136261u;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 16777619u;
    }
    return h;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis)
{
    std::uint64_t h = basis;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace invscope
