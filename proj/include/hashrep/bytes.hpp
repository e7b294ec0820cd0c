#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hashrep {

using Bytes = std::vector<uint8_t>;
using u128 = unsigned __int128;

// 32-byte SHA-256 output. Also used for transaction ids and hash-lock images.
struct Digest256 {
    std::array<uint8_t, 32> bytes{};

    auto operator<=>(const Digest256&) const = default;

    const uint8_t* data() const { return bytes.data(); }
    uint8_t* data() { return bytes.data(); }
    static constexpr size_t size() { return 32; }
};

using PublicKey = std::array<uint8_t, 32>;
using SecretKey = std::array<uint8_t, 64>;
using Signature = std::array<uint8_t, 64>;
using Preimage = std::array<uint8_t, 32>;
using Seed32 = std::array<uint8_t, 32>;
using Prefix16 = std::array<uint8_t, 16>;

inline std::string to_hex(std::span<const uint8_t> data) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (uint8_t b : data) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

inline std::string to_hex(const Digest256& d) { return to_hex(std::span(d.bytes)); }

inline std::optional<Bytes> from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) return std::nullopt;
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    Bytes out;
    out.reserve(hex.size() / 2);
    for (size_t i = 0; i < hex.size(); i += 2) {
        int hi = nibble(hex[i]);
        int lo = nibble(hex[i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        out.push_back(static_cast<uint8_t>(hi << 4 | lo));
    }
    return out;
}

template <size_t N>
inline std::optional<std::array<uint8_t, N>> array_from_hex(std::string_view hex) {
    auto bytes = from_hex(hex);
    if (!bytes || bytes->size() != N) return std::nullopt;
    std::array<uint8_t, N> out{};
    std::memcpy(out.data(), bytes->data(), N);
    return out;
}

inline std::optional<Digest256> digest_from_hex(std::string_view hex) {
    auto arr = array_from_hex<32>(hex);
    if (!arr) return std::nullopt;
    Digest256 d;
    d.bytes = *arr;
    return d;
}

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

inline std::string u128_to_string(u128 v) {
    if (v == 0) return "0";
    std::string out;
    while (v > 0) {
        out.insert(out.begin(), static_cast<char>('0' + static_cast<int>(v % 10)));
        v /= 10;
    }
    return out;
}

}  // namespace hashrep
