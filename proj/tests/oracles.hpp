// Test-only reference implementations, written independently of the library
// paths they check. The hash oracle goes through libsodium; everything else
// is deliberately naive.
#pragma once

#include <sodium.h>

#include <cstdint>
#include <vector>

#include "hashrep/bytes.hpp"
#include "hashrep/merkle.hpp"

namespace oracle {

using hashrep::Bytes;
using hashrep::Digest256;

// Second, independently written hash invocation (libsodium).
inline Digest256 reference_sha256(std::span<const uint8_t> data) {
    Digest256 out;
    crypto_hash_sha256(out.data(), data.data(), data.size());
    return out;
}

inline Digest256 reference_sha256(const Bytes& data) {
    return reference_sha256(std::span<const uint8_t>(data));
}

// Per-bit scan, no countl_zero.
inline uint32_t bit_scan_leading_zeros(const Digest256& d) {
    uint32_t count = 0;
    for (int byte = 0; byte < 32; ++byte) {
        for (int bit = 7; bit >= 0; --bit) {
            if ((d.bytes[byte] >> bit) & 1) return count;
            ++count;
        }
    }
    return count;
}

// 256 minus the bit length of the digest read as a big-endian integer.
inline uint32_t bitlength_leading_zeros(const Digest256& d) {
    int first_nonzero = -1;
    for (int i = 0; i < 32; ++i) {
        if (d.bytes[i] != 0) {
            first_nonzero = i;
            break;
        }
    }
    if (first_nonzero < 0) return 256;
    uint32_t bitlen = 0;
    uint8_t b = d.bytes[first_nonzero];
    while (b != 0) {
        ++bitlen;
        b >>= 1;
    }
    bitlen += 8u * (31 - static_cast<uint32_t>(first_nonzero));
    return 256 - bitlen;
}

// Reference preimage layout for reputation hashing, assembled by hand.
inline Bytes reference_reputation_preimage(std::span<const uint8_t> key, std::span<const uint8_t> market,
                                           uint64_t nonce) {
    Bytes out(key.begin(), key.end());
    uint32_t len = static_cast<uint32_t>(market.size());
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<uint8_t>(len >> (8 * i)));
    out.insert(out.end(), market.begin(), market.end());
    for (int i = 7; i >= 0; --i) out.push_back(static_cast<uint8_t>(nonce >> (8 * i)));
    return out;
}

inline uint32_t reference_reputation(std::span<const uint8_t> key, std::span<const uint8_t> market,
                                     uint64_t nonce) {
    return bit_scan_leading_zeros(reference_sha256(reference_reputation_preimage(key, market, nonce)));
}

// Recursive tree build, duplicating the last leaf on odd levels.
inline Digest256 brute_merkle_root(std::vector<Digest256> leaves) {
    if (leaves.empty()) return reference_sha256(Bytes{});
    if (leaves.size() == 1) return leaves[0];
    if (leaves.size() % 2 != 0) leaves.push_back(leaves.back());
    std::vector<Digest256> parents;
    for (size_t i = 0; i < leaves.size(); i += 2) {
        Bytes cat(leaves[i].bytes.begin(), leaves[i].bytes.end());
        cat.insert(cat.end(), leaves[i + 1].bytes.begin(), leaves[i + 1].bytes.end());
        parents.push_back(reference_sha256(cat));
    }
    return brute_merkle_root(std::move(parents));
}

}  // namespace oracle
