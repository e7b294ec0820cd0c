#pragma once

#include <bit>
#include <limits>
#include <optional>
#include <stdexcept>

#include "hashrep/bytes.hpp"
#include "hashrep/serial.hpp"
#include "hashrep/sha256.hpp"

namespace hashrep {

// Number of leading zero bits of a digest; the unit of reputation.
using Reputation = uint32_t;

constexpr uint32_t kMaxReputation = 256;
// Mining and cost arithmetic are only supported up to this difficulty.
constexpr uint32_t kMaxMineTarget = 64;

inline Reputation leading_zero_bits(const Digest256& d) {
    Reputation bits = 0;
    for (uint8_t byte : d.bytes) {
        if (byte == 0) {
            bits += 8;
            continue;
        }
        bits += static_cast<Reputation>(std::countl_zero(byte));
        break;
    }
    return bits;
}

// Preimage bytes hashed to derive a reputation: key raw, market id
// length-prefixed, nonce as a big-endian u64.
inline Bytes reputation_preimage(std::span<const uint8_t> server_key, std::span<const uint8_t> market_id,
                                 uint64_t nonce) {
    Writer w;
    w.put_raw(server_key);
    w.put_bytes(market_id);
    w.put_u64(nonce);
    return w.take();
}

inline Digest256 reputation_digest(std::span<const uint8_t> server_key, std::span<const uint8_t> market_id,
                                   uint64_t nonce) {
    return sha256(reputation_preimage(server_key, market_id, nonce));
}

inline Reputation compute_reputation(std::span<const uint8_t> server_key, std::span<const uint8_t> market_id,
                                     uint64_t nonce) {
    return leading_zero_bits(reputation_digest(server_key, market_id, nonce));
}

inline Reputation compute_reputation(const PublicKey& server_key, std::span<const uint8_t> market_id,
                                     uint64_t nonce) {
    return compute_reputation(std::span<const uint8_t>(server_key), market_id, nonce);
}

// Sequential search for a nonce whose hash over `prefix || nonce` clears
// target_bits. Deterministic given start_nonce; callers may shard nonce
// ranges across workers and keep the first hit.
inline std::optional<uint64_t> mine_prefix(std::span<const uint8_t> prefix, uint32_t target_bits,
                                           uint64_t start_nonce, uint64_t max_attempts) {
    if (target_bits > kMaxMineTarget) throw std::invalid_argument("mine: target_bits > 64");
    Bytes buf(prefix.begin(), prefix.end());
    size_t nonce_at = buf.size();
    buf.resize(buf.size() + 8);
    uint64_t nonce = start_nonce;
    for (uint64_t attempt = 0; attempt < max_attempts; ++attempt, ++nonce) {
        for (int i = 0; i < 8; ++i) buf[nonce_at + i] = static_cast<uint8_t>(nonce >> (56 - 8 * i));
        if (leading_zero_bits(sha256(buf)) >= target_bits) return nonce;
    }
    return std::nullopt;
}

inline std::optional<uint64_t> mine(std::span<const uint8_t> server_key, std::span<const uint8_t> market_id,
                                    uint32_t target_bits, uint64_t start_nonce = 0,
                                    uint64_t max_attempts = std::numeric_limits<uint64_t>::max()) {
    Writer w;
    w.put_raw(server_key);
    w.put_bytes(market_id);
    return mine_prefix(w.bytes(), target_bits, start_nonce, max_attempts);
}

// Unit price of one expected hash, in dimensionless monetary units. The
// timestamp records when the price was quoted; energy prices drift, so
// costs computed under different timestamps are not comparable.
struct ReputationCostModel {
    uint64_t hash_price = 1;
    uint64_t timestamp = 0;
};

// cost(r) = hash_price * 2^r, the expected hash count priced per hash.
// Exact integer arithmetic; doubling from r to r+1 is exact by construction.
// Any r up to 64 always fits; beyond that overflow is signalled.
inline u128 reputation_cost(Reputation r, const ReputationCostModel& model) {
    if (r > kMaxReputation) throw std::domain_error("reputation_cost: r > 256");
    if (model.hash_price == 0) return 0;
    constexpr u128 max = ~u128{0};
    u128 price = model.hash_price;
    if (r >= 128 || price > (max >> r)) throw std::overflow_error("reputation_cost overflow");
    return price << r;
}

}  // namespace hashrep
