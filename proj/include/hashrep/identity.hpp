#pragma once

#include <sodium.h>

#include <optional>
#include <stdexcept>
#include <string>

#include "hashrep/bytes.hpp"
#include "hashrep/hashcash.hpp"
#include "hashrep/serial.hpp"

namespace hashrep {

inline void ensure_sodium() {
    static const int rc = sodium_init();
    if (rc < 0) throw std::runtime_error("sodium_init failed");
}

struct KeyPair {
    PublicKey public_key{};
    SecretKey secret_key{};
};

// Deterministic Ed25519 keypair from a 32-byte seed.
inline KeyPair keygen(const Seed32& seed) {
    ensure_sodium();
    KeyPair kp;
    crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed.data());
    return kp;
}

inline Signature sign_message(std::span<const uint8_t> message, const SecretKey& key) {
    ensure_sodium();
    Signature sig{};
    crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), key.data());
    return sig;
}

inline bool verify_signature(std::span<const uint8_t> message, const Signature& sig, const PublicKey& key) {
    ensure_sodium();
    return crypto_sign_verify_detached(sig.data(), message.data(), message.size(), key.data()) == 0;
}

inline PublicKey public_key_of(const SecretKey& key) {
    PublicKey pk{};
    std::memcpy(pk.data(), key.data() + 32, 32);
    return pk;
}

// Market identifier, an opaque byte string of 1 to 64 bytes.
struct MarketId {
    Bytes id;

    static constexpr size_t kMaxLen = 64;

    static std::optional<MarketId> make(Bytes bytes) {
        if (bytes.empty() || bytes.size() > kMaxLen) return std::nullopt;
        return MarketId{std::move(bytes)};
    }

    static MarketId from_string(std::string_view s) {
        auto m = make(to_bytes(s));
        if (!m) throw std::invalid_argument("market id must be 1..64 bytes");
        return *m;
    }

    bool valid() const { return !id.empty() && id.size() <= kMaxLen; }
    bool operator==(const MarketId&) const = default;
};

// A self-assigned server identity: the key is the ID, the nonce carries the
// proof-of-work that backs its reputation in this market.
struct ServerIdentity {
    PublicKey public_key{};
    MarketId market_id;
    uint64_t nonce = 0;

    Reputation reputation() const { return compute_reputation(public_key, market_id.id, nonce); }

    void serialize(Writer& w) const {
        w.put_array(public_key);
        w.put_bytes(market_id.id);
        w.put_u64(nonce);
    }

    static std::optional<ServerIdentity> parse(Reader& r) {
        ServerIdentity out;
        out.public_key = r.get_array<32>();
        auto market = MarketId::make(r.get_bytes());
        out.nonce = r.get_u64();
        if (!r.ok() || !market) return std::nullopt;
        out.market_id = std::move(*market);
        return out;
    }

    bool operator==(const ServerIdentity&) const = default;
};

// Signed advertisement a server publishes to storage nodes: identity plus a
// fee quote and a contact endpoint. Document tag 0x01.
struct ServerAd {
    ServerIdentity identity;
    uint64_t fee = 0;
    Bytes endpoint;
    Signature signature{};

    Bytes body_bytes() const {
        Writer w;
        identity.serialize(w);
        w.put_u64(fee);
        w.put_bytes(endpoint);
        return w.take();
    }

    Bytes serialize() const {
        Writer w;
        w.put_u8(doc_tag::server_ad);
        w.put_raw(body_bytes());
        w.put_array(signature);
        return w.take();
    }

    static std::optional<ServerAd> parse(std::span<const uint8_t> bytes) {
        Reader r(bytes);
        if (r.get_u8() != doc_tag::server_ad) return std::nullopt;
        ServerAd out;
        auto identity = ServerIdentity::parse(r);
        if (!identity) return std::nullopt;
        out.identity = std::move(*identity);
        out.fee = r.get_u64();
        out.endpoint = r.get_bytes();
        out.signature = r.get_array<64>();
        if (!r.done()) return std::nullopt;
        return out;
    }

    bool operator==(const ServerAd&) const = default;
};

inline ServerAd make_server_ad(const ServerIdentity& identity, uint64_t fee, Bytes endpoint,
                               const SecretKey& key) {
    ServerAd ad{identity, fee, std::move(endpoint), {}};
    ad.signature = sign_message(ad.body_bytes(), key);
    return ad;
}

inline bool verify_server_ad(const ServerAd& ad) {
    return verify_signature(ad.body_bytes(), ad.signature, ad.identity.public_key);
}

}  // namespace hashrep
