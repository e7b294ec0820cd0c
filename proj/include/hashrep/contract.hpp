#pragma once

#include <optional>
#include <sstream>
#include <vector>

#include "hashrep/identity.hpp"

namespace hashrep {

inline Digest256 hash_lock_image(const Preimage& preimage) { return sha256(std::span(preimage)); }

inline bool hash_lock_matches(const Digest256& image, const Preimage& preimage) {
    return hash_lock_image(preimage) == image;
}

// Watchtower contract: the monitoring obligation (txid prefixes plus the
// encrypted justice transactions, index-aligned), the block range to watch,
// the two hash locks, and the server signature over everything before it.
// Document tag 0x02.
struct Contract {
    MarketId market_id;
    ServerIdentity server_id;
    std::vector<Prefix16> txid_prefixes;
    std::vector<Bytes> encrypted_jtxs;
    uint64_t monitor_start = 0;
    uint64_t monitor_end = 0;
    uint64_t dispute_period = 144;
    Digest256 server_hash_image;
    Digest256 client_hash_image;
    uint64_t value = 0;
    uint64_t fee = 0;
    Signature signature{};

    // Everything the signature covers.
    Bytes body_bytes() const {
        Writer w;
        w.put_bytes(market_id.id);
        server_id.serialize(w);
        w.put_u32(static_cast<uint32_t>(txid_prefixes.size()));
        for (const auto& p : txid_prefixes) w.put_array(p);
        w.put_u32(static_cast<uint32_t>(encrypted_jtxs.size()));
        for (const auto& e : encrypted_jtxs) w.put_bytes(e);
        w.put_u64(monitor_start);
        w.put_u64(monitor_end);
        w.put_u64(dispute_period);
        w.put_digest(server_hash_image);
        w.put_digest(client_hash_image);
        w.put_u64(value);
        w.put_u64(fee);
        return w.take();
    }

    void serialize_into(Writer& w) const {
        w.put_raw(body_bytes());
        w.put_array(signature);
    }

    Bytes serialize() const {
        Writer w;
        w.put_u8(doc_tag::contract);
        serialize_into(w);
        return w.take();
    }

    static std::optional<Contract> parse_fields(Reader& r) {
        Contract c;
        auto market = MarketId::make(r.get_bytes());
        auto identity = ServerIdentity::parse(r);
        if (!market || !identity) return std::nullopt;
        c.market_id = std::move(*market);
        c.server_id = std::move(*identity);
        uint32_t n_prefixes = r.get_u32();
        if (!r.ok() || n_prefixes > r.remaining() / 16) return std::nullopt;
        c.txid_prefixes.reserve(n_prefixes);
        for (uint32_t i = 0; i < n_prefixes; ++i) c.txid_prefixes.push_back(r.get_array<16>());
        uint32_t n_jtxs = r.get_u32();
        if (!r.ok() || n_jtxs > r.remaining()) return std::nullopt;
        c.encrypted_jtxs.reserve(n_jtxs);
        for (uint32_t i = 0; i < n_jtxs; ++i) c.encrypted_jtxs.push_back(r.get_bytes());
        c.monitor_start = r.get_u64();
        c.monitor_end = r.get_u64();
        c.dispute_period = r.get_u64();
        c.server_hash_image = r.get_digest();
        c.client_hash_image = r.get_digest();
        c.value = r.get_u64();
        c.fee = r.get_u64();
        c.signature = r.get_array<64>();
        if (!r.ok()) return std::nullopt;
        return c;
    }

    static std::optional<Contract> parse(std::span<const uint8_t> bytes) {
        Reader r(bytes);
        if (r.get_u8() != doc_tag::contract) return std::nullopt;
        auto c = parse_fields(r);
        if (!c || !r.done()) return std::nullopt;
        return c;
    }

    // Structural checks, independent of any chain state.
    bool well_formed() const {
        return market_id.valid() && market_id == server_id.market_id &&
               txid_prefixes.size() == encrypted_jtxs.size() && monitor_start <= monitor_end;
    }

    bool operator==(const Contract&) const = default;
};

inline std::optional<Contract> sign_contract(Contract contract, const SecretKey& key) {
    if (public_key_of(key) != contract.server_id.public_key) return std::nullopt;
    contract.signature = sign_message(contract.body_bytes(), key);
    return contract;
}

inline bool verify_contract_signature(const Contract& c) {
    return verify_signature(c.body_bytes(), c.signature, c.server_id.public_key);
}

enum class ContractStatus : uint8_t { Unsigned, Signed, Active, Terminated };

inline const char* to_string(ContractStatus s) {
    switch (s) {
        case ContractStatus::Unsigned: return "unsigned";
        case ContractStatus::Signed: return "signed";
        case ContractStatus::Active: return "active";
        case ContractStatus::Terminated: return "terminated";
    }
    return "?";
}

// Lifecycle of one contract instance. The server preimage switches it on,
// the client preimage switches it off; both are one-shot switches.
struct ContractState {
    ContractStatus status = ContractStatus::Unsigned;
    std::optional<Preimage> server_preimage;
    std::optional<Preimage> client_preimage;
};

enum class ContractError : uint8_t { PreimageMismatch, WrongState };

inline std::optional<ContractError> activate(const Contract& c, ContractState& state,
                                             const Preimage& server_preimage) {
    if (state.status != ContractStatus::Signed) return ContractError::WrongState;
    if (!hash_lock_matches(c.server_hash_image, server_preimage)) return ContractError::PreimageMismatch;
    state.status = ContractStatus::Active;
    state.server_preimage = server_preimage;
    return std::nullopt;
}

// Idempotent: terminating an already-terminated contract with the right
// preimage succeeds, which keeps settlement retries harmless.
inline std::optional<ContractError> terminate(const Contract& c, ContractState& state,
                                              const Preimage& client_preimage) {
    if (state.status == ContractStatus::Unsigned) return ContractError::WrongState;
    if (!hash_lock_matches(c.client_hash_image, client_preimage)) return ContractError::PreimageMismatch;
    state.status = ContractStatus::Terminated;
    state.client_preimage = client_preimage;
    return std::nullopt;
}

// Debug rendering; not part of the signed bytes.
inline std::string debug_string(const Contract& c) {
    std::ostringstream os;
    os << "market: " << to_hex(c.market_id.id) << "\n";
    os << "server_key: " << to_hex(std::span(c.server_id.public_key)) << "\n";
    os << "nonce: " << c.server_id.nonce << "\n";
    os << "reputation: " << c.server_id.reputation() << "\n";
    os << "entries: " << c.txid_prefixes.size() << "\n";
    for (size_t i = 0; i < c.txid_prefixes.size(); ++i) {
        os << "  prefix[" << i << "]: " << to_hex(std::span(c.txid_prefixes[i])) << "\n";
    }
    os << "monitor: [" << c.monitor_start << ", " << c.monitor_end << "]\n";
    os << "dispute_period: " << c.dispute_period << "\n";
    os << "server_hash_image: " << to_hex(c.server_hash_image) << "\n";
    os << "client_hash_image: " << to_hex(c.client_hash_image) << "\n";
    os << "value: " << c.value << "\n";
    os << "fee: " << c.fee << "\n";
    os << "signature: " << to_hex(std::span(c.signature)) << "\n";
    return os.str();
}

}  // namespace hashrep
