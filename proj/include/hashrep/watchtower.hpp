#pragma once

#include <sodium.h>

#include <optional>
#include <vector>

#include "hashrep/contract.hpp"
#include "hashrep/sim_chain.hpp"

namespace hashrep {

inline Prefix16 txid_prefix(const Digest256& txid) {
    Prefix16 p{};
    std::memcpy(p.data(), txid.data(), 16);
    return p;
}

inline std::array<uint8_t, 16> txid_key_half(const Digest256& txid) {
    std::array<uint8_t, 16> k{};
    std::memcpy(k.data(), txid.data() + 16, 16);
    return k;
}

// ChaCha20-Poly1305 keyed by SHA-256 of the second 16 bytes of the ctx txid.
// The nonce is fixed zero: every key encrypts exactly one blob, the jtx for
// the commitment whose txid supplied it.
inline Bytes encrypt_jtx(std::span<const uint8_t> jtx, const Digest256& ctx_txid) {
    ensure_sodium();
    auto key_half = txid_key_half(ctx_txid);
    Digest256 key = sha256(std::span<const uint8_t>(key_half));
    static_assert(crypto_aead_chacha20poly1305_ietf_KEYBYTES == 32);
    uint8_t nonce[crypto_aead_chacha20poly1305_ietf_NPUBBYTES] = {};
    Bytes out(jtx.size() + crypto_aead_chacha20poly1305_ietf_ABYTES);
    unsigned long long out_len = 0;
    crypto_aead_chacha20poly1305_ietf_encrypt(out.data(), &out_len, jtx.data(), jtx.size(), nullptr, 0,
                                              nullptr, nonce, key.data());
    out.resize(out_len);
    return out;
}

inline std::optional<Bytes> decrypt_jtx(std::span<const uint8_t> blob, const Digest256& ctx_txid) {
    ensure_sodium();
    if (blob.size() < crypto_aead_chacha20poly1305_ietf_ABYTES) return std::nullopt;
    auto key_half = txid_key_half(ctx_txid);
    Digest256 key = sha256(std::span<const uint8_t>(key_half));
    uint8_t nonce[crypto_aead_chacha20poly1305_ietf_NPUBBYTES] = {};
    Bytes out(blob.size() - crypto_aead_chacha20poly1305_ietf_ABYTES);
    unsigned long long out_len = 0;
    if (crypto_aead_chacha20poly1305_ietf_decrypt(out.data(), &out_len, nullptr, blob.data(), blob.size(),
                                                  nullptr, 0, nonce, key.data()) != 0)
        return std::nullopt;
    out.resize(out_len);
    return out;
}

struct WatchEntry {
    Prefix16 prefix{};
    Bytes encrypted_jtx;

    bool operator==(const WatchEntry&) const = default;
};

// What a tower actually holds for one contract. Until a matching txid shows
// up on chain, the entries reveal nothing the tower can decrypt.
struct WatchSession {
    std::vector<WatchEntry> entries;
    uint64_t monitor_start = 0;
    uint64_t monitor_end = 0;
    bool active = false;

    static WatchSession from_contract(const Contract& c) {
        WatchSession s;
        s.monitor_start = c.monitor_start;
        s.monitor_end = c.monitor_end;
        s.entries.reserve(c.txid_prefixes.size());
        for (size_t i = 0; i < c.txid_prefixes.size(); ++i)
            s.entries.push_back({c.txid_prefixes[i], c.encrypted_jtxs[i]});
        return s;
    }

    Bytes serialize() const {
        Writer w;
        w.put_u32(static_cast<uint32_t>(entries.size()));
        for (const auto& e : entries) {
            w.put_array(e.prefix);
            w.put_bytes(e.encrypted_jtx);
        }
        w.put_u64(monitor_start);
        w.put_u64(monitor_end);
        w.put_u8(active ? 1 : 0);
        return w.take();
    }

    static std::optional<WatchSession> parse(std::span<const uint8_t> bytes) {
        Reader r(bytes);
        WatchSession s;
        uint32_t n = r.get_u32();
        if (!r.ok() || n > r.remaining()) return std::nullopt;
        for (uint32_t i = 0; i < n; ++i) {
            WatchEntry e;
            e.prefix = r.get_array<16>();
            e.encrypted_jtx = r.get_bytes();
            s.entries.push_back(std::move(e));
        }
        s.monitor_start = r.get_u64();
        s.monitor_end = r.get_u64();
        uint8_t active = r.get_u8();
        if (!r.done() || active > 1) return std::nullopt;
        s.active = active == 1;
        return s;
    }

    bool operator==(const WatchSession&) const = default;
};

struct BreachHit {
    uint64_t height = 0;
    Digest256 ctx_txid;
    size_t entry_index = 0;
    Bytes jtx_bytes;
};

// Prefix-matches every transaction in the block against the session's
// entries. A matching prefix whose blob fails to authenticate is a prefix
// collision with someone else's channel and is skipped silently.
inline std::vector<BreachHit> scan_block(const WatchSession& session, const SimBlock& block) {
    std::vector<BreachHit> hits;
    if (!session.active) return hits;
    if (block.height < session.monitor_start || block.height > session.monitor_end) return hits;
    for (const auto& tx : block.transactions) {
        Digest256 id = tx.txid();
        Prefix16 prefix = txid_prefix(id);
        for (size_t i = 0; i < session.entries.size(); ++i) {
            if (session.entries[i].prefix != prefix) continue;
            auto jtx = decrypt_jtx(session.entries[i].encrypted_jtx, id);
            if (!jtx) continue;
            hits.push_back({block.height, id, i, std::move(*jtx)});
        }
    }
    return hits;
}

struct PublishReceipt {
    Digest256 jtx_txid;
    bool accepted = false;
    uint64_t height = 0;
    std::optional<TxError> error;
};

// Broadcasts the decrypted justice transactions: they all go into the next
// block. An honest tower calls this promptly, well inside the dispute window.
inline std::vector<PublishReceipt> respond(const std::vector<BreachHit>& hits, SimChain& chain) {
    std::vector<PublishReceipt> receipts;
    std::vector<SimTransaction> txs;
    for (const auto& hit : hits) {
        auto tx = SimTransaction::parse(hit.jtx_bytes);
        if (!tx) {
            receipts.push_back({{}, false, 0, TxError::UnknownInput});
            continue;
        }
        txs.push_back(std::move(*tx));
    }
    if (txs.empty()) return receipts;
    AppendResult res = chain.append_block(txs);
    std::vector<bool> rejected(txs.size(), false);
    std::vector<TxError> errors(txs.size());
    for (const auto& rej : res.rejected) {
        rejected[rej.index] = true;
        errors[rej.index] = rej.error;
    }
    for (size_t i = 0; i < txs.size(); ++i) {
        PublishReceipt rec;
        rec.jtx_txid = txs[i].txid();
        rec.accepted = !rejected[i];
        rec.height = res.height;
        if (rejected[i]) rec.error = errors[i];
        receipts.push_back(rec);
    }
    return receipts;
}

}  // namespace hashrep
