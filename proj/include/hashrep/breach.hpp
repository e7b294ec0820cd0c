#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <set>

#include "hashrep/watchtower.hpp"

namespace hashrep {

// Merkle-proved non-justice spend of one of the commitment outputs the jtx
// would have consumed. Since an output can be spent once, this shows the jtx
// was never published, without shipping whole blocks to a light verifier.
struct AbsenceEvidence {
    Bytes spender_bytes;
    MerkleProof inclusion;

    bool operator==(const AbsenceEvidence&) const = default;
};

// Contract, the server preimage that activated it, and chain evidence that
// the promised justice transaction never appeared. Document tag 0x03.
struct ProofOfBreach {
    Contract contract;
    Preimage server_preimage{};
    Bytes ctx_bytes;
    MerkleProof ctx_inclusion;
    std::optional<AbsenceEvidence> absence;
    Bytes jtx_bytes;

    Bytes serialize() const {
        Writer w;
        w.put_u8(doc_tag::proof_of_breach);
        contract.serialize_into(w);
        w.put_array(server_preimage);
        w.put_bytes(ctx_bytes);
        ctx_inclusion.serialize(w);
        w.put_u8(absence ? 1 : 0);
        if (absence) {
            w.put_bytes(absence->spender_bytes);
            absence->inclusion.serialize(w);
        }
        w.put_bytes(jtx_bytes);
        return w.take();
    }

    static std::optional<ProofOfBreach> parse(std::span<const uint8_t> bytes) {
        Reader r(bytes);
        if (r.get_u8() != doc_tag::proof_of_breach) return std::nullopt;
        ProofOfBreach p;
        auto contract = Contract::parse_fields(r);
        if (!contract) return std::nullopt;
        p.contract = std::move(*contract);
        p.server_preimage = r.get_array<32>();
        p.ctx_bytes = r.get_bytes();
        auto inclusion = MerkleProof::parse(r);
        if (!inclusion) return std::nullopt;
        p.ctx_inclusion = std::move(*inclusion);
        uint8_t has_absence = r.get_u8();
        if (has_absence > 1) return std::nullopt;
        if (has_absence == 1) {
            AbsenceEvidence ev;
            ev.spender_bytes = r.get_bytes();
            auto ev_proof = MerkleProof::parse(r);
            if (!ev_proof) return std::nullopt;
            ev.inclusion = std::move(*ev_proof);
            p.absence = std::move(ev);
        }
        p.jtx_bytes = r.get_bytes();
        if (!r.done()) return std::nullopt;
        return p;
    }

    Digest256 digest() const { return sha256(serialize()); }

    bool operator==(const ProofOfBreach&) const = default;
};

// A revoked proof carries no reputational weight; the client preimage is the
// settlement receipt.
inline bool is_revoked(const ProofOfBreach& p, const Preimage& client_preimage) {
    return hash_lock_matches(p.contract.client_hash_image, client_preimage);
}

struct VerifyVerdict {
    bool valid = false;
    int failed_condition = 0;  // 1..6 per the checklist, 0 when valid
    std::string reason;

    static VerifyVerdict pass() { return {true, 0, {}}; }
    static VerifyVerdict fail(int condition, std::string reason) {
        return {false, condition, std::move(reason)};
    }

    bool operator==(const VerifyVerdict& o) const {
        return valid == o.valid && failed_condition == o.failed_condition;
    }
};

namespace detail {

struct ParsedProof {
    SimTransaction ctx;
    Digest256 ctx_txid;
    SimTransaction jtx;
    size_t entry_index = 0;
    std::set<uint32_t> jtx_vouts;
};

// Conditions 1..5 are chain-independent given a root lookup for condition 4.
inline std::optional<VerifyVerdict> check_static_conditions(
    const ProofOfBreach& p, const std::function<const Digest256*(uint64_t)>& root_at, ParsedProof& out) {
    // (1) document format
    if (!p.contract.well_formed()) return VerifyVerdict::fail(1, "malformed contract");
    auto ctx = SimTransaction::parse(p.ctx_bytes);
    if (!ctx || ctx->kind != TxKind::Commitment) return VerifyVerdict::fail(1, "ctx does not parse as a commitment");
    auto jtx = SimTransaction::parse(p.jtx_bytes);
    if (!jtx) return VerifyVerdict::fail(1, "jtx does not parse");
    out.ctx = std::move(*ctx);
    out.ctx_txid = out.ctx.txid();
    out.jtx = std::move(*jtx);

    // (2) contract signature under the server ID
    if (!verify_contract_signature(p.contract)) return VerifyVerdict::fail(2, "contract signature invalid");

    // (3) server preimage opens the server hash image
    if (!hash_lock_matches(p.contract.server_hash_image, p.server_preimage))
        return VerifyVerdict::fail(3, "server preimage does not match hash image");

    // (4) ctx published in a block the tower was obliged to monitor: its
    // prefix is listed in the contract and its block is inside the range
    Prefix16 prefix = txid_prefix(out.ctx_txid);
    bool listed = false;
    for (const auto& entry : p.contract.txid_prefixes) {
        if (entry == prefix) {
            listed = true;
            break;
        }
    }
    if (!listed) return VerifyVerdict::fail(4, "ctx prefix is not part of the contract");
    uint64_t h = p.ctx_inclusion.block_height;
    if (h < p.contract.monitor_start || h > p.contract.monitor_end)
        return VerifyVerdict::fail(4, "ctx outside monitored block range");
    if (p.ctx_inclusion.leaf != out.ctx_txid) return VerifyVerdict::fail(4, "inclusion proof not bound to ctx");
    const Digest256* root = root_at(h);
    if (!root || !verify_merkle_proof(*root, p.ctx_inclusion))
        return VerifyVerdict::fail(4, "ctx inclusion proof does not verify");

    // (5) jtx is a valid spend of ctx and is the one the contract committed
    // to for this ctx: it decrypts from the matching entry
    if (out.jtx.kind != TxKind::Justice || out.jtx.inputs.empty())
        return VerifyVerdict::fail(5, "jtx is not a justice transaction");
    uint64_t spent_value = 0;
    for (const auto& in : out.jtx.inputs) {
        if (in.txid != out.ctx_txid || in.vout >= out.ctx.outputs.size())
            return VerifyVerdict::fail(5, "jtx input does not spend ctx");
        if (!out.jtx_vouts.insert(in.vout).second) return VerifyVerdict::fail(5, "jtx spends an output twice");
        spent_value += out.ctx.outputs[in.vout].amount;
    }
    if (spent_value != out.jtx.total_out()) return VerifyVerdict::fail(5, "jtx does not conserve value");
    bool committed = false;
    for (size_t i = 0; i < p.contract.txid_prefixes.size(); ++i) {
        if (p.contract.txid_prefixes[i] != prefix) continue;
        auto plain = decrypt_jtx(p.contract.encrypted_jtxs[i], out.ctx_txid);
        if (plain && *plain == p.jtx_bytes) {
            committed = true;
            out.entry_index = i;
            break;
        }
    }
    if (!committed) return VerifyVerdict::fail(5, "jtx is not the transaction the contract committed to");
    return std::nullopt;
}

}  // namespace detail

// Full-node verification: condition 6 is established by scanning the spend
// index across the dispute window.
inline VerifyVerdict verify_proof(const ProofOfBreach& p, const SimChain& chain) {
    detail::ParsedProof parsed;
    auto root_at = [&chain](uint64_t h) -> const Digest256* {
        if (h > chain.tip_height()) return nullptr;
        return &chain.block_at(h).merkle_root;
    };
    if (auto verdict = detail::check_static_conditions(p, root_at, parsed)) return *verdict;

    uint64_t ctx_height = p.ctx_inclusion.block_height;
    uint64_t window_end = ctx_height + p.contract.dispute_period;
    if (chain.tip_height() < window_end)
        return VerifyVerdict::fail(6, "dispute window still open");
    for (uint32_t vout : parsed.jtx_vouts) {
        auto spend = chain.spent_by(parsed.ctx_txid, vout);
        if (!spend) continue;
        const SimTransaction* spender = chain.tx_by_id(spend->spender);
        if (spender && spender->kind == TxKind::Justice && spend->height <= window_end)
            return VerifyVerdict::fail(6, "a justice transaction was published in the dispute window");
    }
    return VerifyVerdict::pass();
}

// Light-client verification against block headers only. Condition 6 needs
// the absence evidence; when the ctx outputs were never spent by anyone,
// light clients must fall back to scanning full blocks for the window.
inline VerifyVerdict verify_proof(const ProofOfBreach& p, const HeaderChain& headers) {
    detail::ParsedProof parsed;
    auto root_at = [&headers](uint64_t h) -> const Digest256* {
        const HeaderRecord* rec = headers.at(h);
        return rec ? &rec->merkle_root : nullptr;
    };
    if (auto verdict = detail::check_static_conditions(p, root_at, parsed)) return *verdict;

    if (!p.absence)
        return VerifyVerdict::fail(6, "no absence evidence; light verification needs a spender or full blocks");
    auto spender = SimTransaction::parse(p.absence->spender_bytes);
    if (!spender) return VerifyVerdict::fail(6, "absence spender does not parse");
    if (spender->kind == TxKind::Justice)
        return VerifyVerdict::fail(6, "absence spender is itself a justice transaction");
    bool spends_watched_output = false;
    for (const auto& in : spender->inputs) {
        if (in.txid == parsed.ctx_txid && parsed.jtx_vouts.count(in.vout)) {
            spends_watched_output = true;
            break;
        }
    }
    if (!spends_watched_output)
        return VerifyVerdict::fail(6, "absence spender does not consume a watched ctx output");
    if (p.absence->inclusion.leaf != sha256(p.absence->spender_bytes))
        return VerifyVerdict::fail(6, "absence inclusion proof not bound to spender");
    const Digest256* root = root_at(p.absence->inclusion.block_height);
    if (!root || !verify_merkle_proof(*root, p.absence->inclusion))
        return VerifyVerdict::fail(6, "absence inclusion proof does not verify");
    return VerifyVerdict::pass();
}

enum class BuildFailure : uint8_t {
    None,
    BadContract,
    BadPreimage,
    CtxNotOnChain,
    WindowStillOpen,
    Remedied,
};

inline const char* to_string(BuildFailure f) {
    switch (f) {
        case BuildFailure::None: return "none";
        case BuildFailure::BadContract: return "bad-contract";
        case BuildFailure::BadPreimage: return "bad-preimage";
        case BuildFailure::CtxNotOnChain: return "no-breach:ctx-not-on-chain";
        case BuildFailure::WindowStillOpen: return "no-breach:window-still-open";
        case BuildFailure::Remedied: return "no-breach:remedied";
    }
    return "?";
}

struct BuildResult {
    std::optional<ProofOfBreach> proof;
    BuildFailure failure = BuildFailure::None;

    bool ok() const { return proof.has_value(); }
};

// Assembles a proof for one contract entry, or reports why there is no
// breach to prove. Absence evidence is attached when some non-justice
// transaction has already consumed a watched output (typically the cheater's
// own sweep); without it the proof still verifies in full-node mode.
inline BuildResult build_proof(const Contract& contract, const Preimage& server_preimage,
                               const SimChain& chain, size_t entry_index) {
    if (!contract.well_formed() || entry_index >= contract.txid_prefixes.size() ||
        !verify_contract_signature(contract))
        return {std::nullopt, BuildFailure::BadContract};
    if (!hash_lock_matches(contract.server_hash_image, server_preimage))
        return {std::nullopt, BuildFailure::BadPreimage};

    // Locate the published ctx for this entry inside the monitored range.
    const SimTransaction* ctx = nullptr;
    Digest256 ctx_txid;
    Bytes jtx_bytes;
    uint64_t ctx_height = 0;
    uint64_t last = std::min(contract.monitor_end, chain.tip_height());
    for (uint64_t h = contract.monitor_start; h <= last && !ctx; ++h) {
        for (const auto& tx : chain.block_at(h).transactions) {
            Digest256 id = tx.txid();
            if (txid_prefix(id) != contract.txid_prefixes[entry_index]) continue;
            auto plain = decrypt_jtx(contract.encrypted_jtxs[entry_index], id);
            if (!plain) continue;
            ctx = &tx;
            ctx_txid = id;
            jtx_bytes = std::move(*plain);
            ctx_height = h;
            break;
        }
    }
    if (!ctx) return {std::nullopt, BuildFailure::CtxNotOnChain};

    uint64_t window_end = ctx_height + contract.dispute_period;
    if (chain.tip_height() < window_end) return {std::nullopt, BuildFailure::WindowStillOpen};

    auto jtx = SimTransaction::parse(jtx_bytes);
    if (!jtx) return {std::nullopt, BuildFailure::BadContract};
    std::optional<AbsenceEvidence> absence;
    for (const auto& in : jtx->inputs) {
        auto spend = chain.spent_by(ctx_txid, in.vout);
        if (!spend) continue;
        const SimTransaction* spender = chain.tx_by_id(spend->spender);
        if (!spender) continue;
        if (spender->kind == TxKind::Justice && spend->height <= window_end)
            return {std::nullopt, BuildFailure::Remedied};
        if (spender->kind != TxKind::Justice && !absence) {
            auto inclusion = chain.merkle_proof(spend->spender);
            if (inclusion) absence = AbsenceEvidence{spender->serialize(), std::move(*inclusion)};
        }
    }

    ProofOfBreach proof;
    proof.contract = contract;
    proof.server_preimage = server_preimage;
    proof.ctx_bytes = ctx->serialize();
    auto inclusion = chain.merkle_proof(ctx_txid);
    if (!inclusion) return {std::nullopt, BuildFailure::CtxNotOnChain};
    proof.ctx_inclusion = std::move(*inclusion);
    proof.absence = std::move(absence);
    proof.jtx_bytes = std::move(jtx_bytes);
    return {std::move(proof), BuildFailure::None};
}

// Tries every contract entry; first provable breach wins.
inline BuildResult build_any_proof(const Contract& contract, const Preimage& server_preimage,
                                   const SimChain& chain) {
    BuildFailure last = BuildFailure::CtxNotOnChain;
    for (size_t i = 0; i < contract.txid_prefixes.size(); ++i) {
        BuildResult res = build_proof(contract, server_preimage, chain, i);
        if (res.ok()) return res;
        if (res.failure != BuildFailure::CtxNotOnChain) last = res.failure;
    }
    return {std::nullopt, last};
}

}  // namespace hashrep
