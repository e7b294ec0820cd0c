#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hashrep/merkle.hpp"
#include "hashrep/serial.hpp"
#include "hashrep/sha256.hpp"

namespace hashrep {

enum class TxKind : uint8_t { Open = 1, Commitment = 2, Justice = 3, Sweep = 4, Plain = 5 };

inline const char* to_string(TxKind k) {
    switch (k) {
        case TxKind::Open: return "open";
        case TxKind::Commitment: return "commitment";
        case TxKind::Justice: return "justice";
        case TxKind::Sweep: return "sweep";
        case TxKind::Plain: return "plain";
    }
    return "?";
}

struct TxInput {
    Digest256 txid;
    uint32_t vout = 0;

    bool operator==(const TxInput&) const = default;
};

// Ownership is a bare tag; the simulation enforces spends and timelocks,
// not signatures.
struct TxOutput {
    std::string owner;
    uint64_t amount = 0;

    bool operator==(const TxOutput&) const = default;
};

struct SimTransaction {
    std::vector<TxInput> inputs;
    std::vector<TxOutput> outputs;
    TxKind kind = TxKind::Plain;
    Bytes payload;

    Bytes serialize() const {
        Writer w;
        w.put_u32(static_cast<uint32_t>(inputs.size()));
        for (const auto& in : inputs) {
            w.put_digest(in.txid);
            w.put_u32(in.vout);
        }
        w.put_u32(static_cast<uint32_t>(outputs.size()));
        for (const auto& out : outputs) {
            w.put_string(out.owner);
            w.put_u64(out.amount);
        }
        w.put_u8(static_cast<uint8_t>(kind));
        w.put_bytes(payload);
        return w.take();
    }

    static std::optional<SimTransaction> parse(std::span<const uint8_t> bytes) {
        Reader r(bytes);
        SimTransaction tx;
        uint32_t n_in = r.get_u32();
        if (!r.ok() || n_in > r.remaining() / 36) return std::nullopt;
        tx.inputs.reserve(n_in);
        for (uint32_t i = 0; i < n_in; ++i) {
            TxInput in;
            in.txid = r.get_digest();
            in.vout = r.get_u32();
            tx.inputs.push_back(in);
        }
        uint32_t n_out = r.get_u32();
        if (!r.ok() || n_out > r.remaining() / 12) return std::nullopt;
        tx.outputs.reserve(n_out);
        for (uint32_t i = 0; i < n_out; ++i) {
            TxOutput out;
            out.owner = r.get_string();
            out.amount = r.get_u64();
            tx.outputs.push_back(std::move(out));
        }
        uint8_t kind = r.get_u8();
        if (kind < 1 || kind > 5) return std::nullopt;
        tx.kind = static_cast<TxKind>(kind);
        tx.payload = r.get_bytes();
        if (!r.done()) return std::nullopt;
        return tx;
    }

    Digest256 txid() const { return sha256(serialize()); }

    uint64_t total_out() const {
        uint64_t sum = 0;
        for (const auto& o : outputs) sum += o.amount;
        return sum;
    }

    bool operator==(const SimTransaction&) const = default;
};

struct SimBlock {
    uint64_t height = 0;
    Digest256 prev_hash;
    Digest256 merkle_root;
    std::vector<SimTransaction> transactions;

    Digest256 hash() const {
        Writer w;
        w.put_u64(height);
        w.put_digest(prev_hash);
        w.put_digest(merkle_root);
        return sha256(w.bytes());
    }

    Bytes serialize() const {
        Writer w;
        w.put_u64(height);
        w.put_digest(prev_hash);
        w.put_digest(merkle_root);
        w.put_u32(static_cast<uint32_t>(transactions.size()));
        for (const auto& tx : transactions) w.put_bytes(tx.serialize());
        return w.take();
    }

    static std::optional<SimBlock> parse(std::span<const uint8_t> bytes) {
        Reader r(bytes);
        SimBlock b;
        b.height = r.get_u64();
        b.prev_hash = r.get_digest();
        b.merkle_root = r.get_digest();
        uint32_t n = r.get_u32();
        if (!r.ok() || n > r.remaining()) return std::nullopt;
        b.transactions.reserve(n);
        for (uint32_t i = 0; i < n; ++i) {
            auto tx = SimTransaction::parse(r.get_bytes());
            if (!tx) return std::nullopt;
            b.transactions.push_back(std::move(*tx));
        }
        if (!r.done()) return std::nullopt;
        return b;
    }

    bool operator==(const SimBlock&) const = default;
};

inline Digest256 block_merkle_root(const std::vector<SimTransaction>& txs) {
    std::vector<Digest256> leaves;
    leaves.reserve(txs.size());
    for (const auto& tx : txs) leaves.push_back(tx.txid());
    return merkle_root(leaves);
}

// Light-client view: the per-block commitments needed to check Merkle proofs.
struct HeaderRecord {
    uint64_t height = 0;
    Digest256 hash;
    Digest256 merkle_root;

    bool operator==(const HeaderRecord&) const = default;
};

struct HeaderChain {
    std::vector<HeaderRecord> records;

    const HeaderRecord* at(uint64_t height) const {
        if (height >= records.size()) return nullptr;
        const HeaderRecord& rec = records[height];
        return rec.height == height ? &rec : nullptr;
    }

    Bytes serialize() const {
        Writer w;
        w.put_u32(static_cast<uint32_t>(records.size()));
        for (const auto& rec : records) {
            w.put_u64(rec.height);
            w.put_digest(rec.hash);
            w.put_digest(rec.merkle_root);
        }
        return w.take();
    }

    static std::optional<HeaderChain> parse(std::span<const uint8_t> bytes) {
        Reader r(bytes);
        HeaderChain hc;
        uint32_t n = r.get_u32();
        if (!r.ok() || n > r.remaining() / 72) return std::nullopt;
        hc.records.reserve(n);
        for (uint32_t i = 0; i < n; ++i) {
            HeaderRecord rec;
            rec.height = r.get_u64();
            rec.hash = r.get_digest();
            rec.merkle_root = r.get_digest();
            if (rec.height != i) return std::nullopt;
            hc.records.push_back(rec);
        }
        if (!r.done()) return std::nullopt;
        return hc;
    }
};

enum class TxError : uint8_t {
    UnknownInput,
    DoubleSpend,
    UnbalancedValue,
    JusticeWindowClosed,
    CommitmentOutputLocked,
};

inline const char* to_string(TxError e) {
    switch (e) {
        case TxError::UnknownInput: return "unknown-input";
        case TxError::DoubleSpend: return "double-spend";
        case TxError::UnbalancedValue: return "unbalanced-value";
        case TxError::JusticeWindowClosed: return "justice-window-closed";
        case TxError::CommitmentOutputLocked: return "commitment-output-locked";
    }
    return "?";
}

struct RejectedTx {
    size_t index = 0;
    TxError error = TxError::UnknownInput;
};

struct AppendResult {
    uint64_t height = 0;
    size_t accepted = 0;
    std::vector<RejectedTx> rejected;

    bool all_accepted() const { return rejected.empty(); }
};

struct TxLocation {
    uint64_t height = 0;
    uint32_t index = 0;
};

struct SpendInfo {
    Digest256 spender;
    uint64_t height = 0;
};

// Deterministic single-writer ledger. Commitment outputs are timelocked by
// the acceptance rule: a justice transaction is accepted up to and including
// ctx height + dispute_period, anything else strictly after that window.
class SimChain {
public:
    explicit SimChain(uint64_t dispute_period = 144) : dispute_period_(dispute_period) {
        SimBlock genesis;
        genesis.height = 0;
        genesis.merkle_root = empty_merkle_root();
        blocks_.push_back(std::move(genesis));
    }

    uint64_t dispute_period() const { return dispute_period_; }
    uint64_t tip_height() const { return blocks_.back().height; }
    const std::vector<SimBlock>& blocks() const { return blocks_; }

    const SimBlock& block_at(uint64_t height) const {
        if (height >= blocks_.size()) throw std::out_of_range("block height");
        return blocks_[height];
    }

    AppendResult append_block(const std::vector<SimTransaction>& txs) {
        uint64_t height = tip_height() + 1;
        AppendResult result;
        result.height = height;
        std::vector<SimTransaction> accepted;
        accepted.reserve(txs.size());
        std::map<std::pair<Digest256, uint32_t>, size_t> block_spends;
        std::vector<const SimTransaction*> block_txs;
        for (size_t i = 0; i < txs.size(); ++i) {
            auto err = validate_tx(txs[i], height, block_spends, block_txs);
            if (err) {
                result.rejected.push_back({i, *err});
                continue;
            }
            for (const auto& in : txs[i].inputs) block_spends[{in.txid, in.vout}] = accepted.size();
            accepted.push_back(txs[i]);
            block_txs.push_back(&accepted.back());
        }
        result.accepted = accepted.size();
        commit_block(height, std::move(accepted));
        return result;
    }

    std::optional<TxLocation> find_tx(const Digest256& txid) const {
        auto it = tx_index_.find(txid);
        if (it == tx_index_.end()) return std::nullopt;
        return it->second;
    }

    const SimTransaction* tx_by_id(const Digest256& txid) const {
        auto loc = find_tx(txid);
        if (!loc) return nullptr;
        return &blocks_[loc->height].transactions[loc->index];
    }

    std::optional<SpendInfo> spent_by(const Digest256& txid, uint32_t vout) const {
        auto it = spends_.find({txid, vout});
        if (it == spends_.end()) return std::nullopt;
        return it->second;
    }

    std::optional<MerkleProof> merkle_proof(const Digest256& txid) const {
        auto loc = find_tx(txid);
        if (!loc) return std::nullopt;
        const auto& txs = blocks_[loc->height].transactions;
        std::vector<Digest256> leaves;
        leaves.reserve(txs.size());
        for (const auto& tx : txs) leaves.push_back(tx.txid());
        return build_merkle_proof(leaves, loc->index, loc->height);
    }

    HeaderChain headers() const {
        HeaderChain hc;
        hc.records.reserve(blocks_.size());
        for (const auto& b : blocks_) hc.records.push_back({b.height, b.hash(), b.merkle_root});
        return hc;
    }

    // Snapshot stream: dispute period, then each block length-prefixed.
    Bytes export_bytes() const {
        Writer w;
        w.put_u64(dispute_period_);
        w.put_u32(static_cast<uint32_t>(blocks_.size()));
        for (const auto& b : blocks_) w.put_bytes(b.serialize());
        return w.take();
    }

    // Rebuilds by replaying every block through validation, so a tampered
    // stream (bad root, bad link, rule-violating spend) fails to import.
    static std::optional<SimChain> import_bytes(std::span<const uint8_t> bytes) {
        Reader r(bytes);
        uint64_t dispute_period = r.get_u64();
        uint32_t n = r.get_u32();
        if (!r.ok() || n == 0) return std::nullopt;
        SimChain chain(dispute_period);
        for (uint32_t i = 0; i < n; ++i) {
            auto block = SimBlock::parse(r.get_bytes());
            if (!r.ok() || !block || block->height != i) return std::nullopt;
            if (block->merkle_root != block_merkle_root(block->transactions)) return std::nullopt;
            if (i == 0) {
                if (*block != chain.blocks_[0]) return std::nullopt;
                continue;
            }
            if (block->prev_hash != chain.blocks_.back().hash()) return std::nullopt;
            AppendResult res = chain.append_block(block->transactions);
            if (!res.all_accepted()) return std::nullopt;
        }
        if (!r.done()) return std::nullopt;
        return chain;
    }

private:
    std::optional<TxError> validate_tx(const SimTransaction& tx, uint64_t height,
                                       const std::map<std::pair<Digest256, uint32_t>, size_t>& block_spends,
                                       const std::vector<const SimTransaction*>& block_txs) const {
        uint64_t total_in = 0;
        for (const auto& in : tx.inputs) {
            const SimTransaction* src = tx_by_id(in.txid);
            uint64_t src_height = 0;
            if (src) {
                src_height = tx_index_.at(in.txid).height;
            } else {
                // May spend an output created earlier in this same block.
                bool found = false;
                for (const auto* prior : block_txs) {
                    if (prior->txid() == in.txid) {
                        src = prior;
                        src_height = height;
                        found = true;
                        break;
                    }
                }
                if (!found) return TxError::UnknownInput;
            }
            if (in.vout >= src->outputs.size()) return TxError::UnknownInput;
            if (spends_.count({in.txid, in.vout}) || block_spends.count({in.txid, in.vout}))
                return TxError::DoubleSpend;
            if (src->kind == TxKind::Commitment) {
                uint64_t window_end = src_height + dispute_period_;
                if (tx.kind == TxKind::Justice) {
                    if (height > window_end) return TxError::JusticeWindowClosed;
                } else {
                    if (height <= window_end) return TxError::CommitmentOutputLocked;
                }
            }
            total_in += src->outputs[in.vout].amount;
        }
        if (!tx.inputs.empty() && total_in != tx.total_out()) return TxError::UnbalancedValue;
        return std::nullopt;
    }

    void commit_block(uint64_t height, std::vector<SimTransaction> txs) {
        SimBlock block;
        block.height = height;
        block.prev_hash = blocks_.back().hash();
        block.merkle_root = block_merkle_root(txs);
        block.transactions = std::move(txs);
        for (uint32_t i = 0; i < block.transactions.size(); ++i) {
            const auto& tx = block.transactions[i];
            Digest256 id = tx.txid();
            tx_index_[id] = {height, i};
            for (const auto& in : tx.inputs) spends_[{in.txid, in.vout}] = {id, height};
        }
        blocks_.push_back(std::move(block));
    }

    uint64_t dispute_period_;
    std::vector<SimBlock> blocks_;
    std::map<Digest256, TxLocation> tx_index_;
    std::map<std::pair<Digest256, uint32_t>, SpendInfo> spends_;
};

// --- Payment channels -------------------------------------------------------

struct CommitmentEntry {
    SimTransaction ctx;
    // Remedy for publishing this (revoked) state; absent on the latest state.
    std::optional<SimTransaction> jtx;
    std::string jtx_holder;
    uint64_t balance_a = 0;
    uint64_t balance_b = 0;
};

struct Channel {
    std::string party_a;
    std::string party_b;
    uint64_t fund = 0;
    bool directional = false;  // when set, party_a only pays, party_b only receives
    SimTransaction topen;
    std::vector<CommitmentEntry> commitments;

    const CommitmentEntry& latest() const { return commitments.back(); }
    size_t state_count() const { return commitments.size(); }

    std::string counterparty(const std::string& party) const {
        return party == party_a ? party_b : party_a;
    }
};

namespace detail {

inline SimTransaction make_commitment(const Channel& ch, uint64_t balance_a, uint64_t balance_b,
                                      uint64_t state_index) {
    SimTransaction ctx;
    ctx.kind = TxKind::Commitment;
    ctx.inputs.push_back({ch.topen.txid(), 0});
    if (balance_a > 0) ctx.outputs.push_back({ch.party_a, balance_a});
    if (balance_b > 0) ctx.outputs.push_back({ch.party_b, balance_b});
    Writer w;
    w.put_u64(state_index);
    ctx.payload = w.take();
    return ctx;
}

}  // namespace detail

// Opens the joint account. The opening transaction still has to be appended
// to the chain by the caller; ctx_1 exists off-chain from the start so either
// party can exit if the other disappears.
inline Channel open_channel(std::string party_a, std::string party_b, uint64_t fund, bool directional,
                            std::string label = {}) {
    if (!directional && fund % 2 != 0) throw std::invalid_argument("non-directional channel fund must split evenly");
    Channel ch;
    ch.party_a = std::move(party_a);
    ch.party_b = std::move(party_b);
    ch.fund = fund;
    ch.directional = directional;
    ch.topen.kind = TxKind::Open;
    ch.topen.outputs.push_back({ch.party_a + "+" + ch.party_b, fund});
    ch.topen.payload = to_bytes(label);
    uint64_t balance_a = directional ? fund : fund / 2;
    uint64_t balance_b = fund - balance_a;
    CommitmentEntry first;
    first.balance_a = balance_a;
    first.balance_b = balance_b;
    first.ctx = detail::make_commitment(ch, balance_a, balance_b, 1);
    ch.commitments.push_back(std::move(first));
    return ch;
}

struct ChannelUpdate {
    SimTransaction new_ctx;
    SimTransaction revoked_jtx;
    std::string jtx_holder;
};

// Off-chain payment: creates ctx_{i+1} and hands the justice transaction for
// the now-revoked ctx_i to the payee (the party the old state cheats).
inline ChannelUpdate update_channel(Channel& ch, const std::string& payer, uint64_t amount) {
    if (payer != ch.party_a && payer != ch.party_b) throw std::invalid_argument("unknown payer");
    if (ch.directional && payer != ch.party_a) throw std::invalid_argument("directional channel: only party_a pays");
    CommitmentEntry& prev = ch.commitments.back();
    bool payer_is_a = payer == ch.party_a;
    uint64_t payer_balance = payer_is_a ? prev.balance_a : prev.balance_b;
    if (payer_balance < amount) throw std::invalid_argument("insufficient channel balance");

    CommitmentEntry next;
    if (payer_is_a) {
        next.balance_a = prev.balance_a - amount;
        next.balance_b = prev.balance_b + amount;
    } else {
        next.balance_a = prev.balance_a + amount;
        next.balance_b = prev.balance_b - amount;
    }
    next.ctx = detail::make_commitment(ch, next.balance_a, next.balance_b, ch.commitments.size() + 1);

    std::string victim = ch.counterparty(payer);
    SimTransaction jtx;
    jtx.kind = TxKind::Justice;
    Digest256 revoked_id = prev.ctx.txid();
    for (uint32_t i = 0; i < prev.ctx.outputs.size(); ++i) jtx.inputs.push_back({revoked_id, i});
    jtx.outputs.push_back({victim, prev.ctx.total_out()});

    prev.jtx = jtx;
    prev.jtx_holder = victim;
    ch.commitments.push_back(std::move(next));
    return {ch.commitments.back().ctx, std::move(jtx), victim};
}

// The cheater's claim on their own outputs of a published stale commitment;
// only accepted by the chain once the dispute window has closed.
inline SimTransaction make_sweep(const Channel& ch, size_t state_index, const std::string& cheater) {
    const CommitmentEntry& entry = ch.commitments.at(state_index);
    SimTransaction sweep;
    sweep.kind = TxKind::Sweep;
    Digest256 ctx_id = entry.ctx.txid();
    uint64_t total = 0;
    for (uint32_t i = 0; i < entry.ctx.outputs.size(); ++i) {
        if (entry.ctx.outputs[i].owner == cheater) {
            sweep.inputs.push_back({ctx_id, i});
            total += entry.ctx.outputs[i].amount;
        }
    }
    if (sweep.inputs.empty()) throw std::invalid_argument("cheater owns no output in that state");
    sweep.outputs.push_back({cheater, total});
    return sweep;
}

}  // namespace hashrep
