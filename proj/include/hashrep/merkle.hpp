#pragma once

#include <optional>
#include <vector>

#include "hashrep/serial.hpp"
#include "hashrep/sha256.hpp"

namespace hashrep {

// Bitcoin-style tree: odd levels duplicate their last node. A single leaf is
// its own root; the empty tree hashes the empty string.
inline Digest256 empty_merkle_root() { return sha256(std::string_view{}); }

inline Digest256 merkle_parent(const Digest256& left, const Digest256& right) {
    Sha256 h;
    h.update(std::span(left.bytes));
    h.update(std::span(right.bytes));
    return h.finish();
}

inline Digest256 merkle_root(std::span<const Digest256> leaves) {
    if (leaves.empty()) return empty_merkle_root();
    std::vector<Digest256> level(leaves.begin(), leaves.end());
    while (level.size() > 1) {
        if (level.size() % 2 != 0) level.push_back(level.back());
        std::vector<Digest256> next;
        next.reserve(level.size() / 2);
        for (size_t i = 0; i < level.size(); i += 2) next.push_back(merkle_parent(level[i], level[i + 1]));
        level = std::move(next);
    }
    return level[0];
}

struct MerkleStep {
    Digest256 sibling;
    bool sibling_on_right = false;

    bool operator==(const MerkleStep&) const = default;
};

struct MerkleProof {
    Digest256 leaf;
    std::vector<MerkleStep> path;
    uint64_t block_height = 0;

    void serialize(Writer& w) const {
        w.put_digest(leaf);
        w.put_u32(static_cast<uint32_t>(path.size()));
        for (const auto& step : path) {
            w.put_digest(step.sibling);
            w.put_u8(step.sibling_on_right ? 1 : 0);
        }
        w.put_u64(block_height);
    }

    static std::optional<MerkleProof> parse(Reader& r) {
        MerkleProof p;
        p.leaf = r.get_digest();
        uint32_t n = r.get_u32();
        if (!r.ok() || n > 64 || n * 33ull > r.remaining()) return std::nullopt;
        p.path.reserve(n);
        for (uint32_t i = 0; i < n; ++i) {
            MerkleStep step;
            step.sibling = r.get_digest();
            uint8_t side = r.get_u8();
            if (side > 1) return std::nullopt;
            step.sibling_on_right = side == 1;
            p.path.push_back(step);
        }
        p.block_height = r.get_u64();
        if (!r.ok()) return std::nullopt;
        return p;
    }

    Digest256 fold() const {
        Digest256 cur = leaf;
        for (const auto& step : path) {
            cur = step.sibling_on_right ? merkle_parent(cur, step.sibling) : merkle_parent(step.sibling, cur);
        }
        return cur;
    }

    bool operator==(const MerkleProof&) const = default;
};

inline MerkleProof build_merkle_proof(std::span<const Digest256> leaves, size_t index, uint64_t block_height) {
    MerkleProof proof;
    proof.leaf = leaves[index];
    proof.block_height = block_height;
    std::vector<Digest256> level(leaves.begin(), leaves.end());
    size_t pos = index;
    while (level.size() > 1) {
        if (level.size() % 2 != 0) level.push_back(level.back());
        size_t sibling = pos ^ 1;
        proof.path.push_back({level[sibling], sibling > pos});
        std::vector<Digest256> next;
        next.reserve(level.size() / 2);
        for (size_t i = 0; i < level.size(); i += 2) next.push_back(merkle_parent(level[i], level[i + 1]));
        level = std::move(next);
        pos /= 2;
    }
    return proof;
}

inline bool verify_merkle_proof(const Digest256& root, const MerkleProof& proof) {
    return proof.fold() == root;
}

}  // namespace hashrep
