#pragma once

#include <map>
#include <optional>
#include <vector>

#include "hashrep/breach.hpp"

namespace hashrep {

enum class RecordKind : uint8_t { ServerAd = 1, Breach = 2, Revocation = 3 };

inline const char* to_string(RecordKind k) {
    switch (k) {
        case RecordKind::ServerAd: return "server-ad";
        case RecordKind::Breach: return "breach";
        case RecordKind::Revocation: return "revocation";
    }
    return "?";
}

struct StoredRecord {
    RecordKind kind = RecordKind::ServerAd;
    ServerIdentity subject;
    Bytes body;
    Reputation priority = 0;
    uint64_t received_at = 0;
    // Settlement annotation on a breach record; set by an accepted revocation.
    std::optional<Preimage> revocation;

    Digest256 body_digest() const { return sha256(body); }
};

struct StoreConfig {
    // Capacity applies per record pool: ads and breaches never displace
    // each other.
    size_t capacity = 1024;
    uint32_t spam_ticket_bits = 12;
};

enum class SubmitStatus : uint8_t { Accepted, Duplicate, BadTicket, InvalidRecord, StoreFullLowPriority };

inline const char* to_string(SubmitStatus s) {
    switch (s) {
        case SubmitStatus::Accepted: return "accepted";
        case SubmitStatus::Duplicate: return "duplicate";
        case SubmitStatus::BadTicket: return "bad-ticket";
        case SubmitStatus::InvalidRecord: return "invalid-record";
        case SubmitStatus::StoreFullLowPriority: return "store-full-low-priority";
    }
    return "?";
}

struct SubmitResult {
    SubmitStatus status = SubmitStatus::InvalidRecord;
    Reputation priority = 0;
    std::optional<Digest256> evicted;

    bool accepted() const { return status == SubmitStatus::Accepted || status == SubmitStatus::Duplicate; }
};

// Wire format of a storage submission (tag 0x04): record kind, body, then
// the anti-spam ticket. The ticket's proof-of-work covers every byte before
// it, so a ticket cannot be reused for a different record.
inline Bytes submission_prefix_bytes(RecordKind kind, std::span<const uint8_t> body) {
    Writer w;
    w.put_u8(doc_tag::storage_submission);
    w.put_u8(static_cast<uint8_t>(kind));
    w.put_bytes(body);
    return w.take();
}

inline Bytes serialize_submission(RecordKind kind, std::span<const uint8_t> body, uint64_t ticket) {
    Writer w;
    w.put_raw(submission_prefix_bytes(kind, body));
    w.put_u64(ticket);
    return w.take();
}

struct Submission {
    RecordKind kind = RecordKind::ServerAd;
    Bytes body;
    uint64_t ticket = 0;
};

inline std::optional<Submission> parse_submission(std::span<const uint8_t> bytes) {
    Reader r(bytes);
    if (r.get_u8() != doc_tag::storage_submission) return std::nullopt;
    uint8_t kind = r.get_u8();
    if (kind < 1 || kind > 3) return std::nullopt;
    Submission s;
    s.kind = static_cast<RecordKind>(kind);
    s.body = r.get_bytes();
    s.ticket = r.get_u64();
    if (!r.done()) return std::nullopt;
    return s;
}

inline std::optional<uint64_t> mine_ticket(RecordKind kind, std::span<const uint8_t> body, uint32_t bits,
                                           uint64_t start_nonce = 0,
                                           uint64_t max_attempts = std::numeric_limits<uint64_t>::max()) {
    return mine_prefix(submission_prefix_bytes(kind, body), bits, start_nonce, max_attempts);
}

inline bool ticket_valid(RecordKind kind, std::span<const uint8_t> body, uint64_t ticket, uint32_t bits) {
    Bytes prefix = submission_prefix_bytes(kind, body);
    Writer w;
    w.put_raw(prefix);
    w.put_u64(ticket);
    return leading_zero_bits(sha256(w.bytes())) >= bits;
}

// Revocation record body: digest of the breach proof document it settles,
// followed by the client preimage.
inline Bytes make_revocation_body(const Digest256& proof_digest, const Preimage& client_preimage) {
    Writer w;
    w.put_digest(proof_digest);
    w.put_array(client_preimage);
    return w.take();
}

struct BreachRecordView {
    ProofOfBreach proof;
    std::optional<Preimage> revocation;
};

// A single storage node. Records are prioritized by the reputation of the
// server they are about: a full pool only admits a record that strictly
// outranks the current minimum, and the minimum is evicted to make room.
// Ties keep the incumbent.
class StorageNode {
public:
    struct Stats {
        uint64_t submissions = 0;
        uint64_t bad_tickets = 0;
        uint64_t invalid_records = 0;
        uint64_t rejected_low_priority = 0;
        uint64_t duplicates = 0;
        uint64_t accepted = 0;
        uint64_t evictions = 0;
        // Incremented whenever a record body is actually verified; the
        // ticket gate must reject before this work happens.
        uint64_t record_verifications = 0;
    };

    explicit StorageNode(StoreConfig config, const SimChain* chain = nullptr)
        : config_(config), chain_(chain) {
        if (config_.capacity == 0) throw std::invalid_argument("store capacity must be >= 1");
    }

    const StoreConfig& config() const { return config_; }
    const Stats& stats() const { return stats_; }

    SubmitResult submit(RecordKind kind, std::span<const uint8_t> body, uint64_t ticket) {
        ++stats_.submissions;
        if (!ticket_valid(kind, body, ticket, config_.spam_ticket_bits)) {
            ++stats_.bad_tickets;
            return {SubmitStatus::BadTicket, 0, std::nullopt};
        }
        switch (kind) {
            case RecordKind::ServerAd: return submit_ad(body);
            case RecordKind::Breach: return submit_breach(body);
            case RecordKind::Revocation: return submit_revocation(body);
        }
        return {SubmitStatus::InvalidRecord, 0, std::nullopt};
    }

    SubmitResult submit_wire(std::span<const uint8_t> submission_bytes) {
        auto s = parse_submission(submission_bytes);
        if (!s) {
            ++stats_.submissions;
            ++stats_.invalid_records;
            return {SubmitStatus::InvalidRecord, 0, std::nullopt};
        }
        return submit(s->kind, s->body, s->ticket);
    }

    std::vector<ServerAd> query_ads() const {
        std::vector<ServerAd> out;
        out.reserve(ads_.size());
        for (const auto& rec : ads_) {
            auto ad = ServerAd::parse(rec.body);
            if (ad) out.push_back(std::move(*ad));
        }
        return out;
    }

    std::vector<BreachRecordView> query_breaches(const PublicKey& server_key) const {
        std::vector<BreachRecordView> out;
        for (const auto& rec : breaches_) {
            if (rec.subject.public_key != server_key) continue;
            auto proof = ProofOfBreach::parse(rec.body);
            if (proof) out.push_back({std::move(*proof), rec.revocation});
        }
        return out;
    }

    std::vector<BreachRecordView> query_all_breaches() const {
        std::vector<BreachRecordView> out;
        for (const auto& rec : breaches_) {
            auto proof = ProofOfBreach::parse(rec.body);
            if (proof) out.push_back({std::move(*proof), rec.revocation});
        }
        return out;
    }

    const std::vector<StoredRecord>& ads() const { return ads_; }
    const std::vector<StoredRecord>& breaches() const { return breaches_; }

    bool contains(const Digest256& body_digest) const { return index_.count(body_digest) > 0; }
    size_t size() const { return ads_.size() + breaches_.size(); }

    struct FlushCost {
        uint64_t capacity = 0;
        Reputation r_max = 0;

        // capacity * 2^r_max expected hashes to displace everything stored.
        u128 expected_hashes() const {
            if (capacity == 0) return 0;
            u128 c = capacity;
            constexpr u128 max = ~u128{0};
            if (c > (max >> r_max)) throw std::overflow_error("flush cost overflow");
            return c << r_max;
        }
    };

    FlushCost flush_cost() const {
        Reputation r_max = 0;
        for (const auto& rec : ads_) r_max = std::max(r_max, rec.priority);
        for (const auto& rec : breaches_) r_max = std::max(r_max, rec.priority);
        return {static_cast<uint64_t>(config_.capacity), r_max};
    }

private:
    SubmitResult submit_ad(std::span<const uint8_t> body) {
        if (auto dup = check_duplicate(body)) return *dup;
        ++stats_.record_verifications;
        auto ad = ServerAd::parse(body);
        if (!ad || !verify_server_ad(*ad)) {
            ++stats_.invalid_records;
            return {SubmitStatus::InvalidRecord, 0, std::nullopt};
        }
        StoredRecord rec;
        rec.kind = RecordKind::ServerAd;
        rec.subject = ad->identity;
        rec.body = Bytes(body.begin(), body.end());
        rec.priority = ad->identity.reputation();
        return store_into(ads_, std::move(rec));
    }

    SubmitResult submit_breach(std::span<const uint8_t> body) {
        if (auto dup = check_duplicate(body)) return *dup;
        ++stats_.record_verifications;
        auto proof = ProofOfBreach::parse(body);
        if (!proof || !chain_ || !verify_proof(*proof, *chain_).valid) {
            ++stats_.invalid_records;
            return {SubmitStatus::InvalidRecord, 0, std::nullopt};
        }
        StoredRecord rec;
        rec.kind = RecordKind::Breach;
        rec.subject = proof->contract.server_id;
        rec.body = Bytes(body.begin(), body.end());
        rec.priority = rec.subject.reputation();
        return store_into(breaches_, std::move(rec));
    }

    // Revocations do not occupy a slot: they annotate the breach they
    // settle and share its priority. A settled breach stays stored so the
    // neutral outcome is visible to screening.
    SubmitResult submit_revocation(std::span<const uint8_t> body) {
        ++stats_.record_verifications;
        Reader r(body);
        Digest256 proof_digest = r.get_digest();
        Preimage preimage = r.get_array<32>();
        if (!r.done()) {
            ++stats_.invalid_records;
            return {SubmitStatus::InvalidRecord, 0, std::nullopt};
        }
        for (auto& rec : breaches_) {
            if (rec.body_digest() != proof_digest) continue;
            auto proof = ProofOfBreach::parse(rec.body);
            if (!proof || !is_revoked(*proof, preimage)) break;
            bool already = rec.revocation.has_value();
            rec.revocation = preimage;
            if (already) {
                ++stats_.duplicates;
                return {SubmitStatus::Duplicate, rec.priority, std::nullopt};
            }
            ++stats_.accepted;
            return {SubmitStatus::Accepted, rec.priority, std::nullopt};
        }
        ++stats_.invalid_records;
        return {SubmitStatus::InvalidRecord, 0, std::nullopt};
    }

    std::optional<SubmitResult> check_duplicate(std::span<const uint8_t> body) {
        Digest256 digest = sha256(body);
        auto it = index_.find(digest);
        if (it == index_.end()) return std::nullopt;
        ++stats_.duplicates;
        return SubmitResult{SubmitStatus::Duplicate, it->second, std::nullopt};
    }

    SubmitResult store_into(std::vector<StoredRecord>& pool, StoredRecord rec) {
        std::optional<Digest256> evicted;
        if (pool.size() >= config_.capacity) {
            size_t victim = 0;
            for (size_t i = 1; i < pool.size(); ++i) {
                // Lowest priority loses; among equals the newest arrival goes.
                if (pool[i].priority < pool[victim].priority ||
                    (pool[i].priority == pool[victim].priority &&
                     pool[i].received_at > pool[victim].received_at))
                    victim = i;
            }
            if (rec.priority <= pool[victim].priority) {
                ++stats_.rejected_low_priority;
                return {SubmitStatus::StoreFullLowPriority, rec.priority, std::nullopt};
            }
            evicted = pool[victim].body_digest();
            index_.erase(*evicted);
            ++stats_.evictions;
            pool.erase(pool.begin() + static_cast<ptrdiff_t>(victim));
        }
        rec.received_at = next_seq_++;
        Reputation priority = rec.priority;
        index_[rec.body_digest()] = priority;
        pool.push_back(std::move(rec));
        ++stats_.accepted;
        return {SubmitStatus::Accepted, priority, evicted};
    }

    StoreConfig config_;
    const SimChain* chain_;
    std::vector<StoredRecord> ads_;
    std::vector<StoredRecord> breaches_;
    std::map<Digest256, Reputation> index_;
    uint64_t next_seq_ = 0;
    Stats stats_;
};

}  // namespace hashrep
