#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hashrep/repstore.hpp"

namespace hashrep {

struct CandidateServer {
    ServerIdentity identity;
    Reputation reputation = 0;
    u128 cost = 0;
    uint64_t fee = 0;
    Bytes endpoint;
};

using VerdictCache = std::map<Digest256, bool>;

// Screening: evaluate ads, verify proofs-of-breach, and drop every server
// with a valid breach that was never settled. Verification verdicts are
// cached by proof digest so a client pays the cost once per proof.
inline std::vector<CandidateServer> screen(const std::vector<ServerAd>& ads,
                                           const std::vector<BreachRecordView>& breaches,
                                           const ReputationCostModel& model, const SimChain& chain,
                                           VerdictCache* cache = nullptr) {
    std::map<PublicKey, bool> disqualified;
    VerdictCache local;
    VerdictCache& verdicts = cache ? *cache : local;
    for (const auto& rec : breaches) {
        Digest256 digest = rec.proof.digest();
        auto it = verdicts.find(digest);
        bool valid = it != verdicts.end() ? it->second : verify_proof(rec.proof, chain).valid;
        verdicts[digest] = valid;
        if (!valid) continue;
        if (rec.revocation && is_revoked(rec.proof, *rec.revocation)) continue;
        disqualified[rec.proof.contract.server_id.public_key] = true;
    }
    std::vector<CandidateServer> out;
    for (const auto& ad : ads) {
        if (!verify_server_ad(ad)) continue;
        if (disqualified.count(ad.identity.public_key)) continue;
        CandidateServer c;
        c.identity = ad.identity;
        c.reputation = ad.identity.reputation();
        c.cost = reputation_cost(c.reputation, model);
        c.fee = ad.fee;
        c.endpoint = ad.endpoint;
        out.push_back(std::move(c));
    }
    return out;
}

struct SelectionParams {
    uint32_t k = 2;
    uint64_t value = 0;

    u128 threshold() const { return static_cast<u128>(k) * value; }
};

// Among candidates whose reputation cost clears the threshold, take the
// minimum fee; break fee ties toward the higher cost, and remaining ties
// toward the lexicographically smallest key so the choice is deterministic.
inline std::optional<CandidateServer> select_alg1(u128 threshold,
                                                  const std::vector<CandidateServer>& candidates) {
    const CandidateServer* best = nullptr;
    for (const auto& c : candidates) {
        if (c.cost < threshold) continue;
        if (!best || c.fee < best->fee || (c.fee == best->fee && c.cost > best->cost) ||
            (c.fee == best->fee && c.cost == best->cost && c.identity.public_key < best->identity.public_key))
            best = &c;
    }
    if (!best) return std::nullopt;
    return *best;
}

// Repeated Algorithm-1 rounds, removing each winner; for clients who hedge
// across n independent towers.
inline std::vector<CandidateServer> select_n(u128 threshold, std::vector<CandidateServer> candidates,
                                             size_t n) {
    std::vector<CandidateServer> chosen;
    while (chosen.size() < n) {
        auto winner = select_alg1(threshold, candidates);
        if (!winner) break;
        chosen.push_back(*winner);
        std::erase_if(candidates,
                      [&](const CandidateServer& c) { return c.identity.public_key == winner->identity.public_key; });
    }
    return chosen;
}

using SelectionMethod =
    std::function<std::optional<CandidateServer>(u128, const std::vector<CandidateServer>&)>;

struct SelectionCase {
    std::vector<CandidateServer> candidates;
    uint32_t k = 1;
    uint64_t value = 0;
};

struct PropertyViolation {
    size_t case_index = 0;
    std::string property;
    std::string detail;
};

struct PropertyReport {
    size_t cases = 0;
    size_t selections = 0;
    std::vector<PropertyViolation> violations;

    bool ok() const { return violations.empty(); }
};

// Checks a selection method for the three advisable properties:
//   reputation-aware: no eligible candidate strictly more reputable at the
//     same-or-lower fee was passed over;
//   fee-aware: no eligible candidate strictly cheaper at the same-or-higher
//     reputation was passed over;
//   damage-aware: the winner's cost strictly exceeds k times the value.
inline PropertyReport check_selection_properties(const SelectionMethod& method,
                                                 const std::vector<SelectionCase>& cases) {
    PropertyReport report;
    for (size_t i = 0; i < cases.size(); ++i) {
        const auto& c = cases[i];
        ++report.cases;
        u128 threshold = static_cast<u128>(c.k) * c.value;
        auto winner = method(threshold, c.candidates);
        if (!winner) continue;
        ++report.selections;
        for (const auto& other : c.candidates) {
            if (other.cost < threshold) continue;
            if (other.reputation > winner->reputation && other.fee <= winner->fee) {
                report.violations.push_back(
                    {i, "reputation-aware",
                     "passed over reputation " + std::to_string(other.reputation) + " fee " +
                         std::to_string(other.fee) + " for reputation " +
                         std::to_string(winner->reputation) + " fee " + std::to_string(winner->fee)});
                break;
            }
        }
        for (const auto& other : c.candidates) {
            if (other.cost < threshold) continue;
            if (other.fee < winner->fee && other.reputation >= winner->reputation) {
                report.violations.push_back(
                    {i, "fee-aware",
                     "passed over fee " + std::to_string(other.fee) + " for fee " +
                         std::to_string(winner->fee)});
                break;
            }
        }
        if (!(static_cast<u128>(c.k) * c.value < winner->cost)) {
            report.violations.push_back(
                {i, "damage-aware",
                 "selected cost " + u128_to_string(winner->cost) + " with k*value " +
                     u128_to_string(static_cast<u128>(c.k) * c.value)});
        }
    }
    return report;
}

// --- Payments ----------------------------------------------------------------

// Off-sim money: the directional channel a client prefunds toward a server
// is modeled as plain balances, since the payer side of a directional
// channel needs no monitoring.
class Ledger {
public:
    void deposit(const std::string& who, uint64_t amount) { balances_[who] += amount; }

    bool withdraw(const std::string& who, uint64_t amount) {
        auto it = balances_.find(who);
        if (it == balances_.end() || it->second < amount) return false;
        it->second -= amount;
        return true;
    }

    uint64_t balance(const std::string& who) const {
        auto it = balances_.find(who);
        return it == balances_.end() ? 0 : it->second;
    }

private:
    std::map<std::string, uint64_t> balances_;
};

// Hash-locked payment with HTLC semantics: funds move to the payee only by
// revealing the preimage of the lock, and exactly one of redeem/expire can
// ever happen. This single-transition rule is what the interleaving tests
// drive against.
class AtomicExchange {
public:
    enum class State : uint8_t { Offered, Redeemed, Expired };

    static std::optional<AtomicExchange> offer(Ledger& ledger, std::string payer, std::string payee,
                                               uint64_t amount, const Digest256& image) {
        if (!ledger.withdraw(payer, amount)) return std::nullopt;
        AtomicExchange ex;
        ex.payer_ = std::move(payer);
        ex.payee_ = std::move(payee);
        ex.amount_ = amount;
        ex.image_ = image;
        return ex;
    }

    bool redeem(Ledger& ledger, const Preimage& preimage) {
        if (state_ != State::Offered) return false;
        if (!hash_lock_matches(image_, preimage)) return false;
        state_ = State::Redeemed;
        revealed_ = preimage;
        ledger.deposit(payee_, amount_);
        return true;
    }

    bool expire(Ledger& ledger) {
        if (state_ != State::Offered) return false;
        state_ = State::Expired;
        ledger.deposit(payer_, amount_);
        return true;
    }

    State state() const { return state_; }
    const std::optional<Preimage>& revealed() const { return revealed_; }
    const Digest256& image() const { return image_; }
    uint64_t amount() const { return amount_; }
    const std::string& payer() const { return payer_; }
    const std::string& payee() const { return payee_; }

    // Exactly both or neither: payee paid iff preimage revealed.
    bool atomicity_holds() const {
        bool paid = state_ == State::Redeemed;
        return paid == revealed_.has_value();
    }

private:
    AtomicExchange() = default;

    std::string payer_;
    std::string payee_;
    uint64_t amount_ = 0;
    Digest256 image_;
    State state_ = State::Offered;
    std::optional<Preimage> revealed_;
};

struct PurchaseOutcome {
    bool active = false;
    bool fee_paid = false;
    AtomicExchange::State exchange_state = AtomicExchange::State::Offered;
};

// Purchase: the client escrows the fee against the server hash image; the
// server collects by revealing the preimage, which simultaneously hands the
// client what it needs to activate the contract.
inline PurchaseOutcome purchase(const Contract& contract, ContractState& state, Ledger& ledger,
                                const std::string& client, const std::string& server,
                                const std::optional<Preimage>& server_preimage) {
    PurchaseOutcome out;
    auto exchange = AtomicExchange::offer(ledger, client, server, contract.fee, contract.server_hash_image);
    if (!exchange) return out;
    if (server_preimage && exchange->redeem(ledger, *server_preimage)) {
        activate(contract, state, *exchange->revealed());
        out.active = state.status == ContractStatus::Active;
        out.fee_paid = true;
    } else {
        exchange->expire(ledger);
    }
    out.exchange_state = exchange->state();
    return out;
}

struct SettleOutcome {
    bool settled = false;
    std::optional<Bytes> revocation_body;
    AtomicExchange::State exchange_state = AtomicExchange::State::Offered;
};

// Settlement: the defaulting server escrows the agreed amount against the
// client hash image; the client collects by revealing its preimage, which is
// exactly the record that neutralizes the proof-of-breach.
inline SettleOutcome settle(const ProofOfBreach& proof, Ledger& ledger, const std::string& server,
                            const std::string& client, uint64_t amount,
                            const std::optional<Preimage>& client_preimage) {
    SettleOutcome out;
    auto exchange = AtomicExchange::offer(ledger, server, client, amount, proof.contract.client_hash_image);
    if (!exchange) return out;
    if (client_preimage && exchange->redeem(ledger, *client_preimage)) {
        out.settled = true;
        out.revocation_body = make_revocation_body(proof.digest(), *exchange->revealed());
    } else {
        exchange->expire(ledger);
    }
    out.exchange_state = exchange->state();
    return out;
}

// --- Bribery -----------------------------------------------------------------

struct BribedContract {
    uint64_t value = 0;
    uint64_t bribe = 0;
};

struct BribeScenario {
    u128 server_cost = 0;
    uint32_t k = 1;
    std::vector<BribedContract> contracts;
};

struct BribeVerdict {
    bool preconditions_ok = false;
    std::string violated_clause;
    u128 total_bribe = 0;
    bool safe = false;
};

// Adversarial-model check: with at most k standing bribes, each below its
// contract's value, and every contract selected damage-aware, the total
// bribe a server can collect stays below its reputation cost.
inline BribeVerdict bribe_safe(const BribeScenario& scenario) {
    BribeVerdict verdict;
    if (scenario.k < 1) {
        verdict.violated_clause = "k must be >= 1";
        return verdict;
    }
    if (scenario.contracts.size() > scenario.k) {
        verdict.violated_clause = "cardinality: more standing bribes than k";
        return verdict;
    }
    for (const auto& c : scenario.contracts) {
        if (c.bribe >= c.value) {
            verdict.violated_clause = "bribe-below-value: bribe must be less than the contract value";
            return verdict;
        }
        if (!(static_cast<u128>(scenario.k) * c.value < scenario.server_cost)) {
            verdict.violated_clause = "damage-aware: k * value must be below the server cost";
            return verdict;
        }
    }
    verdict.preconditions_ok = true;
    for (const auto& c : scenario.contracts) verdict.total_bribe += c.bribe;
    verdict.safe = verdict.total_bribe < scenario.server_cost;
    return verdict;
}

}  // namespace hashrep
