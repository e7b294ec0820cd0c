#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "breach_fixture.hpp"
#include "hashrep/market.hpp"
#include "hashrep/rng.hpp"

using namespace hashrep;

namespace {

CandidateServer synthetic(u128 cost, uint64_t fee, uint8_t key_byte, Reputation rep = 0) {
    CandidateServer c;
    c.identity.public_key.fill(key_byte);
    c.identity.market_id = MarketId::from_string("m");
    c.cost = cost;
    c.fee = fee;
    c.reputation = rep;
    return c;
}

// Independent Algorithm-1 oracle: a candidate wins iff no other eligible
// candidate beats it under (fee asc, cost desc, key asc).
std::optional<CandidateServer> brute_force_alg1(u128 threshold, const std::vector<CandidateServer>& set) {
    auto beats = [](const CandidateServer& a, const CandidateServer& b) {
        if (a.fee != b.fee) return a.fee < b.fee;
        if (a.cost != b.cost) return a.cost > b.cost;
        return a.identity.public_key < b.identity.public_key;
    };
    std::optional<CandidateServer> winner;
    for (const auto& c : set) {
        if (c.cost < threshold) continue;
        bool beaten = false;
        for (const auto& other : set) {
            if (&other == &c || other.cost < threshold) continue;
            if (beats(other, c)) beaten = true;
        }
        if (!beaten) winner = c;
    }
    return winner;
}

}  // namespace

TEST_CASE("worked selection example") {
    std::vector<CandidateServer> set = {
        synthetic(100, 5, 1),
        synthetic(120, 5, 2),
        synthetic(90, 1, 3),
    };
    auto winner = select_alg1(95, set);
    REQUIRE(winner.has_value());
    CHECK(winner->cost == 120);
    CHECK(winner->fee == 5);
    auto oracle = brute_force_alg1(95, set);
    REQUIRE(oracle.has_value());
    CHECK(oracle->identity.public_key == winner->identity.public_key);
}

TEST_CASE("no eligible candidate") {
    std::vector<CandidateServer> set = {synthetic(10, 1, 1), synthetic(20, 1, 2)};
    CHECK_FALSE(select_alg1(95, set).has_value());
    CHECK_FALSE(select_alg1(1, {}).has_value());
}

TEST_CASE("single eligible candidate wins") {
    std::vector<CandidateServer> set = {synthetic(10, 1, 1), synthetic(200, 9, 2)};
    auto winner = select_alg1(95, set);
    REQUIRE(winner.has_value());
    CHECK(winner->cost == 200);
}

TEST_CASE("selection agrees with the brute-force oracle on random sets") {
    Rng rng(0xa1);
    for (int round = 0; round < 500; ++round) {
        std::vector<CandidateServer> set;
        size_t n = 1 + rng.below(8);
        for (size_t i = 0; i < n; ++i)
            set.push_back(synthetic(rng.below(200), rng.below(6), static_cast<uint8_t>(rng.below(250))));
        u128 threshold = rng.below(150);
        auto got = select_alg1(threshold, set);
        auto expected = brute_force_alg1(threshold, set);
        REQUIRE(got.has_value() == expected.has_value());
        if (got) {
            CHECK(got->identity.public_key == expected->identity.public_key);
            CHECK(got->cost == expected->cost);
            CHECK(got->fee == expected->fee);
        }
    }
}

TEST_CASE("select_n removes each winner and repeats") {
    std::vector<CandidateServer> set = {
        synthetic(100, 5, 1),
        synthetic(120, 5, 2),
        synthetic(110, 7, 3),
        synthetic(10, 1, 4),
    };
    auto chosen = select_n(50, set, 3);
    REQUIRE(chosen.size() == 3);
    CHECK(chosen[0].cost == 120);  // fee tie at 5 goes to the higher cost
    CHECK(chosen[1].cost == 100);
    CHECK(chosen[2].cost == 110);
    CHECK(select_n(50, set, 9).size() == 3);  // the sub-threshold candidate never qualifies
}

namespace {

// Candidate sets whose costs are exact powers of two and whose values are
// odd: k*value can never equal a cost, so threshold boundary cases cannot
// blur the strict damage-aware check.
std::vector<SelectionCase> random_cases(size_t count, uint64_t seed) {
    Rng rng(seed);
    ReputationCostModel model{1, 0};
    std::vector<SelectionCase> cases;
    for (size_t i = 0; i < count; ++i) {
        SelectionCase c;
        c.k = 1 + static_cast<uint32_t>(rng.below(4));
        c.value = 3 + 2 * rng.below(2000);  // odd, >= 3
        size_t n = 1 + rng.below(10);
        for (size_t j = 0; j < n; ++j) {
            Reputation r = static_cast<Reputation>(4 + rng.below(37));  // cost 2^4 .. 2^40
            CandidateServer cand = synthetic(reputation_cost(r, model), 1 + rng.below(50),
                                             static_cast<uint8_t>(rng.below(256)), r);
            c.candidates.push_back(cand);
        }
        cases.push_back(std::move(c));
    }
    return cases;
}

}  // namespace

TEST_CASE("select_alg1 satisfies all three properties on 1000 random sets") {
    auto cases = random_cases(1000, 0x5e1ec7);
    PropertyReport report = check_selection_properties(select_alg1, cases);
    CHECK(report.cases == 1000);
    CHECK(report.selections > 200);
    CHECK(report.ok());
    for (const auto& v : report.violations) {
        CAPTURE(v.property);
        CAPTURE(v.detail);
        CHECK(false);
    }
}

TEST_CASE("a fee-blind method is caught with a witness") {
    SelectionMethod fee_blind = [](u128 threshold,
                                   const std::vector<CandidateServer>& set) -> std::optional<CandidateServer> {
        const CandidateServer* best = nullptr;
        for (const auto& c : set) {
            if (c.cost < threshold) continue;
            if (!best || c.cost > best->cost) best = &c;
        }
        if (!best) return std::nullopt;
        return *best;
    };
    // Two eligible candidates of equal reputation; the pricier one has the
    // higher cost, so a cost-greedy method picks it over the cheaper quote.
    SelectionCase trap;
    trap.k = 1;
    trap.value = 3;
    trap.candidates = {synthetic(1 << 10, 9, 1, 10), synthetic(1 << 9, 2, 2, 10)};
    PropertyReport report = check_selection_properties(fee_blind, {trap});
    REQUIRE_FALSE(report.ok());
    CHECK(report.violations[0].property == "fee-aware");
}

TEST_CASE("doubling k shrinks the eligible set monotonically") {
    auto cases = random_cases(100, 0xdb1);
    for (const auto& c : cases) {
        auto eligible = [&](uint32_t k) {
            std::set<std::string> keys;
            u128 threshold = static_cast<u128>(k) * c.value;
            for (const auto& cand : c.candidates)
                if (cand.cost >= threshold) keys.insert(to_hex(std::span(cand.identity.public_key)));
            return keys;
        };
        auto base = eligible(c.k);
        auto doubled = eligible(2 * c.k);
        for (const auto& key : doubled) CHECK(base.count(key) == 1);
    }
}

TEST_CASE("screening discards only servers with a valid, unrevoked breach") {
    testfix::BreachFixture f;
    ProofOfBreach proof = f.swept_breach_proof();
    ReputationCostModel model{1, 0};

    ServerAd guilty = make_server_ad(f.contract.server_id, 5, to_bytes("g"), f.tower_keys.secret_key);
    Rng rng(0x5c);
    KeyPair clean_keys = keygen(rng.bytes<32>());
    auto clean_nonce = mine(clean_keys.public_key, to_bytes("wt"), 6);
    REQUIRE(clean_nonce.has_value());
    ServerIdentity clean_id{clean_keys.public_key, MarketId::from_string("wt"), *clean_nonce};
    ServerAd clean = make_server_ad(clean_id, 7, to_bytes("c"), clean_keys.secret_key);

    SUBCASE("no breaches: every well-signed ad passes") {
        auto candidates = screen({guilty, clean}, {}, model, f.chain);
        CHECK(candidates.size() == 2);
    }
    SUBCASE("valid breach: discarded") {
        auto candidates = screen({guilty, clean}, {{proof, std::nullopt}}, model, f.chain);
        REQUIRE(candidates.size() == 1);
        CHECK(candidates[0].identity.public_key == clean_id.public_key);
    }
    SUBCASE("revoked breach: retained") {
        auto candidates = screen({guilty, clean}, {{proof, f.client_preimage}}, model, f.chain);
        CHECK(candidates.size() == 2);
    }
    SUBCASE("invalid breach: ignored") {
        ProofOfBreach bad = proof;
        bad.server_preimage = Preimage{};
        auto candidates = screen({guilty, clean}, {{bad, std::nullopt}}, model, f.chain);
        CHECK(candidates.size() == 2);
    }
    SUBCASE("tampered ad: dropped") {
        ServerAd forged = guilty;
        forged.fee += 1;
        auto candidates = screen({forged, clean}, {}, model, f.chain);
        REQUIRE(candidates.size() == 1);
        CHECK(candidates[0].identity.public_key == clean_id.public_key);
    }
    SUBCASE("verdicts are cached by proof digest") {
        VerdictCache cache;
        (void)screen({guilty, clean}, {{proof, std::nullopt}}, model, f.chain, &cache);
        CHECK(cache.size() == 1);
        CHECK(cache.begin()->second == true);
        (void)screen({guilty, clean}, {{proof, std::nullopt}}, model, f.chain, &cache);
        CHECK(cache.size() == 1);
    }
}

TEST_CASE("purchase outcomes") {
    testfix::BreachFixture f;
    Ledger ledger;
    ledger.deposit("alice", 100);
    ContractState state{ContractStatus::Signed, std::nullopt, std::nullopt};

    SUBCASE("honest server redeems: contract active, fee moved") {
        PurchaseOutcome out = purchase(f.contract, state, ledger, "alice", "tower", f.server_preimage);
        CHECK(out.active);
        CHECK(out.fee_paid);
        CHECK(state.status == ContractStatus::Active);
        CHECK(ledger.balance("alice") == 100 - f.contract.fee);
        CHECK(ledger.balance("tower") == f.contract.fee);
    }
    SUBCASE("server never redeems: exchange expires, nothing moves") {
        PurchaseOutcome out = purchase(f.contract, state, ledger, "alice", "tower", std::nullopt);
        CHECK_FALSE(out.active);
        CHECK_FALSE(out.fee_paid);
        CHECK(out.exchange_state == AtomicExchange::State::Expired);
        CHECK(state.status == ContractStatus::Signed);
        CHECK(ledger.balance("alice") == 100);
        CHECK(ledger.balance("tower") == 0);
    }
    SUBCASE("wrong preimage cannot redeem") {
        PurchaseOutcome out = purchase(f.contract, state, ledger, "alice", "tower", f.client_preimage);
        CHECK_FALSE(out.active);
        CHECK_FALSE(out.fee_paid);
        CHECK(ledger.balance("alice") == 100);
    }
    SUBCASE("client cannot fund the fee") {
        Ledger poor;
        PurchaseOutcome out = purchase(f.contract, state, poor, "alice", "tower", f.server_preimage);
        CHECK_FALSE(out.active);
        CHECK_FALSE(out.fee_paid);
    }
}

TEST_CASE("settlement releases the client preimage for payment") {
    testfix::BreachFixture f;
    ProofOfBreach proof = f.swept_breach_proof();
    Ledger ledger;
    ledger.deposit("tower", 50);

    SUBCASE("settled: revocation record produced") {
        SettleOutcome out = settle(proof, ledger, "tower", "alice", 20, f.client_preimage);
        CHECK(out.settled);
        REQUIRE(out.revocation_body.has_value());
        CHECK(ledger.balance("alice") == 20);
        CHECK(ledger.balance("tower") == 30);
        // The produced record revokes exactly this proof.
        Reader r{std::span<const uint8_t>(*out.revocation_body)};
        CHECK(r.get_digest() == proof.digest());
        CHECK(r.get_array<32>() == f.client_preimage);
    }
    SUBCASE("client refuses: exchange expires, proof stays live") {
        SettleOutcome out = settle(proof, ledger, "tower", "alice", 20, std::nullopt);
        CHECK_FALSE(out.settled);
        CHECK(out.exchange_state == AtomicExchange::State::Expired);
        CHECK(ledger.balance("tower") == 50);
        CHECK(verify_proof(proof, f.chain).valid);
    }
}

namespace {

struct ExchangeWorld {
    Ledger ledger;
    std::optional<AtomicExchange> exchange;
    uint64_t initial_total = 0;

    explicit ExchangeWorld(const Digest256& image) {
        ledger.deposit("client", 60);
        ledger.deposit("server", 40);
        initial_total = 100;
        exchange = AtomicExchange::offer(ledger, "client", "server", 25, image);
        REQUIRE(exchange.has_value());
    }

    uint64_t visible_total() const {
        uint64_t escrow = exchange->state() == AtomicExchange::State::Offered ? exchange->amount() : 0;
        return ledger.balance("client") + ledger.balance("server") + escrow;
    }

    void check_consistent() const {
        CHECK(visible_total() == initial_total);
        CHECK(exchange->atomicity_holds());
        bool paid = ledger.balance("server") == 40 + exchange->amount();
        CHECK(paid == (exchange->state() == AtomicExchange::State::Redeemed));
        CHECK(paid == exchange->revealed().has_value());
    }
};

using Op = std::function<void(ExchangeWorld&)>;

void for_each_interleaving(const std::vector<Op>& a, const std::vector<Op>& b,
                           const std::function<void(const std::vector<const Op*>&)>& visit,
                           std::vector<const Op*>& current, size_t ia, size_t ib) {
    if (ia == a.size() && ib == b.size()) {
        visit(current);
        return;
    }
    if (ia < a.size()) {
        current.push_back(&a[ia]);
        for_each_interleaving(a, b, visit, current, ia + 1, ib);
        current.pop_back();
    }
    if (ib < b.size()) {
        current.push_back(&b[ib]);
        for_each_interleaving(a, b, visit, current, ia, ib + 1);
        current.pop_back();
    }
}

}  // namespace

TEST_CASE("exhaustive interleavings preserve exchange atomicity") {
    Rng rng(0x41);
    Preimage preimage = rng.bytes<32>();
    Preimage wrong = rng.bytes<32>();
    Digest256 image = hash_lock_image(preimage);

    Op redeem = [&](ExchangeWorld& w) { w.exchange->redeem(w.ledger, preimage); };
    Op redeem_wrong = [&](ExchangeWorld& w) { w.exchange->redeem(w.ledger, wrong); };
    Op expire = [&](ExchangeWorld& w) { w.exchange->expire(w.ledger); };

    std::vector<std::vector<Op>> server_scripts = {
        {redeem},
        {redeem_wrong},
        {redeem, redeem},
        {redeem_wrong, redeem},
        {redeem, redeem_wrong},
    };
    std::vector<std::vector<Op>> client_scripts = {
        {expire},
        {expire, expire},
    };

    size_t runs = 0;
    for (const auto& server_ops : server_scripts) {
        for (const auto& client_ops : client_scripts) {
            std::vector<const Op*> current;
            for_each_interleaving(
                server_ops, client_ops,
                [&](const std::vector<const Op*>& order) {
                    ExchangeWorld w(image);
                    w.check_consistent();
                    for (const Op* op : order) {
                        (*op)(w);
                        w.check_consistent();
                    }
                    // Terminal: the exchange resolved one way or the other.
                    CHECK(w.exchange->state() != AtomicExchange::State::Offered);
                    ++runs;
                },
                current, 0, 0);
        }
    }
    CHECK(runs > 30);  // exhaustive over all schedules of every script pair
}

TEST_CASE("bribe safety") {
    SUBCASE("worked example") {
        BribeScenario s{90, 3, {{10, 9}, {20, 19}, {25, 24}}};
        BribeVerdict v = bribe_safe(s);
        CHECK(v.preconditions_ok);
        CHECK(v.total_bribe == 52);
        CHECK(v.safe);
    }
    SUBCASE("no standing bribes") {
        BribeScenario s{7, 2, {}};
        BribeVerdict v = bribe_safe(s);
        CHECK(v.preconditions_ok);
        CHECK(v.total_bribe == 0);
        CHECK(v.safe);
    }
    SUBCASE("too many standing bribes") {
        BribeScenario s{1000, 2, {{5, 1}, {5, 1}, {5, 1}}};
        BribeVerdict v = bribe_safe(s);
        CHECK_FALSE(v.preconditions_ok);
        CHECK(v.violated_clause.find("cardinality") != std::string::npos);
    }
    SUBCASE("bribe at or above the value") {
        BribeScenario s{1000, 2, {{5, 5}}};
        CHECK_FALSE(bribe_safe(s).preconditions_ok);
    }
    SUBCASE("not damage-aware") {
        BribeScenario s{10, 2, {{5, 1}}};
        BribeVerdict v = bribe_safe(s);
        CHECK_FALSE(v.preconditions_ok);
        CHECK(v.violated_clause.find("damage-aware") != std::string::npos);
    }
    SUBCASE("exhaustive at small scale: no counterexamples") {
        for (uint32_t k = 1; k <= 2; ++k) {
            for (uint64_t cost = 1; cost <= 16; ++cost) {
                uint64_t val_max = (cost - 1) / k;
                std::vector<BribedContract> contracts;
                std::function<void(uint64_t)> recurse = [&](uint64_t min_val) {
                    BribeScenario s{cost, k, contracts};
                    BribeVerdict v = bribe_safe(s);
                    CHECK(v.preconditions_ok);
                    CHECK(v.safe);
                    if (contracts.size() == k) return;
                    for (uint64_t val = min_val; val <= val_max; ++val) {
                        for (uint64_t brb = 0; brb < val; ++brb) {
                            contracts.push_back({val, brb});
                            recurse(val);
                            contracts.pop_back();
                        }
                    }
                };
                recurse(1);
            }
        }
    }
}
