#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hashrep/contract.hpp"
#include "hashrep/rng.hpp"

using namespace hashrep;

namespace {

struct Fixture {
    Rng rng{0xc0ffee};
    KeyPair server_keys = keygen(rng.bytes<32>());
    Preimage server_preimage = rng.bytes<32>();
    Preimage client_preimage = rng.bytes<32>();
    Contract contract;

    Fixture() {
        contract.market_id = MarketId::from_string("wt-market");
        contract.server_id = {server_keys.public_key, contract.market_id, 99};
        contract.txid_prefixes.push_back(rng.bytes<16>());
        Bytes blob(40);
        rng.fill(blob);
        contract.encrypted_jtxs.push_back(blob);
        contract.monitor_start = 5;
        contract.monitor_end = 50;
        contract.dispute_period = 6;
        contract.server_hash_image = hash_lock_image(server_preimage);
        contract.client_hash_image = hash_lock_image(client_preimage);
        contract.value = 1000;
        contract.fee = 10;
        auto signed_contract = sign_contract(contract, server_keys.secret_key);
        REQUIRE(signed_contract.has_value());
        contract = *signed_contract;
    }
};

}  // namespace

TEST_CASE("sign and verify") {
    Fixture f;
    CHECK(verify_contract_signature(f.contract));
    CHECK(f.contract.well_formed());

    // Signing with a key that does not match the embedded server id fails.
    KeyPair other = keygen(f.rng.bytes<32>());
    CHECK_FALSE(sign_contract(f.contract, other.secret_key).has_value());

    // A signature from a different key does not verify.
    Contract forged = f.contract;
    forged.signature = sign_message(forged.body_bytes(), other.secret_key);
    CHECK_FALSE(verify_contract_signature(forged));
}

TEST_CASE("any flipped body byte breaks the signature") {
    Fixture f;
    Bytes body = f.contract.body_bytes();
    Rng rng(0xf11b);
    for (int i = 0; i < 100; ++i) {
        Bytes mutated = body;
        size_t pos = rng.below(mutated.size());
        uint8_t bit = static_cast<uint8_t>(1u << rng.below(8));
        mutated[pos] ^= bit;
        CHECK_FALSE(verify_signature(mutated, f.contract.signature, f.server_keys.public_key));
    }
}

TEST_CASE("serialized contract is bit-stable") {
    Fixture f;
    Bytes once = f.contract.serialize();
    auto parsed = Contract::parse(once);
    REQUIRE(parsed.has_value());
    CHECK(parsed->serialize() == once);
    CHECK(verify_contract_signature(*parsed));
}

TEST_CASE("activation requires the exact server preimage") {
    Fixture f;
    ContractState state{ContractStatus::Signed, std::nullopt, std::nullopt};
    SUBCASE("correct preimage activates") {
        CHECK_FALSE(activate(f.contract, state, f.server_preimage).has_value());
        CHECK(state.status == ContractStatus::Active);
        // Re-activation is a wrong-state error.
        auto err = activate(f.contract, state, f.server_preimage);
        REQUIRE(err.has_value());
        CHECK(*err == ContractError::WrongState);
    }
    SUBCASE("one flipped bit is rejected") {
        Preimage wrong = f.server_preimage;
        wrong[7] ^= 0x20;
        auto err = activate(f.contract, state, wrong);
        REQUIRE(err.has_value());
        CHECK(*err == ContractError::PreimageMismatch);
        CHECK(state.status == ContractStatus::Signed);
    }
    SUBCASE("unsigned contract cannot activate") {
        ContractState fresh;
        auto err = activate(f.contract, fresh, f.server_preimage);
        REQUIRE(err.has_value());
        CHECK(*err == ContractError::WrongState);
    }
}

TEST_CASE("termination") {
    Fixture f;
    ContractState state{ContractStatus::Signed, std::nullopt, std::nullopt};
    REQUIRE_FALSE(activate(f.contract, state, f.server_preimage).has_value());

    SUBCASE("server preimage cannot terminate") {
        auto err = terminate(f.contract, state, f.server_preimage);
        REQUIRE(err.has_value());
        CHECK(*err == ContractError::PreimageMismatch);
        CHECK(state.status == ContractStatus::Active);
    }
    SUBCASE("client preimage terminates, idempotently") {
        CHECK_FALSE(terminate(f.contract, state, f.client_preimage).has_value());
        CHECK(state.status == ContractStatus::Terminated);
        CHECK_FALSE(terminate(f.contract, state, f.client_preimage).has_value());
        CHECK(state.status == ContractStatus::Terminated);
    }
    SUBCASE("termination straight from signed") {
        ContractState fresh{ContractStatus::Signed, std::nullopt, std::nullopt};
        CHECK_FALSE(terminate(f.contract, fresh, f.client_preimage).has_value());
        CHECK(fresh.status == ContractStatus::Terminated);
    }
}

TEST_CASE("hash locks never open on wrong preimages") {
    Fixture f;
    Rng rng(0x10cc);
    for (int i = 0; i < 1000; ++i) {
        Preimage random = rng.bytes<32>();
        CHECK_FALSE(hash_lock_matches(f.contract.server_hash_image, random));
        CHECK_FALSE(hash_lock_matches(f.contract.client_hash_image, random));
    }
}

TEST_CASE("debug rendering mentions the key fields") {
    Fixture f;
    std::string text = debug_string(f.contract);
    CHECK(text.find("monitor: [5, 50]") != std::string::npos);
    CHECK(text.find("value: 1000") != std::string::npos);
}
