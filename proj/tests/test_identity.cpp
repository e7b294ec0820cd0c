#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "hashrep/identity.hpp"
#include "hashrep/rng.hpp"

using namespace hashrep;

TEST_CASE("keygen is deterministic") {
    Seed32 seed{};
    seed[0] = 0x11;
    KeyPair a = keygen(seed);
    KeyPair b = keygen(seed);
    CHECK(a.public_key == b.public_key);
    CHECK(a.secret_key == b.secret_key);
    CHECK(public_key_of(a.secret_key) == a.public_key);
}

TEST_CASE("distinct seeds give distinct keys") {
    Rng rng(0xbeef);
    std::set<PublicKey> keys;
    for (int i = 0; i < 10000; ++i) {
        KeyPair kp = keygen(rng.bytes<32>());
        CHECK(keys.insert(kp.public_key).second);
    }
}

TEST_CASE("sign then verify round trips for arbitrary messages") {
    Rng rng(0xcafe);
    KeyPair kp = keygen(rng.bytes<32>());
    for (int i = 0; i < 50; ++i) {
        Bytes msg(rng.below(200));
        rng.fill(msg);
        Signature sig = sign_message(msg, kp.secret_key);
        CHECK(verify_signature(msg, sig, kp.public_key));
        KeyPair other = keygen(rng.bytes<32>());
        CHECK_FALSE(verify_signature(msg, sig, other.public_key));
    }
}

TEST_CASE("market id bounds") {
    CHECK_FALSE(MarketId::make({}).has_value());
    CHECK(MarketId::make(Bytes(1, 0)).has_value());
    CHECK(MarketId::make(Bytes(64, 0)).has_value());
    CHECK_FALSE(MarketId::make(Bytes(65, 0)).has_value());
}

TEST_CASE("identity reputation is self-contained") {
    Rng rng(0xfeed);
    KeyPair kp = keygen(rng.bytes<32>());
    Bytes market = to_bytes("wt");
    auto nonce = mine(kp.public_key, market, 10);
    REQUIRE(nonce.has_value());
    ServerIdentity id{kp.public_key, MarketId::from_string("wt"), *nonce};
    CHECK(id.reputation() >= 10);
    CHECK(id.reputation() == compute_reputation(kp.public_key, market, *nonce));
}

TEST_CASE("server ad signing and verification") {
    Rng rng(0xad);
    KeyPair kp = keygen(rng.bytes<32>());
    ServerIdentity id{kp.public_key, MarketId::from_string("wt"), 4};
    ServerAd ad = make_server_ad(id, 25, to_bytes("tcp://tower:9"), kp.secret_key);
    CHECK(verify_server_ad(ad));

    ServerAd tampered = ad;
    tampered.fee += 1;
    CHECK_FALSE(verify_server_ad(tampered));

    KeyPair other = keygen(rng.bytes<32>());
    ServerAd forged = make_server_ad(id, 25, to_bytes("tcp://tower:9"), other.secret_key);
    CHECK_FALSE(verify_server_ad(forged));
}
