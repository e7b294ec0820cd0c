#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hashrep/contract.hpp"
#include "hashrep/rng.hpp"
#include "hashrep/serial.hpp"

using namespace hashrep;

TEST_CASE("writer layout is big-endian with length prefixes") {
    Writer w;
    w.put_u8(0xab);
    w.put_u32(0x01020304);
    w.put_u64(0x1122334455667788ull);
    w.put_string("hi");
    CHECK(to_hex(std::span<const uint8_t>(w.bytes())) == "ab01020304112233445566778800000002" + to_hex(to_bytes("hi")));
}

TEST_CASE("reader round trip and bounds") {
    Writer w;
    w.put_u64(7);
    w.put_bytes(to_bytes("abc"));
    Bytes data = w.take();
    Reader r{std::span<const uint8_t>(data)};
    CHECK(r.get_u64() == 7);
    CHECK(r.get_bytes() == to_bytes("abc"));
    CHECK(r.done());

    Reader short_r{std::span<const uint8_t>(data.data(), 3)};
    (void)short_r.get_u64();
    CHECK_FALSE(short_r.ok());

    // Length prefix reaching past the buffer fails rather than reading junk.
    Writer bad;
    bad.put_u32(1000);
    Bytes bad_bytes = bad.take();
    Reader r2{std::span<const uint8_t>(bad_bytes)};
    (void)r2.get_bytes();
    CHECK_FALSE(r2.ok());
}

namespace {

Rng g_rng(0xd0c5);

ServerIdentity random_identity() {
    ServerIdentity id;
    id.public_key = g_rng.bytes<32>();
    Bytes market(g_rng.range(1, 64));
    g_rng.fill(market);
    id.market_id = *MarketId::make(market);
    id.nonce = g_rng.next();
    return id;
}

Contract random_contract() {
    Contract c;
    c.server_id = random_identity();
    c.market_id = c.server_id.market_id;
    size_t entries = g_rng.below(5);
    for (size_t i = 0; i < entries; ++i) {
        c.txid_prefixes.push_back(g_rng.bytes<16>());
        Bytes blob(g_rng.below(80));
        g_rng.fill(blob);
        c.encrypted_jtxs.push_back(blob);
    }
    c.monitor_start = g_rng.below(100);
    c.monitor_end = c.monitor_start + g_rng.below(100);
    c.dispute_period = g_rng.range(1, 144);
    g_rng.fill(std::span(c.server_hash_image.bytes));
    g_rng.fill(std::span(c.client_hash_image.bytes));
    c.value = g_rng.next();
    c.fee = g_rng.next();
    c.signature = g_rng.bytes<64>();
    return c;
}

}  // namespace

TEST_CASE("contract serialization round trips") {
    for (int i = 0; i < 1000; ++i) {
        Contract c = random_contract();
        Bytes bytes = c.serialize();
        auto back = Contract::parse(bytes);
        REQUIRE(back.has_value());
        CHECK(*back == c);
        CHECK(back->serialize() == bytes);
    }
}

TEST_CASE("server ad serialization round trips") {
    for (int i = 0; i < 200; ++i) {
        ServerAd ad;
        ad.identity = random_identity();
        ad.fee = g_rng.next();
        ad.endpoint = to_bytes("host:1234");
        ad.signature = g_rng.bytes<64>();
        Bytes bytes = ad.serialize();
        auto back = ServerAd::parse(bytes);
        REQUIRE(back.has_value());
        CHECK(*back == ad);
        CHECK(back->serialize() == bytes);
    }
}

TEST_CASE("malformed documents fail to parse") {
    Contract c = random_contract();
    Bytes bytes = c.serialize();
    CHECK_FALSE(Contract::parse(std::span<const uint8_t>(bytes.data(), bytes.size() - 1)).has_value());
    Bytes extra = bytes;
    extra.push_back(0);
    CHECK_FALSE(Contract::parse(extra).has_value());
    Bytes wrong_tag = bytes;
    wrong_tag[0] = doc_tag::server_ad;
    CHECK_FALSE(Contract::parse(wrong_tag).has_value());
    // Market id over 64 bytes is rejected at parse time.
    Contract big = c;
    big.market_id.id = Bytes(65, 1);
    big.server_id.market_id = big.market_id;
    CHECK_FALSE(Contract::parse(big.serialize()).has_value());
}
