#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hashrep/rng.hpp"
#include "hashrep/sha256.hpp"
#include "oracles.hpp"

using namespace hashrep;

TEST_CASE("sha256 FIPS vectors") {
    CHECK(to_hex(sha256(std::string_view(""))) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(to_hex(sha256(std::string_view("abc"))) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(to_hex(sha256(std::string_view("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"))) ==
          "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
    std::string million(1000000, 'a');
    CHECK(to_hex(sha256(million)) == "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0");
}

TEST_CASE("sha256 agrees with libsodium over random inputs") {
    Rng rng(0x5eed5eed);
    for (int i = 0; i < 500; ++i) {
        Bytes data(rng.below(300));
        rng.fill(data);
        CHECK(sha256(data) == oracle::reference_sha256(data));
    }
}

TEST_CASE("incremental updates match one-shot") {
    Rng rng(42);
    for (int i = 0; i < 100; ++i) {
        Bytes data(rng.range(0, 1000));
        rng.fill(data);
        Sha256 h;
        size_t pos = 0;
        while (pos < data.size()) {
            size_t chunk = std::min<size_t>(rng.range(1, 130), data.size() - pos);
            h.update(std::span(data.data() + pos, chunk));
            pos += chunk;
        }
        CHECK(h.finish() == sha256(data));
    }
}

TEST_CASE("block boundary lengths") {
    for (size_t len : {55u, 56u, 57u, 63u, 64u, 65u, 119u, 120u, 128u}) {
        Bytes data(len, 0xab);
        CHECK(sha256(data) == oracle::reference_sha256(data));
    }
}
