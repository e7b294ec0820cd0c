// Shared fixture: one watched channel, a hired tower, and helpers to drive
// the chain into remedied / swept / silent endings. Include after doctest.h.
#pragma once

#include "hashrep/breach.hpp"
#include "hashrep/rng.hpp"

namespace testfix {

using namespace hashrep;

struct BreachFixture {
    Rng rng;
    SimChain chain{5};
    KeyPair tower_keys;
    Preimage server_preimage;
    Preimage client_preimage;
    Channel channel;
    std::vector<ChannelUpdate> updates;
    Contract contract;

    explicit BreachFixture(uint64_t seed = 0xb00, uint32_t tower_bits = 8)
        : rng(seed), channel(open_channel("alice", "bob", 8, false, "w" + std::to_string(seed))) {
        tower_keys = keygen(rng.bytes<32>());
        server_preimage = rng.bytes<32>();
        client_preimage = rng.bytes<32>();
        REQUIRE(chain.append_block({channel.topen}).all_accepted());
        updates.push_back(update_channel(channel, "bob", 2));
        updates.push_back(update_channel(channel, "alice", 1));

        contract.market_id = MarketId::from_string("wt");
        auto nonce = mine(tower_keys.public_key, contract.market_id.id, tower_bits);
        REQUIRE(nonce.has_value());
        contract.server_id = {tower_keys.public_key, contract.market_id, *nonce};
        for (size_t i = 0; i + 1 < channel.commitments.size(); ++i) {
            const auto& entry = channel.commitments[i];
            Digest256 id = entry.ctx.txid();
            contract.txid_prefixes.push_back(txid_prefix(id));
            contract.encrypted_jtxs.push_back(encrypt_jtx(entry.jtx->serialize(), id));
        }
        contract.monitor_start = chain.tip_height();
        contract.monitor_end = chain.tip_height() + 40;
        contract.dispute_period = chain.dispute_period();
        contract.server_hash_image = hash_lock_image(server_preimage);
        contract.client_hash_image = hash_lock_image(client_preimage);
        contract.value = channel.fund;
        contract.fee = 3;
        auto signed_contract = sign_contract(contract, tower_keys.secret_key);
        REQUIRE(signed_contract.has_value());
        contract = *signed_contract;
    }

    uint64_t cheat(size_t state) {
        AppendResult res = chain.append_block({channel.commitments[state].ctx});
        REQUIRE(res.all_accepted());
        return res.height;
    }

    void remedy(size_t state) {
        REQUIRE(chain.append_block({*channel.commitments[state].jtx}).all_accepted());
    }

    void close_window(uint64_t publish_height) {
        while (chain.tip_height() < publish_height + chain.dispute_period())
            REQUIRE(chain.append_block({}).all_accepted());
    }

    void sweep(size_t state, const std::string& cheater) {
        REQUIRE(chain.append_block({make_sweep(channel, state, cheater)}).all_accepted());
    }

    // Full breach pipeline: cheat on state 0, silence, sweep, build.
    ProofOfBreach swept_breach_proof() {
        uint64_t h = cheat(0);
        close_window(h);
        sweep(0, "bob");
        BuildResult built = build_proof(contract, server_preimage, chain, 0);
        REQUIRE(built.ok());
        return *built.proof;
    }
};

}  // namespace testfix
