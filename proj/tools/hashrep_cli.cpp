// Command-line front end: scenario runs and sweeps, hashcash mining,
// proof-of-breach verification, and a storage-node simulator.
#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "hashrep/scenario.hpp"

using namespace hashrep;

namespace {

std::optional<Bytes> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) return std::nullopt;
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

bool write_file(const std::string& path, std::span<const uint8_t> data) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    return out.good();
}

bool write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    return out.good();
}

int cmd_run(const std::string& scenario_path, std::optional<uint64_t> seed, const std::string& out_path,
            const std::string& artifacts_dir) {
    ScriptError err;
    auto scenario = load_scenario(scenario_path, &err);
    if (!scenario) {
        std::cerr << "error: " << scenario_path << ":" << err.line << ": " << err.message << "\n";
        return 2;
    }
    if (seed) scenario->seed = *seed;
    ScenarioRunner runner;
    RunReport report = runner.run(*scenario);
    std::string rendered = report.render();
    if (out_path.empty()) {
        std::cout << rendered;
    } else if (!write_text(out_path, rendered)) {
        std::cerr << "error: cannot write " << out_path << "\n";
        return 2;
    }
    if (!artifacts_dir.empty()) {
        std::filesystem::create_directories(artifacts_dir);
        write_file(artifacts_dir + "/chain.bin", runner.chain().export_bytes());
        write_file(artifacts_dir + "/headers.bin", runner.chain().headers().serialize());
        auto proofs = runner.built_proofs();
        for (size_t i = 0; i < proofs.size(); ++i)
            write_file(artifacts_dir + "/proof-" + std::to_string(i) + ".pob", proofs[i].serialize());
    }
    if (!report.ok) {
        for (const auto& f : report.failures) std::cerr << "failure: " << f << "\n";
        return 1;
    }
    return 0;
}

int cmd_sweep(const std::string& template_path, const std::string& grid_path, const std::string& out_path) {
    ScriptError err;
    auto scenario = load_scenario(template_path, &err);
    if (!scenario) {
        std::cerr << "error: " << template_path << ":" << err.line << ": " << err.message << "\n";
        return 2;
    }
    auto grid_bytes = read_file(grid_path);
    if (!grid_bytes) {
        std::cerr << "error: cannot read " << grid_path << "\n";
        return 2;
    }
    auto grid = SweepGrid::parse(std::string(grid_bytes->begin(), grid_bytes->end()));
    if (!grid) {
        std::cerr << "error: malformed grid file\n";
        return 2;
    }
    auto rows = run_sweep(*scenario, *grid);
    std::string table = sweep_table(rows);
    if (out_path.empty()) {
        std::cout << table;
    } else if (!write_text(out_path, table)) {
        std::cerr << "error: cannot write " << out_path << "\n";
        return 2;
    }
    for (const auto& row : rows) {
        if (!row.report.ok) {
            for (const auto& f : row.report.failures) std::cerr << "failure: " << f << "\n";
            return 1;
        }
    }
    return 0;
}

int cmd_mine(const std::string& id_hex, const std::string& market, uint32_t bits, uint64_t start,
             uint64_t max_attempts) {
    auto key = array_from_hex<32>(id_hex);
    if (!key) {
        std::cerr << "error: --id must be 64 hex characters\n";
        return 2;
    }
    Bytes market_bytes = to_bytes(market);
    auto nonce = mine(*key, market_bytes, bits, start, max_attempts);
    if (!nonce) {
        std::cerr << "exhausted: no nonce in " << max_attempts << " attempts\n";
        return 1;
    }
    Digest256 digest = reputation_digest(*key, market_bytes, *nonce);
    std::cout << "nonce=" << *nonce << "\tdigest=" << to_hex(digest)
              << "\treputation=" << compute_reputation(*key, market_bytes, *nonce)
              << "\tattempts=" << (*nonce - start + 1) << "\n";
    return 0;
}

int cmd_verify_proof(const std::string& proof_path, const std::string& headers_path,
                     const std::string& chain_path) {
    auto bytes = read_file(proof_path);
    if (!bytes) {
        std::cerr << "error: cannot read " << proof_path << "\n";
        return 2;
    }
    auto proof = ProofOfBreach::parse(*bytes);
    if (!proof) {
        std::cout << "verdict=invalid\tcondition=1\treason=document does not parse\n";
        return 1;
    }
    if (headers_path.empty() == chain_path.empty()) {
        std::cerr << "error: pass exactly one of --headers (light mode) or --chain (full mode)\n";
        return 2;
    }
    VerifyVerdict verdict;
    if (!chain_path.empty()) {
        auto chain_bytes = read_file(chain_path);
        auto chain = chain_bytes ? SimChain::import_bytes(*chain_bytes) : std::nullopt;
        if (!chain) {
            std::cerr << "error: cannot load chain snapshot " << chain_path << "\n";
            return 2;
        }
        verdict = verify_proof(*proof, *chain);
        std::cout << "mode=full\t";
    } else {
        auto header_bytes = read_file(headers_path);
        auto headers = header_bytes ? HeaderChain::parse(*header_bytes) : std::nullopt;
        if (!headers) {
            std::cerr << "error: cannot load headers " << headers_path << "\n";
            return 2;
        }
        verdict = verify_proof(*proof, *headers);
        std::cout << "mode=light\t";
    }
    if (verdict.valid) {
        std::cout << "verdict=valid\n";
        return 0;
    }
    std::cout << "verdict=invalid\tcondition=" << verdict.failed_condition << "\treason=" << verdict.reason
              << "\n";
    return 1;
}

// Minimal storage-node exercise: mine identities, submit ads, flood, and
// check expectations. Reuses the scenario file grammar.
int cmd_store_sim(const std::string& commands_path, size_t capacity, uint32_t ticket_bits, uint64_t seed) {
    ScriptError err;
    auto script = load_scenario(commands_path, &err);
    if (!script) {
        std::cerr << "error: " << commands_path << ":" << err.line << ": " << err.message << "\n";
        return 2;
    }
    Rng rng(seed);
    StorageNode node(StoreConfig{capacity, ticket_bits});
    std::map<std::string, std::pair<KeyPair, ServerIdentity>> ids;
    std::map<std::string, std::string> verdicts;
    Bytes market = to_bytes(script->market);
    uint64_t flood_rejected = 0, flood_accepted = 0;
    std::vector<Digest256> honest;

    for (const auto& ev : script->events) {
        auto opt_u64 = [&](const std::string& key, uint64_t fallback) {
            auto raw = ev.opt(key);
            if (!raw) return fallback;
            auto v = detail::parse_u64(*raw);
            if (!v) throw ScriptError{ev.line, "bad --" + key};
            return *v;
        };
        try {
            if (ev.op == "mine-id") {
                if (ev.args.empty()) throw ScriptError{ev.line, "mine-id needs a name"};
                KeyPair kp = keygen(rng.bytes<32>());
                auto nonce = mine(kp.public_key, market, static_cast<uint32_t>(opt_u64("bits", 8)));
                if (!nonce) throw ScriptError{ev.line, "mining exhausted"};
                ServerIdentity id{kp.public_key, MarketId::from_string(script->market), *nonce};
                std::cout << "record=mined\tname=" << ev.args[0] << "\treputation=" << id.reputation() << "\n";
                ids[ev.args[0]] = {kp, id};
            } else if (ev.op == "submit-ad") {
                if (ev.args.empty() || !ids.count(ev.args[0]))
                    throw ScriptError{ev.line, "unknown identity"};
                auto& [kp, id] = ids[ev.args[0]];
                ServerAd ad = make_server_ad(id, opt_u64("fee", 1), to_bytes("sim"), kp.secret_key);
                Bytes body = ad.serialize();
                auto ticket = mine_ticket(RecordKind::ServerAd, body, ticket_bits);
                SubmitResult res = node.submit(RecordKind::ServerAd, body, *ticket);
                if (res.status == SubmitStatus::Accepted) honest.push_back(sha256(body));
                std::cout << "record=submit\tname=" << ev.args[0] << "\tstatus=" << to_string(res.status)
                          << "\tpriority=" << res.priority << "\n";
            } else if (ev.op == "flood") {
                uint64_t count = opt_u64("count", 100);
                uint32_t max_bits = static_cast<uint32_t>(opt_u64("max-bits", 8));
                uint32_t budget = static_cast<uint32_t>(opt_u64("ticket-bits", ticket_bits));
                KeyPair kp = keygen(rng.bytes<32>());
                for (uint64_t i = 0; i < count; ++i) {
                    uint64_t nonce = rng.next();
                    while (compute_reputation(kp.public_key, market, nonce) > max_bits) nonce = rng.next();
                    ServerIdentity id{kp.public_key, MarketId::from_string(script->market), nonce};
                    ServerAd ad = make_server_ad(id, 1, to_bytes("f"), kp.secret_key);
                    Bytes body = ad.serialize();
                    auto ticket = mine_ticket(RecordKind::ServerAd, body, budget);
                    SubmitResult res = node.submit(RecordKind::ServerAd, body, *ticket);
                    if (res.accepted()) ++flood_accepted; else ++flood_rejected;
                }
                std::cout << "record=flood\tcount=" << count << "\trejected=" << flood_rejected << "\n";
            } else if (ev.op == "flush-cost") {
                auto cost = node.flush_cost();
                verdicts["flush_r_max"] = std::to_string(cost.r_max);
                verdicts["flush_hashes"] = u128_to_string(cost.expected_hashes());
                std::cout << "record=flush-cost\tcapacity=" << cost.capacity << "\tr_max=" << cost.r_max
                          << "\texpected_hashes=" << u128_to_string(cost.expected_hashes()) << "\n";
            } else {
                throw ScriptError{ev.line, "unknown command " + ev.op};
            }
        } catch (const ScriptError& script_err) {
            std::cerr << "error: line " << script_err.line << ": " << script_err.message << "\n";
            return 2;
        }
    }
    bool honest_retained = true;
    for (const auto& digest : honest) honest_retained = honest_retained && node.contains(digest);
    verdicts["stored_ads"] = std::to_string(node.ads().size());
    verdicts["evictions"] = std::to_string(node.stats().evictions);
    verdicts["bad_tickets"] = std::to_string(node.stats().bad_tickets);
    verdicts["flood_rejected"] = std::to_string(flood_rejected);
    verdicts["flood_accepted"] = std::to_string(flood_accepted);
    verdicts["honest_retained"] = honest_retained ? "true" : "false";
    for (const auto& [key, value] : verdicts)
        std::cout << "record=verdict\tkey=" << key << "\tvalue=" << value << "\n";

    bool ok = true;
    for (const auto& [key, expected] : script->expects) {
        std::string got = verdicts.count(key) ? verdicts[key] : "<missing>";
        if (got != expected) {
            std::cerr << "failure: expect " << key << ": wanted " << expected << ", got " << got << "\n";
            ok = false;
        }
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hashcash-reputation watchtower market simulator"};
    app.require_subcommand(1);

    std::string scenario_path, out_path, artifacts_dir;
    uint64_t seed_value = 0;
    auto* run = app.add_subcommand("run", "execute a scenario file and check its expectations");
    run->add_option("scenario", scenario_path, "scenario file")->required();
    auto* seed_opt = run->add_option("--seed", seed_value, "override the scenario seed");
    run->add_option("--out", out_path, "write the report here instead of stdout");
    run->add_option("--artifacts", artifacts_dir, "dump chain/header/proof files to this directory");

    std::string template_path, grid_path, sweep_out;
    auto* sweep = app.add_subcommand("sweep", "run a scenario template across a parameter grid");
    sweep->add_option("template", template_path, "scenario template file")->required();
    sweep->add_option("--grid", grid_path, "grid file: one axis per line")->required();
    sweep->add_option("--out", sweep_out, "write the table here instead of stdout");

    std::string id_hex, market = "market";
    uint32_t bits = 8;
    uint64_t start = 0;
    uint64_t max_attempts = UINT64_MAX;
    auto* mine_cmd = app.add_subcommand("mine", "mine a hashcash nonce for a server identity");
    mine_cmd->add_option("--id", id_hex, "server public key, 32 bytes hex")->required();
    mine_cmd->add_option("--market", market, "market id string");
    mine_cmd->add_option("--bits", bits, "target leading zero bits")->required();
    mine_cmd->add_option("--start", start, "start nonce");
    mine_cmd->add_option("--max", max_attempts, "max attempts before giving up");

    std::string proof_path, headers_path, chain_path;
    auto* verify = app.add_subcommand("verify-proof", "verify a proof-of-breach document");
    verify->add_option("proof", proof_path, "proof file")->required();
    verify->add_option("--headers", headers_path, "header chain file (light mode)");
    verify->add_option("--chain", chain_path, "chain snapshot file (full mode)");

    std::string commands_path;
    size_t capacity = 64;
    uint32_t ticket_bits = 12;
    uint64_t store_seed = 1;
    auto* store = app.add_subcommand("store-sim", "drive a storage node from a command file");
    store->add_option("commands", commands_path, "command file")->required();
    store->add_option("--capacity", capacity, "records per pool");
    store->add_option("--ticket-bits", ticket_bits, "required anti-spam ticket bits");
    store->add_option("--seed", store_seed, "rng seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run)
            return cmd_run(scenario_path, seed_opt->count() ? std::optional(seed_value) : std::nullopt,
                           out_path, artifacts_dir);
        if (*sweep) return cmd_sweep(template_path, grid_path, sweep_out);
        if (*mine_cmd) return cmd_mine(id_hex, market, bits, start, max_attempts);
        if (*verify) return cmd_verify_proof(proof_path, headers_path, chain_path);
        if (*store) return cmd_store_sim(commands_path, capacity, ticket_bits, store_seed);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    }
    return 2;
}
