#pragma once

#include <deque>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hashrep/market.hpp"
#include "hashrep/rng.hpp"

namespace hashrep {

// --- Scenario scripts --------------------------------------------------------
//
// Line-oriented: `<op> <positional args...> [--key value] [--flag]`.
// `param` lines configure the run, `expect` lines are machine-checked after
// the last event. Everything is replayable from (script, seed).

struct ScenarioEvent {
    size_t line = 0;
    std::string op;
    std::vector<std::string> args;
    std::map<std::string, std::string> opts;

    bool flag(const std::string& name) const {
        auto it = opts.find(name);
        return it != opts.end() && it->second != "false";
    }

    std::optional<std::string> opt(const std::string& name) const {
        auto it = opts.find(name);
        if (it == opts.end()) return std::nullopt;
        return it->second;
    }
};

struct Scenario {
    std::string name = "unnamed";
    uint64_t seed = 1;
    std::string market = "market";
    std::map<std::string, std::string> params;
    std::vector<ScenarioEvent> events;
    std::vector<std::pair<std::string, std::string>> expects;
};

struct ScriptError {
    size_t line = 0;
    std::string message;
};

namespace detail {

inline std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream is(line);
    std::string tok;
    while (is >> tok) {
        if (tok[0] == '#') break;
        out.push_back(tok);
    }
    return out;
}

inline std::optional<uint64_t> parse_u64(const std::string& s) {
    if (s.empty()) return std::nullopt;
    uint64_t v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return std::nullopt;
        if (v > (UINT64_MAX - (c - '0')) / 10) return std::nullopt;
        v = v * 10 + static_cast<uint64_t>(c - '0');
    }
    return v;
}

}  // namespace detail

inline std::optional<Scenario> parse_scenario(const std::string& text, ScriptError* error = nullptr) {
    Scenario s;
    std::istringstream is(text);
    std::string raw;
    size_t line_no = 0;
    auto fail = [&](const std::string& msg) {
        if (error) *error = {line_no, msg};
        return std::nullopt;
    };
    while (std::getline(is, raw)) {
        ++line_no;
        auto tokens = detail::tokenize(raw);
        if (tokens.empty()) continue;
        const std::string& op = tokens[0];
        if (op == "name" || op == "market" || op == "seed") {
            if (tokens.size() != 2) return fail(op + " takes one argument");
            if (op == "name") s.name = tokens[1];
            if (op == "market") s.market = tokens[1];
            if (op == "seed") {
                auto v = detail::parse_u64(tokens[1]);
                if (!v) return fail("bad seed");
                s.seed = *v;
            }
            continue;
        }
        if (op == "param") {
            if (tokens.size() != 3) return fail("param takes <name> <value>");
            s.params[tokens[1]] = tokens[2];
            continue;
        }
        if (op == "expect") {
            if (tokens.size() != 3) return fail("expect takes <key> <value>");
            s.expects.emplace_back(tokens[1], tokens[2]);
            continue;
        }
        ScenarioEvent ev;
        ev.line = line_no;
        ev.op = op;
        for (size_t i = 1; i < tokens.size(); ++i) {
            if (tokens[i].rfind("--", 0) == 0) {
                std::string key = tokens[i].substr(2);
                if (i + 1 < tokens.size() && tokens[i + 1].rfind("--", 0) != 0) {
                    ev.opts[key] = tokens[++i];
                } else {
                    ev.opts[key] = "true";
                }
            } else {
                ev.args.push_back(tokens[i]);
            }
        }
        s.events.push_back(std::move(ev));
    }
    return s;
}

inline std::optional<Scenario> load_scenario(const std::string& path, ScriptError* error = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) {
        if (error) *error = {0, "cannot open " + path};
        return std::nullopt;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), error);
}

// --- Reports -----------------------------------------------------------------

struct RunReport {
    std::string name;
    uint64_t seed = 0;
    std::vector<std::string> event_lines;  // record=event ...
    std::map<std::string, std::string> verdicts;
    std::vector<std::string> failures;  // unmet expectations / script errors
    bool ok = false;

    std::string render() const {
        std::ostringstream os;
        os << "record=run\tname=" << name << "\tseed=" << seed << "\n";
        for (const auto& line : event_lines) os << line << "\n";
        for (const auto& [key, value] : verdicts) os << "record=verdict\tkey=" << key << "\tvalue=" << value << "\n";
        for (const auto& f : failures) os << "record=failure\tdetail=" << f << "\n";
        os << "record=result\tok=" << (ok ? "true" : "false") << "\n";
        return os.str();
    }
};

// --- Ground truth ------------------------------------------------------------

// What actually happened on chain for one published revoked commitment.
struct BreachTruth {
    std::string channel;
    size_t state_index = 0;  // zero-based
    std::string victim;
    Digest256 ctx_txid;
    uint64_t publish_height = 0;
    uint64_t window_end = 0;
    bool remedied = false;
    bool window_closed = false;
};

// --- Runner ------------------------------------------------------------------

class ScenarioRunner {
public:
    RunReport run(const Scenario& scenario) {
        scenario_ = scenario;
        report_ = RunReport{};
        report_.name = scenario.name;
        report_.seed = scenario.seed;
        rng_.emplace(scenario.seed);
        cost_model_ = {param_u64("hash_price", 1), param_u64("cost_timestamp", 0)};
        dispute_period_ = param_u64("dispute_period", 6);
        spam_ticket_bits_ = static_cast<uint32_t>(param_u64("spam_ticket_bits", 0));
        store_capacity_ = param_u64("store_capacity", 64);
        initial_funds_ = param_u64("initial_funds", 1000000);
        k_ = static_cast<uint32_t>(param_u64("k", 2));
        chain_.emplace(dispute_period_);
        nodes_.clear();
        node_names_.clear();
        make_node("market-node");
        servers_.clear();
        clients_.clear();
        server_names_.clear();
        honest_bodies_.clear();
        hashes_mined_ = 0;
        flood_rejected_ = 0;
        flood_accepted_ = 0;

        for (size_t i = 0; i < scenario.events.size(); ++i) {
            const ScenarioEvent& ev = scenario.events[i];
            try {
                dispatch(ev);
            } catch (const ScriptError& err) {
                report_.failures.push_back("event " + std::to_string(i) + " (line " +
                                           std::to_string(err.line) + "): " + err.message);
                report_.ok = false;
                finalize_verdicts();
                return report_;
            } catch (const std::exception& ex) {
                report_.failures.push_back("event " + std::to_string(i) + " (line " +
                                           std::to_string(ev.line) + "): " + ex.what());
                report_.ok = false;
                finalize_verdicts();
                return report_;
            }
        }
        finalize_verdicts();
        check_expectations();
        return report_;
    }

    const SimChain& chain() const { return *chain_; }
    const std::vector<BreachTruth>& ground_truth() const { return truths_; }

    std::vector<ProofOfBreach> built_proofs() const {
        std::vector<ProofOfBreach> out;
        for (const auto& [name, actor] : clients_) {
            for (const auto& e : actor.engagements) {
                if (e.proof) out.push_back(*e.proof);
            }
        }
        return out;
    }

private:
    // ---- actors ----
    struct ServerActor {
        std::string name;
        KeyPair keys;
        ServerIdentity identity;
        uint64_t fee = 1;
        Bytes endpoint;
        bool lazy = false;
        std::vector<WatchSession> sessions;
        std::vector<BribedContract> bribes;
    };

    struct Engagement {
        std::string server;
        std::string channel;
        Contract contract;
        ContractState state;
        Preimage client_preimage{};
        Preimage server_preimage{};           // generated by the server
        std::optional<Preimage> revealed;     // learned by the client at purchase
        std::optional<ProofOfBreach> proof;
        std::optional<BuildFailure> build_failure;
        bool settled = false;
    };

    struct ClientActor {
        std::string name;
        bool offline = false;
        size_t node_index = 0;  // the client's own storage node
        VerdictCache cache;
        std::vector<CandidateServer> candidates;
        std::set<std::string> last_screen;  // server names that passed
        SelectionParams selection{2, 0};
        std::vector<Engagement> engagements;
    };

    // ---- helpers ----
    uint64_t param_u64(const std::string& name, uint64_t fallback) const {
        auto it = scenario_.params.find(name);
        if (it == scenario_.params.end()) return fallback;
        auto v = detail::parse_u64(it->second);
        if (!v) throw ScriptError{0, "bad param " + name};
        return *v;
    }

    [[noreturn]] void fail(const ScenarioEvent& ev, const std::string& msg) const {
        throw ScriptError{ev.line, ev.op + ": " + msg};
    }

    uint64_t need_u64(const ScenarioEvent& ev, const std::string& key, uint64_t fallback,
                      bool required = false) const {
        auto raw = ev.opt(key);
        if (!raw) {
            if (required) fail(ev, "missing --" + key);
            return fallback;
        }
        auto v = detail::parse_u64(*raw);
        if (!v) fail(ev, "bad --" + key);
        return *v;
    }

    const std::string& need_arg(const ScenarioEvent& ev, size_t i) const {
        if (i >= ev.args.size()) fail(ev, "missing argument " + std::to_string(i + 1));
        return ev.args[i];
    }

    ServerActor& server(const ScenarioEvent& ev, const std::string& name) {
        auto it = servers_.find(name);
        if (it == servers_.end()) fail(ev, "unknown server " + name);
        return it->second;
    }

    ClientActor& client(const ScenarioEvent& ev, const std::string& name) {
        auto it = clients_.find(name);
        if (it == clients_.end()) fail(ev, "unknown client " + name);
        return it->second;
    }

    Channel& channel(const ScenarioEvent& ev, const std::string& name) {
        auto it = channels_.find(name);
        if (it == channels_.end()) fail(ev, "unknown channel " + name);
        return it->second;
    }

    size_t make_node(const std::string& name) {
        nodes_.emplace_back(StoreConfig{static_cast<size_t>(store_capacity_), spam_ticket_bits_},
                            &*chain_);
        node_names_.push_back(name);
        return nodes_.size() - 1;
    }

    void log(const std::string& op, const std::string& detail) {
        report_.event_lines.push_back("record=event\top=" + op + "\theight=" +
                                      std::to_string(chain_->tip_height()) + "\t" + detail);
    }

    // Every block goes through here so honest towers always get to scan it
    // and answer in the following block.
    AppendResult append_and_scan(const std::vector<SimTransaction>& txs) {
        AppendResult res = chain_->append_block(txs);
        const SimBlock& block = chain_->block_at(res.height);
        std::vector<BreachHit> hits;
        std::set<std::string> seen;
        for (auto& [name, actor] : servers_) {
            if (actor.lazy) continue;
            for (auto& session : actor.sessions) {
                for (auto& hit : scan_block(session, block)) {
                    std::string key = to_hex(sha256(hit.jtx_bytes));
                    if (seen.insert(key).second) hits.push_back(std::move(hit));
                }
            }
        }
        if (!hits.empty()) {
            auto receipts = respond(hits, *chain_);
            for (const auto& rec : receipts) {
                log("tower-response", "jtx=" + to_hex(rec.jtx_txid).substr(0, 16) +
                                          "\taccepted=" + (rec.accepted ? "true" : "false"));
            }
        }
        return res;
    }

    uint64_t submit_to_node(size_t node, RecordKind kind, const Bytes& body, bool honest) {
        if (node >= nodes_.size()) throw ScriptError{0, "no such node"};
        auto ticket = mine_ticket(kind, body, spam_ticket_bits_);
        if (!ticket) throw ScriptError{0, "ticket mining exhausted"};
        hashes_mined_ += *ticket + 1;
        SubmitResult res = nodes_[node].submit(kind, body, *ticket);
        if (honest && res.status == SubmitStatus::Accepted) honest_bodies_[node].insert(to_hex(sha256(body)));
        log("store-submit", "node=" + std::to_string(node) + "\tkind=" + to_string(kind) +
                                "\tstatus=" + to_string(res.status));
        return res.status == SubmitStatus::Accepted || res.status == SubmitStatus::Duplicate ? 1 : 0;
    }

    // ---- events ----
    void dispatch(const ScenarioEvent& ev) {
        if (ev.op == "server") return ev_server(ev);
        if (ev.op == "client") return ev_client(ev);
        if (ev.op == "party") return ev_party(ev);
        if (ev.op == "advertise") return ev_advertise(ev);
        if (ev.op == "open-channel") return ev_open_channel(ev);
        if (ev.op == "pay") return ev_pay(ev);
        if (ev.op == "screen") return ev_screen(ev);
        if (ev.op == "select") return ev_select(ev);
        if (ev.op == "contract") return ev_contract(ev);
        if (ev.op == "purchase") return ev_purchase(ev);
        if (ev.op == "offline") return ev_offline(ev, true);
        if (ev.op == "online") return ev_offline(ev, false);
        if (ev.op == "tower-mode") return ev_tower_mode(ev);
        if (ev.op == "cheat") return ev_cheat(ev);
        if (ev.op == "advance") return ev_advance(ev);
        if (ev.op == "sweep") return ev_sweep(ev);
        if (ev.op == "build-proof") return ev_build_proof(ev);
        if (ev.op == "store-proof") return ev_store_proof(ev);
        if (ev.op == "settle") return ev_settle(ev);
        if (ev.op == "flood-store") return ev_flood(ev);
        if (ev.op == "bribe") return ev_bribe(ev);
        if (ev.op == "check-bribes") return ev_check_bribes(ev);
        fail(ev, "unknown event");
    }

    void ev_server(const ScenarioEvent& ev) {
        ServerActor actor;
        actor.name = need_arg(ev, 0);
        if (servers_.count(actor.name)) fail(ev, "duplicate server");
        uint32_t bits = static_cast<uint32_t>(need_u64(ev, "bits", 8));
        actor.fee = need_u64(ev, "fee", 1);
        actor.endpoint = to_bytes(ev.opt("endpoint").value_or("sim://" + actor.name));
        actor.keys = keygen(rng_->bytes<32>());
        Bytes market = to_bytes(scenario_.market);
        auto nonce = mine(actor.keys.public_key, market, bits);
        if (!nonce) fail(ev, "mining exhausted");
        hashes_mined_ += *nonce + 1;
        actor.identity = {actor.keys.public_key, MarketId::from_string(scenario_.market), *nonce};
        ledger_.deposit(actor.name, initial_funds_);
        server_names_[to_hex(std::span(actor.keys.public_key))] = actor.name;
        log("server", "name=" + actor.name + "\treputation=" + std::to_string(actor.identity.reputation()));
        servers_.emplace(actor.name, std::move(actor));
    }

    void ev_client(const ScenarioEvent& ev) {
        ClientActor actor;
        actor.name = need_arg(ev, 0);
        if (clients_.count(actor.name)) fail(ev, "duplicate client");
        actor.selection.k = k_;
        // The victim of any breach keeps its own always-available node.
        actor.node_index = make_node(actor.name + "-node");
        ledger_.deposit(actor.name, initial_funds_);
        log("client", "name=" + actor.name + "\tnode=" + std::to_string(actor.node_index));
        clients_.emplace(actor.name, std::move(actor));
    }

    void ev_party(const ScenarioEvent& ev) {
        ledger_.deposit(need_arg(ev, 0), initial_funds_);
        log("party", "name=" + ev.args[0]);
    }

    void ev_advertise(const ScenarioEvent& ev) {
        ServerActor& actor = server(ev, need_arg(ev, 0));
        size_t node = static_cast<size_t>(need_u64(ev, "node", 0));
        ServerAd ad = make_server_ad(actor.identity, actor.fee, actor.endpoint, actor.keys.secret_key);
        submit_to_node(node, RecordKind::ServerAd, ad.serialize(), true);
    }

    void ev_open_channel(const ScenarioEvent& ev) {
        const std::string& name = need_arg(ev, 0);
        if (channels_.count(name)) fail(ev, "duplicate channel");
        uint64_t fund = need_u64(ev, "fund", 0, true);
        Channel ch = open_channel(need_arg(ev, 1), need_arg(ev, 2), fund, ev.flag("directional"), name);
        AppendResult res = append_and_scan({ch.topen});
        if (!res.all_accepted()) fail(ev, "opening transaction rejected");
        log("open-channel", "name=" + name + "\tfund=" + std::to_string(fund));
        channels_.emplace(name, std::move(ch));
    }

    void ev_pay(const ScenarioEvent& ev) {
        Channel& ch = channel(ev, need_arg(ev, 0));
        uint64_t amount = need_u64(ev, "amount", 0, true);
        update_channel(ch, need_arg(ev, 1), amount);
        log("pay", "channel=" + ev.args[0] + "\tpayer=" + ev.args[1] + "\tamount=" + std::to_string(amount) +
                       "\tstate=" + std::to_string(ch.state_count()));
    }

    void ev_screen(const ScenarioEvent& ev) {
        ClientActor& actor = client(ev, need_arg(ev, 0));
        // Merge records from every reachable node.
        std::map<std::string, ServerAd> ads;
        std::map<std::string, BreachRecordView> breaches;
        for (const auto& node : nodes_) {
            for (auto& ad : node.query_ads()) ads.emplace(to_hex(sha256(ad.serialize())), std::move(ad));
            for (auto& view : node.query_all_breaches()) {
                std::string key = to_hex(view.proof.digest());
                auto [it, inserted] = breaches.emplace(key, view);
                if (!inserted && !it->second.revocation && view.revocation) it->second.revocation = view.revocation;
            }
        }
        std::vector<ServerAd> ad_list;
        for (auto& [key, ad] : ads) ad_list.push_back(std::move(ad));
        std::vector<BreachRecordView> breach_list;
        for (auto& [key, view] : breaches) breach_list.push_back(std::move(view));
        actor.candidates = screen(ad_list, breach_list, cost_model_, *chain_, &actor.cache);
        actor.last_screen.clear();
        for (const auto& c : actor.candidates) {
            auto it = server_names_.find(to_hex(std::span(c.identity.public_key)));
            if (it != server_names_.end()) actor.last_screen.insert(it->second);
        }
        log("screen", "client=" + actor.name + "\tcandidates=" + std::to_string(actor.candidates.size()));
    }

    void ev_select(const ScenarioEvent& ev) {
        ClientActor& actor = client(ev, need_arg(ev, 0));
        actor.selection.k = static_cast<uint32_t>(need_u64(ev, "k", k_));
        actor.selection.value = need_u64(ev, "value", actor.selection.value, actor.selection.value == 0);
        size_t n = static_cast<size_t>(need_u64(ev, "n", 1));
        auto winners = select_n(actor.selection.threshold(), actor.candidates, n);
        actor.engagements.clear();
        std::string names;
        for (const auto& w : winners) {
            auto it = server_names_.find(to_hex(std::span(w.identity.public_key)));
            if (it == server_names_.end()) fail(ev, "selected an unregistered server");
            Engagement e;
            e.server = it->second;
            actor.engagements.push_back(std::move(e));
            names += (names.empty() ? "" : ",") + it->second;
        }
        log("select", "client=" + actor.name + "\tchosen=" + (names.empty() ? "none" : names));
        if (winners.empty() && !ev.flag("allow-none")) fail(ev, "no eligible candidate");
    }

    void ev_contract(const ScenarioEvent& ev) {
        ClientActor& actor = client(ev, need_arg(ev, 0));
        Channel& ch = channel(ev, need_arg(ev, 1));
        if (actor.engagements.empty()) fail(ev, "select a server first");
        uint64_t start = chain_->tip_height() + need_u64(ev, "start", 0);
        uint64_t end = chain_->tip_height() + need_u64(ev, "end", 30);
        uint64_t value = need_u64(ev, "value", ch.fund);
        for (Engagement& e : actor.engagements) {
            ServerActor& srv = server(ev, e.server);
            e.channel = ev.args[1];
            e.client_preimage = rng_->bytes<32>();
            e.server_preimage = rng_->bytes<32>();
            Contract c;
            c.market_id = srv.identity.market_id;
            c.server_id = srv.identity;
            for (size_t i = 0; i + 1 < ch.commitments.size(); ++i) {
                const auto& entry = ch.commitments[i];
                Digest256 id = entry.ctx.txid();
                c.txid_prefixes.push_back(txid_prefix(id));
                c.encrypted_jtxs.push_back(encrypt_jtx(entry.jtx->serialize(), id));
            }
            c.monitor_start = start;
            c.monitor_end = end;
            c.dispute_period = dispute_period_;
            c.server_hash_image = hash_lock_image(e.server_preimage);
            c.client_hash_image = hash_lock_image(e.client_preimage);
            c.value = value;
            c.fee = srv.fee;
            auto signed_contract = sign_contract(c, srv.keys.secret_key);
            if (!signed_contract) fail(ev, "signing failed");
            e.contract = *signed_contract;
            e.state = ContractState{ContractStatus::Signed, std::nullopt, std::nullopt};
            log("contract", "client=" + actor.name + "\tserver=" + e.server + "\tentries=" +
                                std::to_string(e.contract.txid_prefixes.size()) + "\trange=[" +
                                std::to_string(start) + "," + std::to_string(end) + "]");
        }
    }

    void ev_purchase(const ScenarioEvent& ev) {
        ClientActor& actor = client(ev, need_arg(ev, 0));
        if (actor.engagements.empty()) fail(ev, "nothing to purchase");
        for (Engagement& e : actor.engagements) {
            ServerActor& srv = server(ev, e.server);
            std::optional<Preimage> offer_preimage;
            if (!ev.flag("expire")) offer_preimage = e.server_preimage;
            if (ev.flag("wrong-preimage")) offer_preimage = rng_->bytes<32>();
            PurchaseOutcome out = purchase(e.contract, e.state, ledger_, actor.name, srv.name, offer_preimage);
            if (out.active) {
                e.revealed = e.server_preimage;
                WatchSession session = WatchSession::from_contract(e.contract);
                session.active = true;
                srv.sessions.push_back(std::move(session));
            }
            log("purchase", "client=" + actor.name + "\tserver=" + e.server + "\tactive=" +
                                (out.active ? "true" : "false") + "\tfee_paid=" +
                                (out.fee_paid ? "true" : "false"));
        }
    }

    void ev_offline(const ScenarioEvent& ev, bool offline) {
        client(ev, need_arg(ev, 0)).offline = offline;
        log(offline ? "offline" : "online", "client=" + ev.args[0]);
    }

    void ev_tower_mode(const ScenarioEvent& ev) {
        ServerActor& actor = server(ev, need_arg(ev, 0));
        const std::string& mode = need_arg(ev, 1);
        if (mode != "honest" && mode != "lazy") fail(ev, "mode must be honest or lazy");
        actor.lazy = mode == "lazy";
        log("tower-mode", "server=" + actor.name + "\tmode=" + mode);
    }

    void ev_cheat(const ScenarioEvent& ev) {
        const std::string& who = need_arg(ev, 0);
        Channel& ch = channel(ev, need_arg(ev, 1));
        size_t state = static_cast<size_t>(need_u64(ev, "state", 1));
        if (state < 1 || state >= ch.state_count()) fail(ev, "not a revoked state");
        const CommitmentEntry& entry = ch.commitments[state - 1];
        AppendResult res = append_and_scan({entry.ctx});
        if (!res.all_accepted()) fail(ev, "stale commitment rejected");
        BreachTruth truth;
        truth.channel = ev.args[1];
        truth.state_index = state - 1;
        truth.victim = ch.counterparty(who);
        truth.ctx_txid = entry.ctx.txid();
        truth.publish_height = res.height;
        truth.window_end = res.height + dispute_period_;
        truths_.push_back(truth);
        log("cheat", "party=" + who + "\tchannel=" + ev.args[1] + "\tstate=" + std::to_string(state) +
                         "\theight=" + std::to_string(res.height));
    }

    void ev_advance(const ScenarioEvent& ev) {
        uint64_t n = 1;
        if (!ev.args.empty()) {
            auto v = detail::parse_u64(ev.args[0]);
            if (!v) fail(ev, "bad block count");
            n = *v;
        }
        for (uint64_t i = 0; i < n; ++i) append_and_scan({});
        log("advance", "blocks=" + std::to_string(n));
    }

    void ev_sweep(const ScenarioEvent& ev) {
        const std::string& who = need_arg(ev, 0);
        Channel& ch = channel(ev, need_arg(ev, 1));
        size_t state = static_cast<size_t>(need_u64(ev, "state", 1));
        if (state < 1 || state > ch.state_count()) fail(ev, "bad state");
        SimTransaction sweep = make_sweep(ch, state - 1, who);
        AppendResult res = append_and_scan({sweep});
        log("sweep", "party=" + who + "\taccepted=" + (res.all_accepted() ? "true" : "false"));
        if (!res.all_accepted() && !ev.flag("allow-reject")) fail(ev, "sweep rejected by the chain");
    }

    void ev_build_proof(const ScenarioEvent& ev) {
        ClientActor& actor = client(ev, need_arg(ev, 0));
        if (actor.offline) fail(ev, "client is offline");
        const std::string& ch_name = need_arg(ev, 1);
        for (Engagement& e : actor.engagements) {
            if (e.channel != ch_name) continue;
            if (!e.revealed) fail(ev, "no server preimage; contract never activated");
            BuildResult res = build_any_proof(e.contract, *e.revealed, *chain_);
            if (res.ok()) {
                e.proof = res.proof;
                e.build_failure.reset();
            } else {
                e.proof.reset();
                e.build_failure = res.failure;
            }
            log("build-proof", "client=" + actor.name + "\tserver=" + e.server + "\tresult=" +
                                   (res.ok() ? "proof" : to_string(res.failure)));
        }
    }

    void ev_store_proof(const ScenarioEvent& ev) {
        ClientActor& actor = client(ev, need_arg(ev, 0));
        for (Engagement& e : actor.engagements) {
            if (!e.proof) continue;
            Bytes body = e.proof->serialize();
            // The breach victim stores on its own node and the market node.
            submit_to_node(actor.node_index, RecordKind::Breach, body, true);
            submit_to_node(static_cast<size_t>(need_u64(ev, "node", 0)), RecordKind::Breach, body, true);
        }
    }

    void ev_settle(const ScenarioEvent& ev) {
        ClientActor& actor = client(ev, need_arg(ev, 0));
        uint64_t amount = need_u64(ev, "pay", 1);
        for (Engagement& e : actor.engagements) {
            if (!e.proof) continue;
            ServerActor& srv = server(ev, e.server);
            SettleOutcome out =
                settle(*e.proof, ledger_, srv.name, actor.name, amount, e.client_preimage);
            if (out.settled && out.revocation_body) {
                e.settled = true;
                terminate(e.contract, e.state, e.client_preimage);
                submit_to_node(actor.node_index, RecordKind::Revocation, *out.revocation_body, true);
                submit_to_node(static_cast<size_t>(need_u64(ev, "node", 0)), RecordKind::Revocation,
                               *out.revocation_body, true);
            }
            log("settle", "client=" + actor.name + "\tserver=" + e.server + "\tsettled=" +
                              (out.settled ? "true" : "false"));
        }
    }

    void ev_flood(const ScenarioEvent& ev) {
        size_t node_index = static_cast<size_t>(need_u64(ev, "node", 0));
        if (node_index >= nodes_.size()) fail(ev, "no such node");
        uint64_t count = need_u64(ev, "count", 0, true);
        uint32_t max_bits = static_cast<uint32_t>(need_u64(ev, "max-bits", 11));
        uint32_t budget_bits = static_cast<uint32_t>(need_u64(ev, "ticket-bits", spam_ticket_bits_));
        StorageNode& node = nodes_[node_index];
        KeyPair kp = keygen(rng_->bytes<32>());
        Bytes market = to_bytes(scenario_.market);
        for (uint64_t i = 0; i < count; ++i) {
            uint64_t nonce = rng_->next();
            while (compute_reputation(kp.public_key, market, nonce) > max_bits) nonce = rng_->next();
            ServerIdentity id{kp.public_key, MarketId::from_string(scenario_.market), nonce};
            ServerAd ad = make_server_ad(id, 1, to_bytes("f"), kp.secret_key);
            Bytes body = ad.serialize();
            auto ticket = mine_ticket(RecordKind::ServerAd, body, budget_bits);
            hashes_mined_ += *ticket + 1;
            SubmitResult res = node.submit(RecordKind::ServerAd, body, *ticket);
            if (res.accepted()) ++flood_accepted_; else ++flood_rejected_;
        }
        log("flood-store", "node=" + std::to_string(node_index) + "\tcount=" + std::to_string(count) +
                               "\trejected=" + std::to_string(flood_rejected_));
    }

    void ev_bribe(const ScenarioEvent& ev) {
        ServerActor& actor = server(ev, need_arg(ev, 0));
        uint64_t value = need_u64(ev, "value", 0, true);
        uint64_t amount = need_u64(ev, "amount", 0, true);
        actor.bribes.push_back({value, amount});
        log("bribe", "server=" + actor.name + "\tvalue=" + std::to_string(value) + "\tamount=" +
                         std::to_string(amount));
    }

    void ev_check_bribes(const ScenarioEvent& ev) {
        bool all_safe = true;
        bool all_preconditions = true;
        for (auto& [name, actor] : servers_) {
            if (actor.bribes.empty()) continue;
            BribeScenario s{reputation_cost(actor.identity.reputation(), cost_model_), k_, actor.bribes};
            BribeVerdict v = bribe_safe(s);
            all_safe = all_safe && v.safe;
            all_preconditions = all_preconditions && v.preconditions_ok;
            log("check-bribes", "server=" + name + "\ttotal=" + u128_to_string(v.total_bribe) +
                                    "\tsafe=" + (v.safe ? "true" : "false") +
                                    (v.preconditions_ok ? "" : "\tviolated=" + v.violated_clause));
            report_.verdicts["bribe_total." + name] = u128_to_string(v.total_bribe);
        }
        report_.verdicts["bribe_safe"] = all_safe && all_preconditions ? "true" : "false";
        (void)ev;
    }

    // ---- verdicts ----
    void finalize_verdicts() {
        auto& v = report_.verdicts;
        v["blocks"] = std::to_string(chain_->tip_height() + 1);
        v["hashes_mined"] = std::to_string(hashes_mined_);
        v["flood_rejected"] = std::to_string(flood_rejected_);
        v["flood_accepted"] = std::to_string(flood_accepted_);

        // Ground truth: resolve each published stale commitment against the
        // chain's spend index.
        for (auto& truth : truths_) {
            truth.window_closed = chain_->tip_height() >= truth.window_end;
            truth.remedied = false;
            const Channel& ch = channels_.at(truth.channel);
            const SimTransaction& ctx = ch.commitments[truth.state_index].ctx;
            for (uint32_t vout = 0; vout < ctx.outputs.size(); ++vout) {
                auto spend = chain_->spent_by(truth.ctx_txid, vout);
                if (!spend) continue;
                const SimTransaction* spender = chain_->tx_by_id(spend->spender);
                if (spender && spender->kind == TxKind::Justice && spend->height <= truth.window_end)
                    truth.remedied = true;
            }
        }
        size_t unremedied = 0;
        for (const auto& t : truths_)
            if (t.window_closed && !t.remedied) ++unremedied;
        v["breaches_on_chain"] = std::to_string(truths_.size());
        v["breaches_unremedied"] = std::to_string(unremedied);

        size_t proofs = 0;
        for (auto& [name, actor] : clients_) {
            bool any_active = false, all_active = !actor.engagements.empty();
            bool settled = false;
            for (Engagement& e : actor.engagements) {
                bool active = e.state.status == ContractStatus::Active;
                any_active = any_active || active;
                all_active = all_active && active;
                settled = settled || e.settled;
                if (e.proof) {
                    ++proofs;
                    VerifyVerdict full = verify_proof(*e.proof, *chain_);
                    VerifyVerdict light = verify_proof(*e.proof, chain_->headers());
                    v["proof_valid_full." + name] = full.valid ? "true" : "false";
                    v["proof_valid_light." + name] = light.valid ? "true" : "false";
                }
                if (e.build_failure) v["build_result." + name] = to_string(*e.build_failure);
                else if (e.proof) v["build_result." + name] = "proof";
            }
            v["contract_active." + name] = all_active && any_active ? "true" : "false";
            v["settled." + name] = settled ? "true" : "false";
            v["candidates." + name] = std::to_string(actor.candidates.size());
            for (auto& [srv_name, srv] : servers_) {
                if (!actor.last_screen.empty() || !actor.candidates.empty() || true)
                    v["screened_out." + name + "." + srv_name] =
                        actor.last_screen.count(srv_name) ? "false" : "true";
            }
            // Damage: some channel this client belongs to suffered an
            // unremedied breach whose window has closed.
            bool damage = false;
            for (const auto& t : truths_) {
                const Channel& ch = channels_.at(t.channel);
                bool involved = ch.party_a == name || ch.party_b == name;
                if (involved && t.window_closed && !t.remedied && t.victim == name) damage = true;
            }
            v["damage." + name] = damage ? "true" : "false";
        }
        v["breaches_proven"] = std::to_string(proofs);

        size_t honest_evicted = 0;
        for (size_t i = 0; i < nodes_.size(); ++i) {
            v["store_ads." + std::to_string(i)] = std::to_string(nodes_[i].ads().size());
            v["store_breaches." + std::to_string(i)] = std::to_string(nodes_[i].breaches().size());
            v["store_evictions." + std::to_string(i)] = std::to_string(nodes_[i].stats().evictions);
            for (const auto& digest_hex : honest_bodies_[i]) {
                auto digest = digest_from_hex(digest_hex);
                if (digest && !nodes_[i].contains(*digest)) ++honest_evicted;
            }
        }
        v["honest_evictions"] = std::to_string(honest_evicted);
        for (const auto& [who, _] : servers_) v["balance." + who] = std::to_string(ledger_.balance(who));
        for (const auto& [who, _] : clients_) v["balance." + who] = std::to_string(ledger_.balance(who));
    }

    void check_expectations() {
        report_.ok = report_.failures.empty();
        for (const auto& [key, expected] : scenario_.expects) {
            auto it = report_.verdicts.find(key);
            std::string got = it == report_.verdicts.end() ? "<missing>" : it->second;
            if (got != expected) {
                report_.ok = false;
                report_.failures.push_back("expect " + key + ": wanted " + expected + ", got " + got);
            }
        }
    }

    // ---- state ----
    Scenario scenario_;
    RunReport report_;
    std::optional<Rng> rng_;
    std::optional<SimChain> chain_;
    ReputationCostModel cost_model_{};
    uint64_t dispute_period_ = 6;
    uint32_t spam_ticket_bits_ = 0;
    uint64_t store_capacity_ = 64;
    uint64_t initial_funds_ = 0;
    uint32_t k_ = 2;
    std::deque<StorageNode> nodes_;
    std::vector<std::string> node_names_;
    std::map<std::string, ServerActor> servers_;
    std::map<std::string, ClientActor> clients_;
    std::map<std::string, Channel> channels_;
    std::map<std::string, std::string> server_names_;  // pk hex -> actor name
    std::map<size_t, std::set<std::string>> honest_bodies_;
    std::vector<BreachTruth> truths_;
    Ledger ledger_;
    uint64_t hashes_mined_ = 0;
    uint64_t flood_rejected_ = 0;
    uint64_t flood_accepted_ = 0;
};

// --- Parameter sweeps ----------------------------------------------------------

struct SweepGrid {
    // Axis name -> values; the sweep runs the cross product.
    std::vector<std::pair<std::string, std::vector<std::string>>> axes;

    static std::optional<SweepGrid> parse(const std::string& text) {
        SweepGrid grid;
        std::istringstream is(text);
        std::string line;
        while (std::getline(is, line)) {
            auto tokens = detail::tokenize(line);
            if (tokens.empty()) continue;
            if (tokens.size() < 2) return std::nullopt;
            grid.axes.emplace_back(tokens[0], std::vector<std::string>(tokens.begin() + 1, tokens.end()));
        }
        return grid;
    }
};

struct SweepRow {
    std::map<std::string, std::string> params;
    RunReport report;
};

inline std::vector<SweepRow> run_sweep(const Scenario& scenario_template, const SweepGrid& grid) {
    std::vector<SweepRow> rows;
    if (grid.axes.empty()) return rows;
    std::vector<size_t> index(grid.axes.size(), 0);
    ScenarioRunner runner;
    while (true) {
        Scenario instance = scenario_template;
        SweepRow row;
        for (size_t axis = 0; axis < grid.axes.size(); ++axis) {
            const auto& [name, values] = grid.axes[axis];
            instance.params[name] = values[index[axis]];
            row.params[name] = values[index[axis]];
        }
        row.report = runner.run(instance);
        rows.push_back(std::move(row));
        size_t axis = 0;
        while (axis < index.size()) {
            if (++index[axis] < grid.axes[axis].second.size()) break;
            index[axis++] = 0;
        }
        if (axis == index.size()) break;
    }
    return rows;
}

inline std::string sweep_table(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    for (const auto& row : rows) {
        os << "record=sweep-row";
        for (const auto& [key, value] : row.params) os << "\t" << key << "=" << value;
        os << "\tok=" << (row.report.ok ? "true" : "false");
        for (const auto& [key, value] : row.report.verdicts) os << "\t" << key << "=" << value;
        os << "\n";
    }
    return os.str();
}

}  // namespace hashrep
