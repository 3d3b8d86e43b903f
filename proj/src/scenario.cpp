#include "tournsim/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "tournsim/prng.hpp"

namespace tournsim {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& path,
                    std::initializer_list<const char*> known) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) ok = true;
        if (!ok) throw ConfigError(path + "." + it.key(), "unknown key");
    }
}

Strategy parse_strategy(const json& j, const std::string& path) {
    reject_unknown(j, path,
                   {"kind", "round", "step", "fraction", "challenge_all", "late_by"});
    Strategy s;
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "honest")
        s.kind = PolicyKind::Honest;
    else if (kind == "abstain")
        s.kind = PolicyKind::Abstain;
    else if (kind == "stall_after_round")
        s.kind = PolicyKind::StallAfterRound;
    else if (kind == "censor_budget")
        s.kind = PolicyKind::CensorBudget;
    else if (kind == "open_and_abandon")
        s.kind = PolicyKind::OpenAndAbandon;
    else if (kind == "equivocate")
        s.kind = PolicyKind::EquivocateAssertion;
    else if (kind == "late_register")
        s.kind = PolicyKind::LateRegister;
    else
        throw ConfigError(path + ".kind", "unknown strategy kind '" + kind + "'");
    if (j.contains("round")) s.stall_round = j["round"].get<uint32_t>();
    if (j.contains("step")) s.stall_step = j["step"].get<int32_t>();
    if (j.contains("fraction")) {
        s.censor_fraction = j["fraction"].get<double>();
        if (s.censor_fraction < 0.0 || s.censor_fraction >= 1.0)
            throw ConfigError(path + ".fraction", "censor budget must lie in [0, 1)");
    }
    if (j.contains("challenge_all")) s.challenge_all = j["challenge_all"].get<bool>();
    if (j.contains("late_by")) s.late_by = j["late_by"].get<Period>();
    return s;
}

json strategy_json(const Strategy& s) {
    json j;
    switch (s.kind) {
        case PolicyKind::Honest: j["kind"] = "honest"; break;
        case PolicyKind::Abstain: j["kind"] = "abstain"; break;
        case PolicyKind::StallAfterRound: j["kind"] = "stall_after_round"; break;
        case PolicyKind::CensorBudget: j["kind"] = "censor_budget"; break;
        case PolicyKind::OpenAndAbandon: j["kind"] = "open_and_abandon"; break;
        case PolicyKind::EquivocateAssertion: j["kind"] = "equivocate"; break;
        case PolicyKind::LateRegister: j["kind"] = "late_register"; break;
    }
    if (s.kind == PolicyKind::StallAfterRound) {
        j["round"] = s.stall_round;
        if (s.stall_step >= 0) j["step"] = s.stall_step;
    }
    if (s.kind == PolicyKind::CensorBudget) j["fraction"] = s.censor_fraction;
    if (s.challenge_all) j["challenge_all"] = true;
    if (s.kind == PolicyKind::LateRegister) j["late_by"] = s.late_by;
    return j;
}

} // namespace

Scenario Scenario::from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError("$", std::string("not valid JSON: ") + e.what());
    }
    reject_unknown(doc, "$",
                   {"seed", "operators", "max_challengers", "q", "schedule", "bonds",
                    "strategies", "assertions", "phase1_only", "skip_cancellations",
                    "lottery_mode", "contest_method", "disable_method", "disable_threshold",
                    "tc", "extra_confirmation_periods", "registration_window",
                    "starting_balance", "horizon", "phase2_challengers"});
    Scenario s;
    if (doc.contains("seed")) s.seed = doc["seed"].get<uint64_t>();
    if (doc.contains("operators")) s.n_ops = doc["operators"].get<uint32_t>();
    if (s.n_ops < 2) throw ConfigError("$.operators", "need at least 2 operators");
    if (doc.contains("max_challengers"))
        s.max_challengers = doc["max_challengers"].get<uint32_t>();
    if (doc.contains("q")) {
        s.q = doc["q"].get<uint32_t>();
        if (!is_power_of_two(s.q)) throw ConfigError("$.q", "Q must be a power of two");
    }
    if (doc.contains("schedule")) {
        const auto& js = doc["schedule"];
        reject_unknown(js, "$.schedule", {"rule", "k1", "custom"});
        std::string rule = js.value("rule", "double");
        if (rule == "double" || rule == "maintain_or_double")
            s.schedule.rule = ScheduleRule::MaintainOrDouble;
        else if (rule == "gradual")
            s.schedule.rule = ScheduleRule::Gradual;
        else if (rule == "custom")
            s.schedule.rule = ScheduleRule::Custom;
        else
            throw ConfigError("$.schedule.rule", "unknown rule '" + rule + "'");
        if (js.contains("k1")) s.schedule.k1 = js["k1"].get<uint32_t>();
        if (js.contains("custom"))
            s.schedule.custom = js["custom"].get<std::vector<uint32_t>>();
        if (!s.schedule.valid())
            throw ConfigError("$.schedule", "schedule must be non-decreasing with k1 >= 1");
    }
    if (doc.contains("bonds")) {
        const auto& jb = doc["bonds"];
        reject_unknown(jb, "$.bonds", {"aosb", "adr", "fee", "publication_cost"});
        if (jb.contains("aosb")) s.bonds.aosb = jb["aosb"].get<int64_t>();
        if (jb.contains("fee")) s.bonds.fee = jb["fee"].get<int64_t>();
        if (jb.contains("publication_cost"))
            s.bonds.publication_cost = jb["publication_cost"].get<int64_t>();
        s.bonds.adr = jb.contains("adr") ? jb["adr"].get<int64_t>()
                                         : s.bonds.aosb - s.bonds.fee;
        if (!s.bonds.valid())
            throw ConfigError("$.bonds", "need adr <= aosb and aosb >= publication + fee");
    } else {
        s.bonds.adr = s.bonds.aosb - s.bonds.fee;
    }
    if (doc.contains("strategies")) {
        const auto& ja = doc["strategies"];
        size_t i = 0;
        for (const auto& j : ja)
            s.strategies.push_back(
                parse_strategy(j, "$.strategies[" + std::to_string(i++) + "]"));
    }
    if (s.strategies.empty()) s.strategies.assign(s.n_ops, Strategy::honest());
    if (s.strategies.size() != s.n_ops)
        throw ConfigError("$.strategies", "must list exactly one strategy per operator");
    if (doc.contains("assertions"))
        s.assertions = doc["assertions"].get<std::vector<uint64_t>>();
    if (doc.contains("phase1_only")) s.phase1_only = doc["phase1_only"].get<bool>();
    if (doc.contains("skip_cancellations"))
        s.skip_cancellations = doc["skip_cancellations"].get<bool>();
    if (doc.contains("lottery_mode")) s.lottery_mode = doc["lottery_mode"].get<bool>();
    if (doc.contains("contest_method")) {
        s.contest_method = doc["contest_method"].get<std::string>();
        if (s.contest_method != "none" && s.contest_method != "A" && s.contest_method != "B")
            throw ConfigError("$.contest_method", "must be none, A or B");
    }
    if (doc.contains("disable_method")) {
        s.disable_method = doc["disable_method"].get<std::string>();
        if (s.disable_method != "none" && s.disable_method != "direct" &&
            s.disable_method != "pairwise" && s.disable_method != "threshold")
            throw ConfigError("$.disable_method", "must be none, direct, pairwise or threshold");
    }
    if (doc.contains("disable_threshold"))
        s.disable_threshold = doc["disable_threshold"].get<uint32_t>();
    if (doc.contains("tc")) {
        const auto& jt = doc["tc"];
        reject_unknown(jt, "$.tc", {"links", "timelock_epochs", "starts_per_link", "t_z"});
        if (jt.contains("links")) s.tc_links = jt["links"].get<uint32_t>();
        if (jt.contains("timelock_epochs"))
            s.tc_timelock_epochs = jt["timelock_epochs"].get<uint32_t>();
        if (jt.contains("starts_per_link"))
            s.tc_starts_per_link = jt["starts_per_link"].get<uint32_t>();
        if (jt.contains("t_z")) s.tc_t_z = jt["t_z"].get<Period>();
    }
    if (doc.contains("extra_confirmation_periods"))
        s.extra_confirmation_periods = doc["extra_confirmation_periods"].get<Period>();
    if (doc.contains("registration_window"))
        s.registration_window = doc["registration_window"].get<uint32_t>();
    if (doc.contains("starting_balance"))
        s.starting_balance = doc["starting_balance"].get<int64_t>();
    if (doc.contains("horizon")) s.horizon = doc["horizon"].get<Period>();
    if (doc.contains("phase2_challengers"))
        s.phase2_challengers = doc["phase2_challengers"].get<std::vector<OperatorId>>();
    return s;
}

Scenario Scenario::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("$", "cannot open scenario file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string Scenario::canonical_json() const {
    json doc;
    doc["seed"] = seed;
    doc["operators"] = n_ops;
    doc["max_challengers"] = max_challengers;
    doc["q"] = q;
    doc["schedule"] = {{"rule", schedule.rule == ScheduleRule::MaintainOrDouble ? "double"
                                : schedule.rule == ScheduleRule::Gradual       ? "gradual"
                                                                               : "custom"},
                       {"k1", schedule.k1},
                       {"custom", schedule.custom}};
    doc["bonds"] = {{"aosb", bonds.aosb},
                    {"adr", bonds.adr},
                    {"fee", bonds.fee},
                    {"publication_cost", bonds.publication_cost}};
    json ja = json::array();
    for (const auto& st : strategies) ja.push_back(strategy_json(st));
    doc["strategies"] = std::move(ja);
    doc["assertions"] = assertions;
    doc["phase1_only"] = phase1_only;
    doc["skip_cancellations"] = skip_cancellations;
    doc["lottery_mode"] = lottery_mode;
    doc["contest_method"] = contest_method;
    doc["disable_method"] = disable_method;
    doc["disable_threshold"] = disable_threshold;
    doc["tc"] = {{"links", tc_links},
                 {"timelock_epochs", tc_timelock_epochs},
                 {"starts_per_link", tc_starts_per_link},
                 {"t_z", tc_t_z}};
    doc["extra_confirmation_periods"] = extra_confirmation_periods;
    doc["registration_window"] = registration_window;
    doc["starting_balance"] = starting_balance;
    doc["horizon"] = horizon;
    doc["phase2_challengers"] = phase2_challengers;
    return doc.dump();
}

uint64_t Scenario::digest() const {
    Fnv1a h;
    std::string c = canonical_json();
    h.add(c.data(), c.size());
    return h.digest();
}

ScenarioReport run_scenario(const Scenario& s) {
    ScenarioReport rep;
    rep.scenario = s;
    rep.scenario_digest = s.digest();

    if (s.lottery_mode) {
        Prng rng(s.seed);
        std::vector<LotteryParticipant> parts;
        for (OperatorId op = 1; op <= s.n_ops; ++op)
            parts.push_back(LotteryParticipant{op, rng.next(), true, true});
        auto lot = run_lottery(parts);
        json out;
        out["scenario_digest"] = rep.scenario_digest;
        out["mode"] = "lottery";
        out["winner"] = lot.winner;
        out["templates"] = lot.template_count;
        rep.outcome_json = out.dump(1);
        std::ostringstream sum;
        sum << "scenario " << std::hex << rep.scenario_digest << std::dec
            << "\nlottery winner: operator " << lot.winner << "\n";
        rep.summary_text = sum.str();
        return rep;
    }

    DagParams p;
    p.n_ops = s.n_ops;
    p.max_challengers = s.max_challengers;
    p.include_phase2 = !s.phase1_only;
    p.contest_inputs = s.contest_method != "none";
    p.registration_window = s.registration_window;
    p.tc_links = s.tc_links;
    p.starts_per_link = s.tc_starts_per_link;
    p.inter_link_timelock =
        s.tc_timelock_epochs ? s.tc_timelock_epochs : recommended_inter_link_timelock(s.n_ops);
    p.permutation_seed = s.seed;
    DagBuilder b(p);
    b.build_tc();
    b.build_phase1(0, 0);
    if (!s.phase1_only) b.build_phase2(0);
    Dag dag = b.take();

    RunConfig cfg;
    cfg.n_ops = s.n_ops;
    cfg.seed = s.seed;
    cfg.strategies = s.strategies;
    cfg.assertions = s.assertions;
    cfg.phase1_only = s.phase1_only;
    cfg.skip_cancellations = s.skip_cancellations;
    cfg.schedule = s.schedule;
    cfg.bonds = s.bonds;
    cfg.starting_balance = s.starting_balance;
    cfg.extra_confirmation_periods = s.extra_confirmation_periods;
    cfg.registration_window = s.registration_window;
    cfg.horizon = s.horizon;
    cfg.phase2_challengers = s.phase2_challengers;
    cfg.contest_method = s.contest_method;
    cfg.disable_method = s.disable_method;
    cfg.disable_threshold = s.disable_threshold;
    rep.run = run_tournament(dag, cfg);
    rep.invariants_held = rep.run.violations.empty();

    json out;
    out["scenario_digest"] = rep.scenario_digest;
    out["winner"] = rep.run.phase1.winner;
    out["win_phase1_confirmations"] = rep.run.phase1.win_phase1_confirmations;
    out["makespan"] = rep.run.phase1.makespan;
    out["eliminated"] = rep.run.phase1.eliminated;
    out["trace_digest"] = rep.run.trace_digest;
    if (rep.run.phase2) {
        out["phase2"] = {{"refunded", rep.run.phase2->refunded},
                         {"early_refund", rep.run.phase2->early_refund},
                         {"rounds_used", rep.run.phase2->rounds_used},
                         {"challengers", rep.run.phase2->challengers_registered},
                         {"finished_at", rep.run.phase2->finished_at}};
    }
    if (rep.run.oaa) {
        out["oaa"] = {{"is_oaa", rep.run.oaa->is_oaa},
                      {"opener", rep.run.oaa->opener},
                      {"assertions_seen", rep.run.oaa->assertions_seen},
                      {"window_end", rep.run.oaa->window_end}};
    }
    out["violations"] = rep.run.violations;
    if (!rep.run.disabled_parties.empty()) {
        out["disabled_parties"] = rep.run.disabled_parties;
        out["blocked_actions"] = rep.run.blocked_actions;
    }
    json peaks = json::array();
    for (OperatorId op = 1; op < rep.run.peak_drawdown.size(); ++op)
        peaks.push_back(rep.run.peak_drawdown[op]);
    out["peak_drawdown"] = std::move(peaks);
    rep.outcome_json = out.dump(1);

    {
        std::ostringstream cap;
        for (const auto& ev : rep.run.capital_events)
            cap << "{\"period\":" << ev.period << ",\"party\":" << ev.party << ",\"kind\":\""
                << to_string(ev.kind) << "\",\"amount\":" << ev.amount << "}\n";
        rep.capital_jsonl = cap.str();
    }
    {
        // tabular capital report: party, challengers, schedule, peak, rounds, fees
        std::ostringstream tab;
        tab << "party,challengers,schedule,peak,rounds,total_fees\n";
        uint32_t rounds = rep.run.phase2 ? rep.run.phase2->rounds_used : 0;
        uint32_t challengers = rep.run.phase2 ? rep.run.phase2->challengers_registered : 0;
        const char* rule = s.schedule.rule == ScheduleRule::MaintainOrDouble ? "double"
                           : s.schedule.rule == ScheduleRule::Gradual       ? "gradual"
                                                                            : "custom";
        std::vector<int64_t> fees(rep.run.peak_drawdown.size(), 0);
        for (const auto& ev : rep.run.capital_events)
            if (ev.kind == CapitalEventKind::Fee || ev.kind == CapitalEventKind::Publication)
                fees[ev.party] += ev.amount;
        for (OperatorId op = 1; op < rep.run.peak_drawdown.size(); ++op)
            tab << op << "," << challengers << "," << rule << ","
                << rep.run.peak_drawdown[op] << "," << rounds << "," << fees[op] << "\n";
        rep.capital_table = tab.str();
    }
    {
        std::ostringstream fx;
        for (const auto& tr : rep.run.flex_log)
            fx << "{\"instance\":" << tr.instance << ",\"period\":" << tr.period
               << ",\"event\":\"" << to_string(tr.event) << "\",\"before\":\""
               << to_string(tr.before) << "\",\"after\":\"" << to_string(tr.after)
               << "\"}\n";
        rep.flex_jsonl = fx.str();
    }
    {
        std::ostringstream tc;
        for (const auto& ev : rep.run.tc_events)
            tc << "{\"period\":" << ev.period << ",\"link\":" << ev.link_index
               << ",\"event\":\"" << to_string(ev.kind) << "\",\"oid\":" << ev.oid
               << "}\n";
        rep.tc_jsonl = tc.str();
    }
    rep.trace_jsonl = rep.run.trace_jsonl;
    std::ostringstream sum;
    sum << "scenario digest " << std::hex << rep.scenario_digest << std::dec << "\n";
    sum << "winner: " << rep.run.phase1.winner
        << "  makespan: " << rep.run.phase1.makespan << " periods\n";
    if (rep.run.phase2)
        sum << "phase2: refunded=" << (rep.run.phase2->refunded ? "yes" : "no")
            << " rounds=" << rep.run.phase2->rounds_used << "\n";
    sum << "violations: " << rep.run.violations.size() << "\n";
    for (const auto& v : rep.run.violations) sum << "  " << v << "\n";
    rep.summary_text = sum.str();
    return rep;
}

int run_scenario_to_dir(const Scenario& s, const std::string& out_dir) {
    namespace fs = std::filesystem;
    ScenarioReport rep = run_scenario(s);
    fs::create_directories(out_dir);
    std::ofstream(fs::path(out_dir) / "outcome.json") << rep.outcome_json << "\n";
    std::ofstream(fs::path(out_dir) / "trace.jsonl") << rep.trace_jsonl;
    std::ofstream(fs::path(out_dir) / "capital.jsonl") << rep.capital_jsonl;
    std::ofstream(fs::path(out_dir) / "capital_table.csv") << rep.capital_table;
    std::ofstream(fs::path(out_dir) / "flex_log.jsonl") << rep.flex_jsonl;
    std::ofstream(fs::path(out_dir) / "tc_events.jsonl") << rep.tc_jsonl;
    std::ofstream(fs::path(out_dir) / "summary.txt") << rep.summary_text;
    std::ofstream(fs::path(out_dir) / "scenario.canonical.json") << s.canonical_json() << "\n";
    return rep.invariants_held ? 0 : 1;
}

// ---------------------------------------------------------------------------

EnumerationSpace space_from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError("$", std::string("not valid JSON: ") + e.what());
    }
    reject_unknown(doc, "$", {"scenario", "vary_ops", "choices", "participation_subsets", "cap"});
    EnumerationSpace sp;
    if (!doc.contains("scenario")) throw ConfigError("$.scenario", "missing");
    sp.base = Scenario::from_json_text(doc["scenario"].dump());
    if (doc.contains("vary_ops")) sp.vary_ops = doc["vary_ops"].get<std::vector<OperatorId>>();
    if (doc.contains("choices")) {
        size_t i = 0;
        for (const auto& j : doc["choices"])
            sp.choices.push_back(parse_strategy(j, "$.choices[" + std::to_string(i++) + "]"));
    }
    if (doc.contains("participation_subsets"))
        sp.participation_subsets = doc["participation_subsets"].get<bool>();
    if (doc.contains("cap")) sp.cap = doc["cap"].get<uint64_t>();
    return sp;
}

EnumerationSpace space_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("$", "cannot open space file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return space_from_json_text(ss.str());
}

EnumerationSummary enumerate_space(const EnumerationSpace& space, uint32_t jobs) {
    EnumerationSummary sum;
    std::vector<OperatorId> vary = space.vary_ops;
    if (vary.empty())
        for (OperatorId op = 1; op <= space.base.n_ops; ++op) vary.push_back(op);

    std::vector<Strategy> choices = space.choices;
    if (space.participation_subsets)
        choices = {Strategy::honest(), Strategy::abstain()};
    if (choices.empty()) return sum; // an empty space enumerates nothing

    uint64_t points = 1;
    for (size_t i = 0; i < vary.size(); ++i) {
        points *= choices.size();
        if (points > space.cap) throw SimError("SpaceTooLarge");
    }

    // Build the shared immutable DAG once; every point reuses it.
    const Scenario& s = space.base;
    DagParams p;
    p.n_ops = s.n_ops;
    p.max_challengers = s.max_challengers;
    p.include_phase2 = !s.phase1_only;
    p.registration_window = s.registration_window;
    p.inter_link_timelock =
        s.tc_timelock_epochs ? s.tc_timelock_epochs : recommended_inter_link_timelock(s.n_ops);
    p.permutation_seed = s.seed;
    DagBuilder b(p);
    b.build_tc();
    b.build_phase1(0, 0);
    if (!s.phase1_only) b.build_phase2(0);
    const Dag dag = b.take();

    auto run_point = [&](uint64_t index, EnumerationSummary& local) {
        RunConfig cfg;
        cfg.n_ops = s.n_ops;
        cfg.seed = s.seed;
        cfg.strategies = s.strategies;
        cfg.assertions = s.assertions;
        cfg.phase1_only = s.phase1_only;
        cfg.schedule = s.schedule;
        cfg.bonds = s.bonds;
        cfg.starting_balance = s.starting_balance;
        cfg.registration_window = s.registration_window;
        cfg.horizon = s.horizon;
        uint64_t x = index;
        std::string label;
        for (OperatorId op : vary) {
            const Strategy& st = choices[x % choices.size()];
            cfg.strategies[op - 1] = st;
            label += std::to_string(op) + "=" + to_string(st.kind);
            if (st.kind == PolicyKind::StallAfterRound)
                label += "(" + std::to_string(st.stall_round) + ")";
            label += " ";
            x /= choices.size();
        }
        RunReport r = run_tournament(dag, cfg);
        local.max_win_phase1 =
            std::max<uint64_t>(local.max_win_phase1, r.phase1.win_phase1_confirmations);
        for (const auto& [k, v] : r.case_coverage) local.case_coverage[k] += v;
        for (const auto& v : r.violations)
            local.violations.push_back("[" + label + "] " + v);
        ++local.points;
    };

    if (jobs <= 1) {
        for (uint64_t i = 0; i < points; ++i) run_point(i, sum);
        return sum;
    }
    std::vector<EnumerationSummary> partial(jobs);
    std::vector<std::thread> workers;
    for (uint32_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&, w]() {
            for (uint64_t i = w; i < points; i += jobs) run_point(i, partial[w]);
        });
    }
    for (auto& t : workers) t.join();
    for (const auto& part : partial) {
        sum.points += part.points;
        sum.max_win_phase1 = std::max(sum.max_win_phase1, part.max_win_phase1);
        for (const auto& [k, v] : part.case_coverage) sum.case_coverage[k] += v;
        for (const auto& v : part.violations) sum.violations.push_back(v);
    }
    std::sort(sum.violations.begin(), sum.violations.end());
    return sum;
}

} // namespace tournsim
