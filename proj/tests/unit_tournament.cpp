#include <doctest.h>

#include <map>
#include <set>

#include "tournsim/tournament.hpp"

using namespace tournsim;

namespace {

Dag build_dag(uint32_t n, bool phase2 = true, uint32_t challengers = 0) {
    DagParams p;
    p.n_ops = n;
    p.include_phase2 = phase2;
    p.max_challengers = challengers;
    DagBuilder b(p);
    b.build_tc();
    b.build_phase1(0, 0);
    if (phase2) b.build_phase2(0);
    return b.take();
}

RunConfig config(uint32_t n, std::vector<Strategy> strategies) {
    RunConfig c;
    c.n_ops = n;
    c.seed = 11;
    c.strategies = std::move(strategies);
    return c;
}

// assertions: operator 1 holds the single true claim unless overridden
std::vector<uint64_t> one_true(uint32_t n, OperatorId holder = 1) {
    std::vector<uint64_t> a(n);
    for (OperatorId op = 1; op <= n; ++op)
        a[op - 1] = op == holder ? 1 : 2 * op;
    return a;
}

} // namespace

TEST_CASE("figure progression: N=8 with only operators 1, 4 and 8 participating") {
    Dag dag = build_dag(8);
    std::vector<Strategy> st(8, Strategy::abstain());
    st[0] = st[3] = st[7] = Strategy::honest();
    RunConfig cfg = config(8, st);
    cfg.assertions = one_true(8);
    RunReport r = run_tournament(dag, cfg);

    CHECK(r.violations.empty());
    CHECK(r.phase1.winner == 1);
    CHECK(r.phase1.makespan == 18); // 6 * ceil(log2 8)
    // round 1: 1 and 8 walk over absent opponents, 4 advances by timeout
    std::map<std::pair<int, int>, MatchOutcome> by_slot;
    for (const auto& m : r.phase1.matches) by_slot[{m.round, m.index}] = m;
    CHECK(by_slot[{1, 0}].chain_case == ChainCase::Case2AliceOnly); // 1 vs absent 2
    CHECK(by_slot[{1, 1}].chain_case == ChainCase::Case3BobOnly);   // absent 3 vs 4
    CHECK(by_slot[{1, 2}].chain_case == ChainCase::Case4Neither);   // 5 vs 6
    CHECK(by_slot[{1, 3}].chain_case == ChainCase::Case3BobOnly);   // absent 7 vs 8
    // round 2: 1 vs 4 is a real dispute; 8 walks over the dead box
    CHECK(by_slot[{2, 0}].chain_case == ChainCase::CaseResolved);
    CHECK(by_slot[{2, 0}].advanced == 1);
    CHECK(by_slot[{2, 1}].chain_case == ChainCase::Case3BobOnly);
    CHECK(by_slot[{2, 1}].advanced == 8);
    // final: 1 vs 8 resolves for the true assertion
    CHECK(by_slot[{3, 0}].chain_case == ChainCase::CaseResolved);
    CHECK(by_slot[{3, 0}].advanced == 1);
    REQUIRE(r.phase2);
    CHECK(r.phase2->refunded);
}

TEST_CASE("appendix case coverage with stated outcomes") {
    SUBCASE("case 1, challenged then stalled: any third party dual-cuts") {
        Dag dag = build_dag(4, false);
        std::vector<Strategy> st = {Strategy::stall_after(1, 1), Strategy::stall_after(1, 2),
                                    Strategy::honest(), Strategy::honest()};
        RunConfig cfg = config(4, st);
        cfg.assertions = one_true(4, 4);
        RunReport r = run_tournament(dag, cfg);
        CHECK(r.violations.empty());
        const auto& m0 = r.phase1.matches[0];
        CHECK(m0.chain_case == ChainCase::Case1Challenged);
        CHECK(m0.dual_cut);
        CHECK(m0.advanced == kNoOperator);
        CHECK(r.phase1.winner == 4);
    }
    SUBCASE("case 1, no challenge: Alice cancels and advances") {
        Dag dag = build_dag(2, false);
        std::vector<Strategy> st = {Strategy::honest(), Strategy::stall_after(1, 1)};
        RunConfig cfg = config(2, st);
        cfg.assertions = one_true(2);
        RunReport r = run_tournament(dag, cfg);
        CHECK(r.violations.empty());
        const auto& m0 = r.phase1.matches[0];
        CHECK(m0.chain_case == ChainCase::Case1NoChallenge);
        CHECK_FALSE(m0.dual_cut);
        CHECK(m0.advanced == 1);
        CHECK(r.phase1.winner == 1);
        // the loser's next link was consumed with the cancellation
        CHECK(std::find(r.phase1.eliminated.begin(), r.phase1.eliminated.end(), 2) !=
              r.phase1.eliminated.end());
    }
    SUBCASE("case 1, fully dormant: dual cut retires the selector") {
        Dag dag = build_dag(4, false);
        std::vector<Strategy> st = {Strategy::stall_after(1, 1), Strategy::stall_after(1, 1),
                                    Strategy::honest(), Strategy::honest()};
        RunConfig cfg = config(4, st);
        cfg.assertions = one_true(4, 3);
        RunReport r = run_tournament(dag, cfg);
        CHECK(r.violations.empty());
        const auto& m0 = r.phase1.matches[0];
        CHECK(m0.chain_case == ChainCase::Case1Dormant);
        CHECK(m0.dual_cut);
        CHECK(m0.advanced == kNoOperator);
        CHECK(r.phase1.winner == 3);
    }
    SUBCASE("case 2: only the defender shows up and advances by walkover") {
        Dag dag = build_dag(2, false);
        std::vector<Strategy> st = {Strategy::honest(), Strategy::abstain()};
        RunConfig cfg = config(2, st);
        RunReport r = run_tournament(dag, cfg);
        CHECK(r.phase1.matches[0].chain_case == ChainCase::Case2AliceOnly);
        CHECK(r.phase1.matches[0].advanced == 1);
        CHECK(r.phase1.winner == 1);
        CHECK(r.phase1.makespan == 6); // waits the full selector timelock
    }
    SUBCASE("case 3: the challenger cannot open the dispute and walks over") {
        Dag dag = build_dag(2, false);
        std::vector<Strategy> st = {Strategy::abstain(), Strategy::honest()};
        RunConfig cfg = config(2, st);
        cfg.assertions = one_true(2, 2);
        RunReport r = run_tournament(dag, cfg);
        CHECK(r.phase1.matches[0].chain_case == ChainCase::Case3BobOnly);
        CHECK(r.phase1.winner == 2);
        CHECK(r.phase1.makespan == 6);
        // BobChallenge(1,2) requires the absent defender's enabler
        bool challenged = false;
        for (const auto& tr : r.flex_log)
            challenged |= tr.event == FlexEventType::BobChallenge;
        CHECK_FALSE(challenged);
    }
    SUBCASE("case 4: both absent, no action possible or required") {
        Dag dag = build_dag(2, false);
        std::vector<Strategy> st = {Strategy::abstain(), Strategy::abstain()};
        RunConfig cfg = config(2, st);
        RunReport r = run_tournament(dag, cfg);
        CHECK(r.phase1.matches[0].chain_case == ChainCase::Case4Neither);
        CHECK(r.phase1.winner == kNoOperator);
        CHECK(r.phase1.win_phase1_confirmations == 0);
        CHECK(r.trace_jsonl.find("DisputeTimeout") == std::string::npos);
    }
}

TEST_CASE("honest winner with the true assertion beats adversarial mixes") {
    Dag dag = build_dag(4);
    std::vector<std::vector<Strategy>> mixes = {
        {Strategy::honest(), Strategy::honest(), Strategy::honest(), Strategy::honest()},
        {Strategy::honest(), Strategy::abstain(), Strategy::stall_after(1),
         Strategy::honest()},
        {Strategy::honest(), Strategy{PolicyKind::EquivocateAssertion}, Strategy::honest(),
         Strategy::stall_after(2)},
        {Strategy::honest(), Strategy::stall_after(1, 2), Strategy::stall_after(1, 1),
         Strategy::abstain()},
    };
    for (auto& st : mixes) {
        RunConfig cfg = config(4, st);
        cfg.assertions = one_true(4);
        RunReport r = run_tournament(dag, cfg);
        CHECK(r.violations.empty());
        CHECK(r.phase1.winner == 1);
        REQUIRE(r.phase2);
        CHECK(r.phase2->refunded);
    }
}

TEST_CASE("censorship below a period does not change the outcome") {
    Dag dag = build_dag(4);
    std::vector<Strategy> st = {Strategy::honest(), Strategy::honest(), Strategy::honest(),
                                Strategy::honest()};
    st[2].kind = PolicyKind::CensorBudget;
    st[2].censor_fraction = 0.7;
    RunConfig cfg = config(4, st);
    cfg.assertions = one_true(4);
    RunReport r = run_tournament(dag, cfg);
    CHECK(r.violations.empty());
    CHECK(r.phase1.winner == 1);
    CHECK(r.phase1.makespan == 12);
}

TEST_CASE("late phase-1 registration is cut by the honest opponent") {
    Dag dag = build_dag(2, false);
    Strategy late{PolicyKind::LateRegister};
    late.late_by = 2;
    std::vector<Strategy> st = {Strategy::honest(), late};
    RunConfig cfg = config(2, st);
    RunReport r = run_tournament(dag, cfg);
    CHECK(r.violations.empty());
    CHECK(r.phase1.winner == 1);
    // the late registration never confirmed: its gate was already cut
    CHECK(r.trace_jsonl.find("\"broadcaster\":2") == std::string::npos);
}

TEST_CASE("exhaustive N=3 soundness over honest/abstain/stall assignments") {
    Dag dag = build_dag(3, false);
    std::vector<Strategy> choices = {Strategy::honest(), Strategy::abstain(),
                                     Strategy::stall_after(1), Strategy::stall_after(2)};
    uint32_t total = 0;
    for (size_t a = 0; a < choices.size(); ++a)
        for (size_t b = 0; b < choices.size(); ++b)
            for (size_t c = 0; c < choices.size(); ++c) {
                RunConfig cfg = config(3, {choices[a], choices[b], choices[c]});
                cfg.phase1_only = true;
                RunReport r = run_tournament(dag, cfg);
                CHECK(r.violations.empty());
                CHECK(r.phase1.win_phase1_confirmations <= 1);
                ++total;
            }
    CHECK(total == 64);
}

TEST_CASE("phase 2: doubling schedule resolves 7 challengers in 3 rounds at constant peak") {
    Dag dag = build_dag(2, true, 8); // pool: operator 2 plus seven watchtowers
    std::vector<Strategy> st = {Strategy::honest(), Strategy::abstain()};
    RunConfig cfg = config(2, st);
    cfg.assertions = one_true(2);
    for (OperatorId w = 3; w <= 9; ++w) cfg.phase2_challengers.push_back(w);
    RunReport r = run_tournament(dag, cfg);
    CHECK(r.violations.empty());
    REQUIRE(r.phase2);
    CHECK(r.phase2->challengers_registered == 7);
    CHECK(r.phase2->rounds_used == 3); // ceil(log2(7+1))
    CHECK(r.phase2->refunded);
    CHECK(r.phase2->early_refund);
    CHECK(r.peak_drawdown[1] == cfg.bonds.aosb);
    // every challenger forfeited one bond
    for (OperatorId w = 3; w <= 9; ++w) {
        CHECK(r.peak_drawdown[w] == cfg.bonds.aosb);
        CHECK(r.final_balance[w] == cfg.starting_balance - cfg.bonds.aosb);
    }
}

TEST_CASE("phase 2 peak capital is identical across challenger counts") {
    std::set<int64_t> peaks;
    for (uint32_t c : {1u, 2u, 4u, 8u}) {
        Dag dag = build_dag(2, true, c + 1);
        std::vector<Strategy> st = {Strategy::honest(), Strategy::abstain()};
        RunConfig cfg = config(2, st);
        cfg.assertions = one_true(2);
        for (OperatorId w = 3; w < 3 + c; ++w) cfg.phase2_challengers.push_back(w);
        cfg.phase2_challengers.push_back(2 + c); // last watchtower id
        RunReport r = run_tournament(dag, cfg);
        REQUIRE(r.phase2);
        CHECK(r.phase2->challengers_registered == c);
        CHECK(r.phase2->refunded);
        peaks.insert(r.peak_drawdown[1]);
    }
    CHECK(peaks.size() == 1); // bit-identical
}

TEST_CASE("premature early refund is punished through StillOpen") {
    // the asserter holds a false claim (unchallenged in phase 1) and tries to
    // cash out while the phase-2 dispute is still open
    Dag dag = build_dag(2, true, 2);
    std::vector<Strategy> st = {Strategy::honest(), Strategy::abstain()};
    RunConfig cfg = config(2, st);
    cfg.assertions = one_true(2, 2); // operator 1 asserts a false claim
    cfg.phase2_challengers = {3};
    cfg.premature_refund_at = 9; // challenge landed at 8, input is in flight
    cfg.horizon = 40;
    RunReport r = run_tournament(dag, cfg);
    REQUIRE(r.phase2);
    CHECK_FALSE(r.phase2->refunded);
    // the challenger claimed the asserter's deposit on top of his own bond
    CHECK(r.final_balance[3] == cfg.starting_balance + cfg.bonds.adr);
    CHECK(r.final_balance[1] == cfg.starting_balance - cfg.bonds.aosb);
    CHECK(r.trace_jsonl.find("StillOpen") != std::string::npos);
    // the blocked refund also killed the resolve-for-Bob path, by design
    CHECK(r.violations.empty());
}

TEST_CASE("inactive challengers: skipping cancellations waits for the 5R+2 refund") {
    Dag dag = build_dag(2, true, 7);
    std::vector<Strategy> st = {Strategy::honest(), Strategy::abstain()};
    RunConfig cfg = config(2, st);
    cfg.assertions = one_true(2);
    cfg.skip_cancellations = true;
    RunReport r = run_tournament(dag, cfg);
    REQUIRE(r.phase2);
    CHECK(r.phase2->refunded);
    CHECK_FALSE(r.phase2->early_refund);
    // R = ceil(log2(7+1)) = 3: the gate opens 17 periods after StartTournament
    CHECK(r.phase2->finished_at == 6 /*WinPhase1*/ + 17);
}

TEST_CASE("late phase-2 registration is cancelled by RegTimeout") {
    Dag dag = build_dag(2, true, 3);
    Strategy late{PolicyKind::LateRegister};
    late.late_by = 2;
    std::vector<Strategy> st = {Strategy::honest(), late};
    RunConfig cfg = config(2, st);
    cfg.assertions = one_true(2);
    cfg.phase2_challengers = {2};
    RunReport r = run_tournament(dag, cfg);
    REQUIRE(r.phase2);
    CHECK(r.phase2->challengers_registered == 0);
    CHECK(r.phase2->refunded);
    CHECK(r.trace_jsonl.find("RegTimeout") != std::string::npos);
}

TEST_CASE("open-and-abandon: verdict, slash, migration") {
    Dag dag = build_dag(2);
    std::vector<Strategy> st = {Strategy{PolicyKind::OpenAndAbandon}, Strategy::abstain()};
    RunConfig cfg = config(2, st);
    cfg.horizon = 12;
    RunReport r = run_tournament(dag, cfg);
    REQUIRE(r.oaa);
    CHECK(r.oaa->is_oaa);
    CHECK(r.oaa->opener == 1);
    CHECK(r.oaa->assertions_seen == 0);
    CHECK(r.phase1.winner == kNoOperator);
    bool slashed = false, migrated = false;
    for (const auto& ev : r.tc_events) {
        slashed |= ev.kind == TcEventKind::OaaSlashed && ev.oid == 1;
        migrated |= ev.kind == TcEventKind::Migrated && ev.oid == 1;
    }
    CHECK(slashed);
    CHECK(migrated);
}

TEST_CASE("participating opener is no open-and-abandon") {
    Dag dag = build_dag(2);
    std::vector<Strategy> st = {Strategy::honest(), Strategy::abstain()};
    RunConfig cfg = config(2, st);
    RunReport r = run_tournament(dag, cfg);
    REQUIRE(r.oaa);
    CHECK_FALSE(r.oaa->is_oaa);
    CHECK(r.oaa->assertions_seen == 1);
}

TEST_CASE("the honest watchdog issues at most one dual cut per round") {
    Dag dag = build_dag(8, false);
    std::vector<Strategy> st(8, Strategy::stall_after(1, 1)); // everyone goes dormant
    st[0] = Strategy::honest();
    RunConfig cfg = config(8, st);
    cfg.assertions = one_true(8);
    RunReport r = run_tournament(dag, cfg);
    CHECK(r.violations.empty());
    // rounds span ~3; a single honest party never exceeds one per round
    CHECK(r.dispute_timeouts_by[1] <= 3);
    CHECK(r.phase1.winner == 1);
}

TEST_CASE("ordering robustness: fuzzed intra-period orderings keep the outcome") {
    Dag dag = build_dag(4);
    std::vector<Strategy> st = {Strategy::honest(), Strategy::honest(),
                                Strategy::stall_after(1), Strategy::abstain()};
    RunConfig base = config(4, st);
    base.assertions = one_true(4);
    RunReport r0 = run_tournament(dag, base);
    for (uint64_t seed = 1; seed <= 25; ++seed) {
        RunConfig cfg = base;
        cfg.reorder_seed = seed;
        RunReport r = run_tournament(dag, cfg);
        CHECK(r.phase1.winner == r0.phase1.winner);
        CHECK(r.final_balance == r0.final_balance);
    }
}

TEST_CASE("identical configuration and seed give identical trace digests") {
    Dag dag = build_dag(4);
    std::vector<Strategy> st(4, Strategy::honest());
    RunConfig cfg = config(4, st);
    cfg.assertions = one_true(4);
    RunReport a = run_tournament(dag, cfg);
    RunReport b = run_tournament(dag, cfg);
    CHECK(a.trace_digest == b.trace_digest);
    CHECK(a.trace_jsonl == b.trace_jsonl);
}

TEST_CASE("parallel brackets") {
    BondParams bp;
    SUBCASE("Q=1 delegates to the full simulation") {
        auto out = run_parallel_brackets(8, 1, 100, bp, nullptr, {0, 1, 4, 6, 8, 10, 12, 14, 16}, 3);
        Dag dag = build_dag(8, false);
        RunConfig cfg = config(8, std::vector<Strategy>(8, Strategy::honest()));
        cfg.assertions = one_true(8);
        auto p1 = run_phase1(dag, cfg);
        CHECK(out.winner == p1.winner);
        CHECK(out.makespan == p1.makespan);
    }
    SUBCASE("N=1024: Q=16 cuts the makespan from 60 to 36 periods") {
        auto q1 = run_parallel_brackets(1024, 1, 1000, bp, nullptr, {}, 3);
        CHECK(q1.makespan == 60);
        auto q16 = run_parallel_brackets(1024, 16, 1000, bp, nullptr, {}, 3);
        CHECK(q16.makespan == 36);
        CHECK(q16.rounds == 6);
        CHECK(q16.winner == q1.winner);
    }
    SUBCASE("N=16, Q=4 runs 4-2=2 rounds") {
        auto out = run_parallel_brackets(16, 4, 1000, bp, nullptr, {}, 3);
        CHECK(out.rounds == 2);
    }
    SUBCASE("insufficient capital for Q concurrent bonds") {
        CHECK_THROWS_AS(run_parallel_brackets(16, 4, 39, bp, nullptr, {}, 3), SimError);
        CHECK_THROWS_AS(run_parallel_brackets(16, 3, 1000, bp, nullptr, {}, 3), SimError);
    }
}

TEST_CASE("two-party lottery: parity selector and forfeit rules") {
    CHECK(lottery_selector(0b1, 0b1) == 0);   // both odd parity: f = 0
    CHECK(lottery_selector(0b0, 0b0) == 0);
    CHECK(lottery_selector(0b1, 0b0) == 1);
    CHECK(lottery_selector(0b0, 0b1) == 1);
    // exhaustive over the four parity pairs: each side wins exactly twice
    int first = 0, second = 0;
    for (uint64_t a = 0; a <= 1; ++a)
        for (uint64_t b = 0; b <= 1; ++b)
            (lottery_selector(a, b) == 1 ? first : second)++;
    CHECK(first == 2);
    CHECK(second == 2);

    SUBCASE("a non-revealing party forfeits by timeout") {
        std::vector<LotteryParticipant> ps = {{1, 3, false, true}, {2, 5, true, true}};
        auto out = run_lottery(ps);
        CHECK(out.winner == 2);
        CHECK(out.forfeits.size() == 1);
    }
    SUBCASE("a reveal that misses the commitment forfeits the match") {
        std::vector<LotteryParticipant> ps = {{1, 3, true, true}, {2, 5, true, false}};
        auto out = run_lottery(ps);
        CHECK(out.winner == 1);
    }
    SUBCASE("the bracket needs quadratically many templates") {
        auto t8 = run_lottery(std::vector<LotteryParticipant>(8, {1, 0, true, true}));
        auto t16 = run_lottery(std::vector<LotteryParticipant>(16, {1, 0, true, true}));
        double ratio = double(t16.template_count) / double(t8.template_count);
        CHECK(ratio > 3.0);
        CHECK(ratio < 5.0);
    }
}

TEST_CASE("lottery fairness: win counts are equal under seed symmetry") {
    for (uint32_t n : {2u, 4u, 8u}) {
        std::map<OperatorId, int> wins;
        // exhaustive over all parity assignments, one seed bit per player
        for (uint32_t mask = 0; mask < (1u << n); ++mask) {
            std::vector<LotteryParticipant> ps;
            for (uint32_t i = 0; i < n; ++i)
                ps.push_back({i + 1, (mask >> i) & 1u, true, true});
            auto out = run_lottery(ps);
            REQUIRE(out.winner != kNoOperator);
            wins[out.winner]++;
        }
        for (const auto& [op, count] : wins)
            CHECK(count == static_cast<int>((1u << n) / n));
        CHECK(wins.size() == n);
    }
}

TEST_CASE("standalone phase-2 runner") {
    Dag dag = build_dag(4, true);
    Phase2Schedule sched;
    auto out = run_phase2(dag, 1, {2, 3, 4}, sched, nullptr, {1, 4, 6, 8}, 21);
    CHECK(out.refunded);
    CHECK(out.challengers_registered == 3);
    CHECK(out.rounds_used == 2); // 1 + 2 covers three challengers
}

TEST_CASE("contest build: the counter-proof rides BobInput before resolution") {
    DagParams p;
    p.n_ops = 2;
    p.contest_inputs = true;
    DagBuilder b(p);
    b.build_tc();
    b.build_phase1(0, 0);
    b.build_phase2(0);
    Dag dag = b.take();

    RunConfig cfg = config(2, {Strategy::honest(), Strategy::honest()});
    cfg.assertions = one_true(2, 2); // operator 1 defends a false claim
    cfg.contest_method = "B";
    RunReport r = run_tournament(dag, cfg);
    CHECK(r.violations.empty());
    CHECK(r.phase1.winner == 2);
    CHECK(r.trace_jsonl.find("BobInput") != std::string::npos);
    CHECK(r.phase1.makespan == 6);

    // with a true assertion the challenger never counter-inputs
    RunConfig cfg2 = config(2, {Strategy::honest(), Strategy::honest()});
    cfg2.assertions = one_true(2);
    cfg2.contest_method = "B";
    RunReport r2 = run_tournament(dag, cfg2);
    CHECK(r2.phase1.winner == 1);
    CHECK(r2.trace_jsonl.find("BobInput") == std::string::npos);
    // method A adds the co-signature step
    RunConfig cfg3 = cfg;
    cfg3.contest_method = "A";
    RunReport r3 = run_tournament(dag, cfg3);
    CHECK(r3.phase1.winner == 2);
    CHECK(r3.trace_jsonl.find("AliceInputCoSig") != std::string::npos);
}

TEST_CASE("disable secrets: losing reveals, revealed parties cannot re-enter") {
    Dag dag = build_dag(4, true);
    std::vector<Strategy> st(4, Strategy::honest(true)); // everyone contests phase 2
    RunConfig cfg = config(4, st);
    cfg.assertions = one_true(4);
    cfg.disable_method = "direct";
    RunReport r = run_tournament(dag, cfg);
    CHECK(r.violations.empty());
    CHECK(r.phase1.winner == 1);
    // every dispute loser was revealed and later blocked from challenging
    CHECK(r.disabled_parties == std::vector<OperatorId>{2, 3, 4});
    CHECK(r.blocked_actions >= 3);
    REQUIRE(r.phase2);
    CHECK(r.phase2->challengers_registered == 0);
    CHECK(r.phase2->refunded);
    // without the toggle the same strategies do challenge
    RunConfig cfg2 = cfg;
    cfg2.disable_method = "none";
    RunReport r2 = run_tournament(dag, cfg2);
    REQUIRE(r2.phase2);
    CHECK(r2.phase2->challengers_registered == 3);
}

TEST_CASE("threshold disable only bites after enough distinct losses") {
    Dag dag = build_dag(4, true);
    std::vector<Strategy> st(4, Strategy::honest(true));
    RunConfig cfg = config(4, st);
    cfg.assertions = one_true(4);
    cfg.disable_method = "threshold";
    cfg.disable_threshold = 2; // one phase-1 loss is not enough
    RunReport r = run_tournament(dag, cfg);
    CHECK(r.phase1.winner == 1);
    REQUIRE(r.phase2);
    // phase-1 losers each lost once; they may still challenge. Operator 3
    // then loses the phase-2 dispute to a second distinct party and crosses
    // the threshold; 2 and 4 lose twice to the same winner and stay enabled.
    CHECK(r.phase2->challengers_registered == 3);
    CHECK(r.disabled_parties == std::vector<OperatorId>{3});
}
