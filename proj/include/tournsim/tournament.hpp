#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tournsim/dag.hpp"
#include "tournsim/economics.hpp"
#include "tournsim/flex.hpp"
#include "tournsim/ledger.hpp"
#include "tournsim/tc.hpp"

namespace tournsim {

enum class PolicyKind : uint8_t {
    Honest,
    Abstain,
    StallAfterRound,
    CensorBudget,
    OpenAndAbandon,
    EquivocateAssertion,
    LateRegister,
};

const char* to_string(PolicyKind k);

struct Strategy {
    PolicyKind kind = PolicyKind::Honest;
    // StallAfterRound: play honestly through `stall_round`, then go silent.
    // stall_step >= 0 stalls mid-round after that many own moves instead.
    uint32_t stall_round = 0;
    int32_t stall_step = -1;
    // CensorBudget: fraction of a period (< 1.0) added to others' broadcasts.
    double censor_fraction = 0.0;
    // Honest challengers normally screen with the AVP and only dispute
    // assertions it rejects; challenge_all disputes everything (worst case).
    bool challenge_all = false;
    // LateRegister: period offset past the window end.
    Period late_by = 1;

    static Strategy honest(bool aggressive = false) {
        Strategy s;
        s.challenge_all = aggressive;
        return s;
    }
    static Strategy abstain() { return Strategy{PolicyKind::Abstain}; }
    static Strategy stall_after(uint32_t round, int32_t step = -1) {
        Strategy s;
        s.kind = PolicyKind::StallAfterRound;
        s.stall_round = round;
        s.stall_step = step;
        return s;
    }
};

// Enablement-chain case labels from the stall-handling analysis.
enum class ChainCase : uint8_t {
    Case1Challenged,  // both enabled, challenged, stalled -> dual cut
    Case1NoChallenge, // both enabled, Alice cancels and advances
    Case1Dormant,     // both enabled, nobody moves -> dual cut
    Case2AliceOnly,   // walkover for Alice
    Case3BobOnly,     // walkover for Bob
    Case4Neither,     // no action possible or required
    CaseResolved,     // an actual dispute resolved
};

const char* to_string(ChainCase c);

struct MatchOutcome {
    uint16_t round = 0;
    uint16_t index = 0;
    ChainCase chain_case = ChainCase::Case4Neither;
    OperatorId advanced = kNoOperator; // 0 = nobody advanced from this slot
    bool dual_cut = false;
};

struct Phase1Outcome {
    OperatorId winner = kNoOperator; // 0 = no WinPhase1 confirmed
    std::vector<OperatorId> eliminated;
    Period makespan = -1; // anchor -> WinPhase1, in periods
    uint32_t win_phase1_confirmations = 0;
    std::vector<MatchOutcome> matches;
};

struct Phase2Outcome {
    bool refunded = false;
    bool early_refund = false;
    uint32_t rounds_used = 0;
    uint32_t challengers_registered = 0;
    Period finished_at = -1;
};

struct RunConfig {
    uint32_t n_ops = 2;
    uint64_t seed = 1;
    std::vector<Strategy> strategies;    // indexed by operator-1
    std::vector<uint64_t> assertions;    // assertion id per operator (1-based index 0 unused ok)
    std::function<bool(uint64_t)> avp;   // defaults to: assertion id 1 is true
    bool phase1_only = false;
    bool skip_cancellations = false;     // phase 2: wait for the deadline Refund
    Phase2Schedule schedule;
    BondParams bonds;
    int64_t starting_balance = 1'000'000;
    int64_t apsb = 100;                  // persistent side-system bond per operator
    Period side_system_latency = 2;      // O&A removal/migration decision delay
    Period horizon = 0;                  // 0 = derived from N
    Period extra_confirmation_periods = 0;
    uint32_t registration_window = 1;
    std::optional<uint64_t> reorder_seed; // intra-period fuzz permutations
    std::vector<OperatorId> phase2_challengers; // empty = every non-winner with a willing strategy
    // misbehavior lever: the asserter claims the early refund at this period
    // even with disputes open (-1 = never)
    Period premature_refund_at = -1;
    std::string contest_method = "none"; // none | A | B (needs a contest-input build)
    std::string disable_method = "none"; // none | direct | pairwise | threshold
    uint32_t disable_threshold = 2;
};

struct RunReport {
    Phase1Outcome phase1;
    std::optional<Phase2Outcome> phase2;
    std::optional<OaaVerdict> oaa;
    std::vector<std::string> violations; // soundness/conservation breaches
    uint64_t trace_digest = 0;
    std::vector<int64_t> final_balance;  // 1-based, [0] unused
    std::vector<int64_t> peak_drawdown;  // 1-based
    std::vector<CapitalEvent> capital_events;
    std::vector<FlexTransition> flex_log;
    std::map<ChainCase, uint32_t> case_coverage;
    std::vector<OperatorId> disabled_parties;  // via revealed disable secrets
    uint32_t blocked_actions = 0;              // attempts stopped by WasDisabled branches
    std::vector<uint32_t> dispute_timeouts_by; // per op: count of dual cuts issued
    std::vector<TcEvent> tc_events;
    std::string trace_jsonl;
    Period end_period = 0;
};

// Executes phase 1 (and phase 2 unless configured off) of one slot against a
// fresh ledger, driven by the per-operator strategies.
RunReport run_tournament(const Dag& dag, const RunConfig& cfg);

Phase1Outcome run_phase1(const Dag& dag, const RunConfig& cfg);

// Runs phase 2 in isolation: the given asserter wins an uncontested phase 1
// and then faces exactly `challengers` under `schedule`.
Phase2Outcome run_phase2(const Dag& dag, OperatorId asserter,
                         const std::vector<OperatorId>& challengers,
                         const Phase2Schedule& schedule,
                         const std::function<bool(uint64_t)>& avp,
                         const std::vector<uint64_t>& assertions, uint64_t seed);

// Parallel-bracket mode: Q = 2^k independent brackets funded by AMIC.
struct ParallelOutcome {
    OperatorId winner = kNoOperator;
    uint32_t rounds = 0;
    Period makespan = 0;
};
ParallelOutcome run_parallel_brackets(uint32_t n_ops, uint32_t q, int64_t amic,
                                      const BondParams& bonds,
                                      const std::function<bool(uint64_t)>& avp,
                                      const std::vector<uint64_t>& assertions,
                                      uint64_t seed);

// Multiparty lottery reduction: commit H(seed), reveal, parity selector.
struct LotteryParticipant {
    OperatorId id = kNoOperator;
    uint64_t seed = 0;
    bool reveals = true;
    bool reveal_matches_commit = true;
};

struct LotteryOutcome {
    OperatorId winner = kNoOperator;
    std::vector<std::string> forfeits; // "op reason" per non-revealer/mismatch
    uint64_t template_count = 0;       // pre-signed templates the bracket needs
};

// Selector for one two-party lottery; 1 means the first (asserter-side) party wins.
inline int lottery_selector(uint64_t a, uint64_t b) {
    auto parity = [](uint64_t v) { return static_cast<int>(__builtin_popcountll(v) & 1); };
    return (parity(a) + parity(b)) % 2;
}

LotteryOutcome run_lottery(const std::vector<LotteryParticipant>& participants);

} // namespace tournsim
