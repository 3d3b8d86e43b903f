#pragma once

#include <optional>
#include <vector>

#include "tournsim/ledger.hpp"
#include "tournsim/types.hpp"

namespace tournsim {

enum class FlexState : uint8_t {
    Dormant,
    Challenged,
    BondsPosted,
    InputsPublished,
    Resolved,
    TimedOutCut,
    Cancelled,
};

const char* to_string(FlexState s);

enum class FlexEventType : uint8_t {
    BobChallenge,
    NoBobChallenge,
    PostBond,
    AliceInput,
    BobInput,
    ResolveByAvp,
    StillOpen,
    Timeout,
};

const char* to_string(FlexEventType t);

struct FlexEvent {
    FlexEventType type;
    OperatorId party = kNoOperator; // for PostBond; for Timeout, the late party
    Period at = 0;
};

enum class FlexStepResult : uint8_t { Ok, IllegalTransition, DeadlineExceeded };

struct FlexTransition {
    Period period;
    FlexEventType event;
    FlexState before;
    FlexState after;
    int32_t instance = -1; // filled by the runner when logs are aggregated
};

// Deterministic verdict oracle; the asserter can evaluate it before
// submitting, and the same predicate settles the dispute on-chain.
struct Avp {
    std::function<bool(uint64_t assertion)> verdict;
    Period evaluation_bound = 1; // T_avp

    bool operator()(uint64_t assertion) const { return verdict(assertion); }
};

// One augmented two-party dispute: five named inputs, per-move deadlines
// derived from the (A, B) epoch delays, and cut-next bookkeeping.
class FlexInstance {
public:
    OperatorId alice = kNoOperator;
    OperatorId bob = kNoOperator;
    int delay_a = 0; // epochs
    int delay_b = 0;

    // Input wiring; unwired optional inputs stay disengaged and every
    // transaction that would consume them runs in the omitting variant.
    std::optional<Outpoint> alice_can_win;     // alias: next Alice enabler
    std::optional<Outpoint> bob_enabler;
    std::optional<Outpoint> alice_tries_early; // optional
    std::optional<Outpoint> alice_enabler;
    std::optional<Outpoint> next_bob_enabler;  // optional

    Period scheduled_start = 0; // when the match window opens
    uint64_t assertion = 0;     // what Alice defends in this dispute

    FlexState state = FlexState::Dormant;
    OperatorId winner = kNoOperator;
    bool alice_bonded = false;
    bool bob_bonded = false;
    bool input_published = false;
    bool counter_input_published = false;
    Period challenged_at = -1;

    std::vector<FlexTransition> log;

    // Deadlines, all in periods. Bob moves first; Alice's window starts
    // after Bob's whole delay window, not after his actual move.
    Period challenge_deadline() const { return scheduled_start + 1 + epochs(delay_b); }
    Period bob_bond_deadline() const { return challenge_deadline(); }
    Period alice_bond_deadline() const { return challenge_deadline() + 1 + epochs(delay_a); }
    Period alice_input_deadline() const { return alice_bond_deadline() + 1; }
    Period resolution_deadline() const { return alice_input_deadline() + 1; }

    FlexStepResult step(const FlexEvent& ev, const Avp& avp);

    // Registration-window cut: the counterparty never entered, so the
    // dispute is retired without opening (not part of the in-dispute event
    // alphabet; deadlines do not apply).
    void cancel_unopened(Period at) {
        if (terminal()) return;
        transition(FlexState::Cancelled, FlexEvent{FlexEventType::NoBobChallenge, kNoOperator, at});
    }

    // Longest BobChallenge -> Resolved span with every actor moving at the
    // last admissible period.
    Period worst_case_timeline() const { return 4 + epochs(delay_a) + epochs(delay_b); }

    // Outpoints the winner consumes to disable the loser's next link.
    // Empty when the loser's next enabler is unwired.
    std::vector<Outpoint> cut_next(OperatorId loser) const;

    bool terminal() const {
        return state == FlexState::Resolved || state == FlexState::TimedOutCut ||
               state == FlexState::Cancelled;
    }

private:
    static Period epochs(int e) { return static_cast<Period>(e) * kPeriodsPerEpoch; }
    void transition(FlexState next, const FlexEvent& ev);
};

} // namespace tournsim
