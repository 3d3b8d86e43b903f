#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tournsim/types.hpp"

namespace tournsim {

enum class TemplateKind : uint8_t {
    TCStart,
    OpenTournament,
    RegistrationPhase1, // per-slot anchor: spends StartPhase1, emits selectors and gates
    EnableRound,        // per-operator chain link; round 1 is the operator's registration
    BobChallenge,
    NoBobChallenge,
    AsserterTimeout,
    DisputeTimeout,
    WinPhase1,
    StartTournament,
    RegInPhase2,
    RegTimeout,
    TryEarlyRefund,
    StillOpen,
    Refund,
    AliceInput,
    BobInput,
    AliceInputCoSig,
    AliceWasDisabled,
    BobWasDisabled,
    FlexInternal,
};

const char* to_string(TemplateKind k);

// Sub-step label for FlexInternal templates.
enum class FlexStep : uint8_t {
    None,
    ResolveAliceWins,
    ResolveBobWins,
    BobWinsTimeout, // Alice missed her bond/input deadline
};

const char* to_string(FlexStep s);

enum class OutputRole : uint8_t {
    NextLink,
    StartPhase1,
    WinnerSelector,
    FinalSelector,
    RegGate,
    RoleEnabler,     // per-round assert/challenge enabler
    ChainLink,       // feeds the operator's next EnableRound
    TerminalEnabler,
    Phase2Activation,
    ReimburseEnabler,
    Phase2RegGate,
    Phase2BobEnabler,
    Phase2RegMark,
    DisputeState,
    ReimbursementTried,
    RefundPaid,
    Marker,
};

const char* to_string(OutputRole r);

struct TemplateInput {
    TemplateId producer = kExternalFunding;
    uint16_t out_index = 0;
    uint16_t required_timelock = 0; // periods, relative to producer confirmation
};

struct TemplateOutput {
    OutputRole role = OutputRole::Marker;
    int64_t value = 0;
    uint16_t relative_timelock = 0; // floor applying to every spend path
    std::vector<OperatorId> spenders;
};

struct TxTemplate {
    TemplateKind kind = TemplateKind::FlexInternal;
    FlexStep step = FlexStep::None;
    uint32_t slot = 0;      // TC slot binding
    OperatorId alice = kNoOperator;
    OperatorId bob = kNoOperator;
    uint16_t round = 0;     // bracket round, or phase-2 challenger position
    std::vector<TemplateInput> inputs;
    std::vector<TemplateOutput> outputs;
    std::vector<OperatorId> authorized; // empty = anyone may broadcast
    std::vector<OperatorId> signers;
    int32_t component = -1; // back-reference into Dag::components
    uint64_t txid = 0;      // content hash, filled by the builder

    bool may_broadcast(OperatorId op) const {
        if (authorized.empty()) return true;
        for (OperatorId a : authorized)
            if (a == op) return true;
        return false;
    }
};

// One pre-signed two-party dispute component and its surrounding templates.
struct FlexComponentRef {
    OperatorId alice = kNoOperator; // asserter
    OperatorId bob = kNoOperator;   // challenger
    uint16_t round = 0;             // phase-1 round, or phase-2 scheduled round bound
    uint8_t phase = 1;
    uint32_t slot = 0;
    int delay_a = 0, delay_b = 0;   // epochs
    uint16_t bracket_slot = 0;      // phase 1: index into SlotRefs::matches
    uint32_t challenger_pos = 0;    // phase 2: position in the potential-challenger list

    TemplateId bob_challenge = -1;
    TemplateId no_bob_challenge = -1;      // cuts a registered-but-silent challenger
    TemplateId no_bob_challenge_unreg = -1; // round 1 only: challenger never registered
    TemplateId asserter_timeout = -1;       // round 1 only: defender never registered
    TemplateId alice_input = -1;            // carries Alice's bond and circuit input
    TemplateId bob_input = -1;              // contest builds only
    TemplateId alice_cosig = -1;            // contest builds only
    TemplateId resolve_alice = -1;
    TemplateId resolve_bob = -1;
    TemplateId bob_timeout = -1;
    TemplateId still_open[2] = {-1, -1};    // phase 2: pre-/post-input variants
};

// A bracket match slot: round, position, and the participant sets feeding it.
struct MatchSlotRef {
    uint16_t round = 0;
    uint16_t index = 0;          // 0-based within the round
    uint16_t selector_output = 0; // output index on the anchor
    TemplateId dispute_timeout = -1;
    std::vector<OperatorId> left, right; // real operators in each subtree
};

struct OperatorChainRef {
    std::vector<TemplateId> enable; // enable[r-1] = EnableRound(r); r = 1..R+1
    TemplateId win_phase1 = -1;
    uint16_t reg_gate_output = 0; // output index on the anchor
};

struct Phase2Ref {
    OperatorId asserter = kNoOperator;
    TemplateId start = -1;
    TemplateId try_early_refund = -1;
    TemplateId early_refund = -1;
    TemplateId refund = -1;
    std::vector<OperatorId> challengers;       // potential challengers, id order
    std::vector<TemplateId> reg_in;            // per challenger
    std::vector<TemplateId> reg_timeout;       // per challenger
    std::vector<uint32_t> components;          // indices into Dag::components
};

struct SlotRefs {
    uint32_t link_index = 0;
    uint16_t start_output = 0; // StartPhase1 output index on the link
    TemplateId link = -1;
    TemplateId anchor = -1;
    uint16_t final_selector_output = 0;
    std::vector<OperatorChainRef> chains; // indexed by operator-1
    std::vector<MatchSlotRef> matches;
    std::vector<uint32_t> components; // phase-1 component indices
    std::vector<Phase2Ref> phase2;    // one per potential asserter (empty if phase1_only)
};

struct DagStats {
    uint64_t template_count = 0;
    uint64_t signature_count = 0;
    uint64_t per_party_storage_bytes = 0; // max over parties
};

struct DagParams {
    uint32_t n_ops = 2;
    uint32_t tc_links = 1;          // W
    uint32_t inter_link_timelock = 2 + 2; // t, in epochs
    uint32_t starts_per_link = 1;   // m
    // C; 0 means N-1. May exceed N-1: the surplus challenger slots belong to
    // watchtowers (ids N+1..) that never assert.
    uint32_t max_challengers = 0;
    uint32_t phase2_rounds = 0;     // R; 0 means ceil(log2(C+1))
    bool include_phase2 = true;
    bool contest_inputs = false;    // add BobInput/co-sign templates to every component
    uint32_t registration_window = 1; // periods
    uint64_t permutation_seed = 1;  // challenger-order permutations per slot
    // committee-rate mode: the pre-signed floor is ceil(T_Z/N); the i-of-N
    // leaf actually used is enforced at broadcast time
    Period committee_t_z = 0;
    // disjoint-namespace tag for parallel chain deployments
    uint32_t namespace_tag = 0;
    // off by default: phase-1 penalizations also emit per-asserter outputs
    // whose cancellation templates consume the loser's phase-2 challenger
    // gates (costs an extra factor of N in templates)
    bool exclude_phase1_losers = false;
};

class Dag {
public:
    DagParams params;
    uint32_t rounds = 1;        // R = ceil(log2 N)
    uint32_t bracket_size = 2;  // N rounded up to a power of two
    std::vector<TxTemplate> templates;
    std::vector<FlexComponentRef> components;
    std::vector<TemplateId> tc_links; // [0] = TCStart
    std::vector<SlotRefs> slots;

    const TxTemplate& tpl(TemplateId id) const { return templates[static_cast<size_t>(id)]; }
    uint32_t output_count() const { return total_outputs_; }
    uint32_t output_base(TemplateId id) const { return out_offset_[static_cast<size_t>(id)]; }

    uint32_t challenger_count() const {
        return params.max_challengers == 0 ? params.n_ops - 1 : params.max_challengers;
    }
    // Operators plus any watchtower-only challengers.
    uint32_t total_parties() const {
        uint32_t c = challenger_count();
        return params.n_ops + (c > params.n_ops - 1 ? c - (params.n_ops - 1) : 0);
    }

    DagStats stats() const;
    uint64_t per_party_bytes(OperatorId op) const;
    uint64_t subgraph_digest(OperatorId op) const;

    std::string export_json() const;

    void finalize(); // computes txids and output offsets

private:
    std::vector<uint32_t> out_offset_;
    uint32_t total_outputs_ = 0;
    uint64_t encoded_template_bytes(const TxTemplate& t) const;
    friend class DagBuilder;
};

// Counting-only estimate of the full per-slot inventory, used where
// materializing the graph would be absurd (N ~ 1000).
struct DagCounts {
    uint64_t templates = 0;
    uint64_t signatures = 0;
    uint64_t max_party_bytes = 0;
};
DagCounts count_slot_dag(uint32_t n_ops, uint32_t max_challengers, bool include_phase2);

class DagBuilder {
public:
    explicit DagBuilder(DagParams p);

    // Definition-1 chain: TCStart -> OpenTournament_1 -> ... -> OpenTournament_W.
    void build_tc();
    // Full phase-1 fragment for one slot: anchor, registrations, enabler
    // chains, FLEX components, stall detectors and the WinPhase1 handoff.
    void build_phase1(uint32_t link_index, uint16_t start_output);
    // N mutually exclusive phase-2 tournaments for the same slot.
    void build_phase2(uint32_t slot_index);

    Dag take();

    // Bracket helpers (1-based positions; operators above n_ops are ghosts).
    static uint16_t meeting_round(uint32_t pos_a, uint32_t pos_b);
    static bool left_of(uint32_t pos_a, uint32_t pos_b, uint16_t round);

private:
    Dag dag_;
    TemplateId add(TxTemplate t);
};

// Structural diff between two exports; empty string means identical.
std::string dag_diff(const std::string& export_a, const std::string& export_b);

// Admission interval: two registration windows plus the worst-case rounds,
// in epochs.
inline uint32_t recommended_inter_link_timelock(uint32_t n_ops) {
    return 2 + 2 * ceil_log2(n_ops);
}

// What-if: letting an arbitrary opener fund the admission bond would require
// one pre-signed DAG variant per would-be opener (the funding txid cannot be
// made opener-agnostic), multiplying the template count by N.
inline uint64_t opener_funded_admission_templates(uint64_t base_templates, uint32_t n_ops) {
    return base_templates * n_ops;
}

} // namespace tournsim
