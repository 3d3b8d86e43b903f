#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tournsim/types.hpp"

namespace tournsim {

// Synthetic chain model: an ordered list of blocks, each contributing a
// score increment and carrying peg-out events. Cumulative difficulty is the
// sum of increments; that scalar is all the fork choice needs.
struct PegOutPos {
    uint32_t block = 0;
    uint32_t tx_index = 0;
    bool operator==(const PegOutPos&) const = default;
    auto operator<=>(const PegOutPos&) const = default;
};

struct ChainBlock {
    uint64_t score_increment = 1;
    std::vector<std::pair<uint64_t, uint32_t>> events; // (PegOutID, tx index)
};

struct SyntheticChain {
    std::vector<ChainBlock> blocks;
    uint64_t score() const;
    uint64_t score_up_to(uint32_t block_exclusive) const;
    bool has_event(uint64_t pegout_id, const PegOutPos& pos) const;
    bool has_event_anywhere(uint64_t pegout_id) const;

    std::string to_json() const;
    static SyntheticChain from_json(const std::string& text);
};

struct ChainClaim {
    uint64_t pegout_id = 0;
    PegOutPos pegout_pos;
    uint64_t score = 0;          // S_A or S_B as stated by the prover
    bool contains_event = true;  // what the claim says about the event
    uint64_t work_past_event = 0; // w
};

// The two predicate oracles standing in for SNARK_A / SNARK_B.
struct ProofOracle {
    uint64_t min_work_past_event = 0; // predetermined w

    // (i) event at PegOutPos, (ii) event id matches, (iii) chain score == S_A,
    // (iv) at least w work past the event.
    bool verifies_a(const ChainClaim& claim, const SyntheticChain& chain) const;
    // (i) chain score == S_B, (ii) no PegOutID event at PegOutPos.
    bool verifies_b(const ChainClaim& claim, const SyntheticChain& chain) const;
};

enum class ValidateResult : uint8_t { Accept, ScoreNotGreater, FieldMismatch };

const char* to_string(ValidateResult r);

// Script-side check on BobInput: Bob must copy Alice's signed PegOutID and
// PegOutPos, and his score must be strictly greater.
ValidateResult validate_bob_input(uint64_t s_a, uint64_t s_b,
                                  uint64_t copied_pegout_id, const PegOutPos& copied_pos,
                                  uint64_t alice_pegout_id, const PegOutPos& alice_pos);

enum class RevealFlag : uint8_t { CaTrue, CaFalse, CbTrue, CbFalse };

struct RevealSet {
    bool ca_true = false, ca_false = false, cb_true = false, cb_false = false;
    bool consistent() const { return !(ca_true && ca_false) && !(cb_true && cb_false); }
};

struct TimeoutFlags {
    bool alice_deposit = false; // Alice's deposit timelock branches elapsed
    bool bob_deposit = false;
};

enum class DepositFate : uint8_t { Held, RefundedToOwner, PaidToOpponent };

const char* to_string(DepositFate f);

struct PayoutResolution {
    DepositFate alice_deposit = DepositFate::Held;
    DepositFate bob_deposit = DepositFate::Held;
    bool persistent_slash_required = false;
};

// Applies the four payout branches. Throws SimError("ConflictingReveals") on
// a per-circuit True+False pair.
PayoutResolution resolve_payouts(const RevealSet& reveals, const TimeoutFlags& timeouts);

enum class DualProofWinner : uint8_t { Alice, Bob, BothInvalid };

// Dual-proof mode: both proofs are fed to both circuits and the fork-choice
// rule picks the winner. The counter-proof must be strictly heavier.
DualProofWinner resolve_dual_proof(const ChainClaim& claim_a, const SyntheticChain& chain_a,
                                   const ChainClaim& claim_b, const SyntheticChain& chain_b,
                                   const ProofOracle& oracle);

// Relative verifier cost: the dual-proof circuit embeds two verifiers.
inline int verifier_cost_units(bool dual_proof) { return dual_proof ? 2 : 1; }

struct Assertion {
    uint64_t pegout_id = 0;
    PegOutPos pos;
    SyntheticChain chain; // the claimed canonical chain
};

// Off-chain screen; must agree with the circuit-side oracle on every input.
// Throws SimError("MalformedAssertion") on an empty chain.
bool avp_screen(const Assertion& assertion);

// Circuit-side evaluation of the same predicate, implemented independently.
bool avp_circuit(const Assertion& assertion);

} // namespace tournsim
