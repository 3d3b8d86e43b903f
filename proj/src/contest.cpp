#include "tournsim/contest.hpp"

#include <nlohmann/json.hpp>

namespace tournsim {

using nlohmann::json;

const char* to_string(ValidateResult r) {
    switch (r) {
        case ValidateResult::Accept: return "Accept";
        case ValidateResult::ScoreNotGreater: return "ScoreNotGreater";
        case ValidateResult::FieldMismatch: return "FieldMismatch";
    }
    return "?";
}

const char* to_string(DepositFate f) {
    switch (f) {
        case DepositFate::Held: return "Held";
        case DepositFate::RefundedToOwner: return "RefundedToOwner";
        case DepositFate::PaidToOpponent: return "PaidToOpponent";
    }
    return "?";
}

uint64_t SyntheticChain::score() const {
    uint64_t s = 0;
    for (const auto& b : blocks) s += b.score_increment;
    return s;
}

uint64_t SyntheticChain::score_up_to(uint32_t block_exclusive) const {
    uint64_t s = 0;
    for (uint32_t i = 0; i < block_exclusive && i < blocks.size(); ++i)
        s += blocks[i].score_increment;
    return s;
}

bool SyntheticChain::has_event(uint64_t pegout_id, const PegOutPos& pos) const {
    if (pos.block >= blocks.size()) return false;
    for (const auto& [id, tx] : blocks[pos.block].events)
        if (id == pegout_id && tx == pos.tx_index) return true;
    return false;
}

bool SyntheticChain::has_event_anywhere(uint64_t pegout_id) const {
    for (const auto& b : blocks)
        for (const auto& [id, tx] : b.events)
            if (id == pegout_id) return true;
    return false;
}

std::string SyntheticChain::to_json() const {
    json doc = json::array();
    for (const auto& b : blocks) {
        json jb;
        jb["score"] = b.score_increment;
        json evs = json::array();
        for (const auto& [id, tx] : b.events) evs.push_back({{"pegout", id}, {"tx", tx}});
        jb["events"] = std::move(evs);
        doc.push_back(std::move(jb));
    }
    return doc.dump();
}

SyntheticChain SyntheticChain::from_json(const std::string& text) {
    SyntheticChain c;
    json doc = json::parse(text);
    for (const auto& jb : doc) {
        ChainBlock b;
        b.score_increment = jb.at("score").get<uint64_t>();
        for (const auto& e : jb.at("events"))
            b.events.emplace_back(e.at("pegout").get<uint64_t>(), e.at("tx").get<uint32_t>());
        c.blocks.push_back(std::move(b));
    }
    return c;
}

bool ProofOracle::verifies_a(const ChainClaim& claim, const SyntheticChain& chain) const {
    if (!chain.has_event(claim.pegout_id, claim.pegout_pos)) return false;
    if (chain.score() != claim.score) return false;
    uint64_t past = chain.score() - chain.score_up_to(claim.pegout_pos.block + 1);
    return past >= min_work_past_event;
}

bool ProofOracle::verifies_b(const ChainClaim& claim, const SyntheticChain& chain) const {
    if (chain.score() != claim.score) return false;
    return !chain.has_event(claim.pegout_id, claim.pegout_pos);
}

ValidateResult validate_bob_input(uint64_t s_a, uint64_t s_b, uint64_t copied_pegout_id,
                                  const PegOutPos& copied_pos, uint64_t alice_pegout_id,
                                  const PegOutPos& alice_pos) {
    if (copied_pegout_id != alice_pegout_id || !(copied_pos == alice_pos))
        return ValidateResult::FieldMismatch;
    if (s_b <= s_a) return ValidateResult::ScoreNotGreater;
    return ValidateResult::Accept;
}

PayoutResolution resolve_payouts(const RevealSet& reveals, const TimeoutFlags& timeouts) {
    if (!reveals.consistent()) throw SimError("ConflictingReveals");
    PayoutResolution out;
    // Decisive secrets first; a transfer-on-secret beats a refund-on-secret.
    if (reveals.ca_false) {
        out.alice_deposit = DepositFate::PaidToOpponent;
        out.bob_deposit = reveals.cb_false ? DepositFate::PaidToOpponent
                                           : DepositFate::RefundedToOwner;
        return out;
    }
    if (reveals.cb_false) {
        out.bob_deposit = DepositFate::PaidToOpponent;
        out.alice_deposit = DepositFate::RefundedToOwner;
        return out;
    }
    // No decisive secret. Both-true is the known gap: neither deposit can
    // move between the parties, so only a persistent bond can punish.
    if (reveals.ca_true && reveals.cb_true) out.persistent_slash_required = true;
    if (timeouts.alice_deposit) out.alice_deposit = DepositFate::RefundedToOwner;
    if (timeouts.bob_deposit) out.bob_deposit = DepositFate::RefundedToOwner;
    return out;
}

DualProofWinner resolve_dual_proof(const ChainClaim& claim_a, const SyntheticChain& chain_a,
                                   const ChainClaim& claim_b, const SyntheticChain& chain_b,
                                   const ProofOracle& oracle) {
    bool a_ok = oracle.verifies_a(claim_a, chain_a);
    bool b_ok = oracle.verifies_b(claim_b, chain_b);
    if (!a_ok && !b_ok) return DualProofWinner::BothInvalid;
    if (a_ok && !b_ok) return DualProofWinner::Alice;
    if (!a_ok && b_ok) return DualProofWinner::Bob;
    // fork choice: the counter-proof needs strictly higher cumulative work
    return claim_b.score > claim_a.score ? DualProofWinner::Bob : DualProofWinner::Alice;
}

bool avp_screen(const Assertion& assertion) {
    if (assertion.chain.blocks.empty()) throw SimError("MalformedAssertion");
    // direct walk over the claimed position
    const auto& blocks = assertion.chain.blocks;
    if (assertion.pos.block >= blocks.size()) return false;
    for (const auto& [id, tx] : blocks[assertion.pos.block].events)
        if (id == assertion.pegout_id && tx == assertion.pos.tx_index) return true;
    return false;
}

bool avp_circuit(const Assertion& assertion) {
    if (assertion.chain.blocks.empty()) throw SimError("MalformedAssertion");
    // independent route: scan every event and compare located coordinates
    for (uint32_t b = 0; b < assertion.chain.blocks.size(); ++b)
        for (const auto& [id, tx] : assertion.chain.blocks[b].events)
            if (id == assertion.pegout_id && PegOutPos{b, tx} == assertion.pos) return true;
    return false;
}

} // namespace tournsim
