#include "tournsim/dag.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tournsim/prng.hpp"

namespace tournsim {

using nlohmann::json;

const char* to_string(TemplateKind k) {
    switch (k) {
        case TemplateKind::TCStart: return "TCStart";
        case TemplateKind::OpenTournament: return "OpenTournament";
        case TemplateKind::RegistrationPhase1: return "RegistrationPhase1";
        case TemplateKind::EnableRound: return "EnableRound";
        case TemplateKind::BobChallenge: return "BobChallenge";
        case TemplateKind::NoBobChallenge: return "NoBobChallenge";
        case TemplateKind::AsserterTimeout: return "AsserterTimeout";
        case TemplateKind::DisputeTimeout: return "DisputeTimeout";
        case TemplateKind::WinPhase1: return "WinPhase1";
        case TemplateKind::StartTournament: return "StartTournament";
        case TemplateKind::RegInPhase2: return "RegInPhase2";
        case TemplateKind::RegTimeout: return "RegTimeout";
        case TemplateKind::TryEarlyRefund: return "TryEarlyRefund";
        case TemplateKind::StillOpen: return "StillOpen";
        case TemplateKind::Refund: return "Refund";
        case TemplateKind::AliceInput: return "AliceInput";
        case TemplateKind::BobInput: return "BobInput";
        case TemplateKind::AliceInputCoSig: return "AliceInputCoSig";
        case TemplateKind::AliceWasDisabled: return "AliceWasDisabled";
        case TemplateKind::BobWasDisabled: return "BobWasDisabled";
        case TemplateKind::FlexInternal: return "FlexInternal";
    }
    return "?";
}

const char* to_string(FlexStep s) {
    switch (s) {
        case FlexStep::None: return "None";
        case FlexStep::ResolveAliceWins: return "ResolveAliceWins";
        case FlexStep::ResolveBobWins: return "ResolveBobWins";
        case FlexStep::BobWinsTimeout: return "BobWinsTimeout";
    }
    return "?";
}

const char* to_string(OutputRole r) {
    switch (r) {
        case OutputRole::NextLink: return "NextLink";
        case OutputRole::StartPhase1: return "StartPhase1";
        case OutputRole::WinnerSelector: return "WinnerSelector";
        case OutputRole::FinalSelector: return "FinalSelector";
        case OutputRole::RegGate: return "RegGate";
        case OutputRole::RoleEnabler: return "RoleEnabler";
        case OutputRole::ChainLink: return "ChainLink";
        case OutputRole::TerminalEnabler: return "TerminalEnabler";
        case OutputRole::Phase2Activation: return "Phase2Activation";
        case OutputRole::ReimburseEnabler: return "ReimburseEnabler";
        case OutputRole::Phase2RegGate: return "Phase2RegGate";
        case OutputRole::Phase2BobEnabler: return "Phase2BobEnabler";
        case OutputRole::Phase2RegMark: return "Phase2RegMark";
        case OutputRole::DisputeState: return "DisputeState";
        case OutputRole::ReimbursementTried: return "ReimbursementTried";
        case OutputRole::RefundPaid: return "RefundPaid";
        case OutputRole::Marker: return "Marker";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Bracket geometry. Positions are 1-based over the padded power-of-two tree.

uint16_t DagBuilder::meeting_round(uint32_t pos_a, uint32_t pos_b) {
    uint32_t a = pos_a - 1, b = pos_b - 1;
    uint16_t r = 0;
    while ((a >> r) != (b >> r)) ++r;
    return r; // smallest r with a common ancestor: they meet at round r
}

bool DagBuilder::left_of(uint32_t pos, uint32_t, uint16_t round) {
    return ((pos - 1) >> (round - 1) & 1u) == 0;
}

namespace {

uint32_t slot_index_in_round(uint32_t pos, uint16_t round) {
    return (pos - 1) >> round;
}

// Flat index of the (round, k) slot in a bracket of `size` leaves; slots are
// laid out round 1 first.
uint32_t flat_slot(uint32_t size, uint16_t round, uint32_t k) {
    uint32_t off = 0;
    for (uint16_t r = 1; r < round; ++r) off += size >> r;
    return off + k;
}

// The per-asserter cancel-gate outputs appended to a penalization template,
// ordered by asserter id with the loser skipped.
int cancel_gate_rank(uint32_t n, OperatorId loser, OperatorId asserter) {
    int rank = 0;
    for (OperatorId z = 1; z <= n; ++z) {
        if (z == loser) continue;
        if (z == asserter) return rank;
        ++rank;
    }
    return -1;
}

} // namespace

// ---------------------------------------------------------------------------

DagBuilder::DagBuilder(DagParams p) {
    if (p.n_ops < 2) throw SimError("InvalidN: need at least 2 operators");
    if (p.tc_links < 1 || p.starts_per_link < 1 || p.inter_link_timelock < 1)
        throw SimError("InvalidParams: tc chain parameters must be positive");
    dag_.params = p;
    dag_.rounds = ceil_log2(p.n_ops);
    dag_.bracket_size = 1u << dag_.rounds;
}

TemplateId DagBuilder::add(TxTemplate t) {
    dag_.templates.push_back(std::move(t));
    return static_cast<TemplateId>(dag_.templates.size() - 1);
}

void DagBuilder::build_tc() {
    const auto& p = dag_.params;
    std::vector<OperatorId> everyone;
    for (OperatorId op = 1; op <= p.n_ops; ++op) everyone.push_back(op);

    TxTemplate start;
    start.kind = TemplateKind::TCStart;
    start.inputs.push_back(TemplateInput{kExternalFunding, 0, 0});
    start.outputs.push_back(TemplateOutput{OutputRole::NextLink, 0, 0, {}});
    start.signers = everyone;
    dag_.tc_links.push_back(add(std::move(start)));

    uint16_t link_lock = static_cast<uint16_t>(kPeriodsPerEpoch * p.inter_link_timelock);
    if (p.committee_t_z > 0)
        link_lock = static_cast<uint16_t>((p.committee_t_z + p.n_ops - 1) / p.n_ops);
    for (uint32_t i = 1; i <= p.tc_links; ++i) {
        TxTemplate link;
        link.kind = TemplateKind::OpenTournament;
        link.slot = i;
        // TCStart is funding bootstrap, not a rate-limited slot; the
        // inter-link timelock applies from the first real link onward.
        link.inputs.push_back(
            TemplateInput{dag_.tc_links.back(), 0, i == 1 ? uint16_t{0} : link_lock});
        link.outputs.push_back(TemplateOutput{OutputRole::NextLink, 0, 0, {}});
        for (uint32_t s = 0; s < p.starts_per_link; ++s)
            link.outputs.push_back(TemplateOutput{OutputRole::StartPhase1, 0, 0, {}});
        link.signers = everyone;
        dag_.tc_links.push_back(add(std::move(link)));
    }
}

void DagBuilder::build_phase1(uint32_t link_index, uint16_t start_output) {
    const auto& p = dag_.params;
    const uint32_t n = p.n_ops;
    const uint32_t size = dag_.bracket_size;
    const uint16_t rounds = static_cast<uint16_t>(dag_.rounds);
    if (link_index >= dag_.tc_links.size() - 1)
        throw SimError("build_phase1: no such TC link");

    SlotRefs slot;
    slot.link_index = link_index + 1;
    slot.start_output = start_output;
    slot.link = dag_.tc_links[link_index + 1];
    const uint32_t slot_tag =
        (link_index + 1) * p.starts_per_link + start_output;

    std::vector<OperatorId> everyone;
    for (OperatorId op = 1; op <= n; ++op) everyone.push_back(op);

    // Anchor: consumes StartPhase1 and emits every per-slot selector and
    // registration gate. Broadcastable by anyone; the broadcaster is the
    // slot's opener of record.
    TxTemplate anchor;
    anchor.kind = TemplateKind::RegistrationPhase1;
    anchor.slot = slot_tag;
    anchor.inputs.push_back(
        TemplateInput{slot.link, static_cast<uint16_t>(1 + start_output), 0});
    anchor.signers = everyone;

    auto real_in = [&](uint16_t round, uint32_t k, bool left) {
        std::vector<OperatorId> ops;
        uint32_t lo = k * (1u << round) + (left ? 1 : (1u << (round - 1)) + 1);
        uint32_t hi = lo + (1u << (round - 1)) - 1;
        for (uint32_t pos = lo; pos <= hi && pos <= n; ++pos)
            ops.push_back(pos);
        return ops;
    };

    for (uint16_t r = 1; r <= rounds; ++r) {
        for (uint32_t k = 0; k < (size >> r); ++k) {
            MatchSlotRef m;
            m.round = r;
            m.index = static_cast<uint16_t>(k);
            m.left = real_in(r, k, true);
            m.right = real_in(r, k, false);
            if (!m.left.empty() || !m.right.empty()) {
                m.selector_output = static_cast<uint16_t>(anchor.outputs.size());
                anchor.outputs.push_back(TemplateOutput{
                    OutputRole::WinnerSelector, 0, static_cast<uint16_t>(6 * r), {}});
            } else {
                m.selector_output = 0xffff;
            }
            slot.matches.push_back(std::move(m));
        }
    }
    slot.final_selector_output = static_cast<uint16_t>(anchor.outputs.size());
    anchor.outputs.push_back(TemplateOutput{OutputRole::FinalSelector, 0, 0, {}});
    std::vector<uint16_t> reg_gate(n + 1, 0);
    for (OperatorId op = 1; op <= n; ++op) {
        reg_gate[op] = static_cast<uint16_t>(anchor.outputs.size());
        anchor.outputs.push_back(TemplateOutput{OutputRole::RegGate, 0, 0, {op}});
    }
    slot.anchor = add(std::move(anchor));

    // Per-operator enabler chains: EnableRound(1) registers, each later link
    // consumes the previous link's output at +6 plus the won selector.
    slot.chains.resize(n);
    for (OperatorId op = 1; op <= n; ++op) {
        auto& chain = slot.chains[op - 1];
        chain.reg_gate_output = reg_gate[op];
        for (uint16_t r = 1; r <= rounds + 1; ++r) {
            TxTemplate t;
            t.kind = TemplateKind::EnableRound;
            t.slot = slot_tag;
            t.alice = op;
            t.round = r;
            if (r == 1) {
                t.inputs.push_back(TemplateInput{slot.anchor, reg_gate[op], 0});
                t.authorized = {op}; // registration is the operator's own call
            } else {
                t.inputs.push_back(TemplateInput{chain.enable[r - 2], 1, 6});
                const auto& m =
                    slot.matches[flat_slot(size, r - 1, slot_index_in_round(op, r - 1))];
                t.inputs.push_back(TemplateInput{slot.anchor, m.selector_output, 0});
                // pre-signed so any honest participant can advance the chain
            }
            if (r <= rounds) {
                t.outputs.push_back(TemplateOutput{OutputRole::RoleEnabler, 0, 0, {op}});
                t.outputs.push_back(TemplateOutput{OutputRole::ChainLink, 0, 0, {op}});
            } else {
                t.outputs.push_back(
                    TemplateOutput{OutputRole::TerminalEnabler, 0, 0, {op}});
            }
            t.signers = {op};
            chain.enable.push_back(add(std::move(t)));
        }
        TxTemplate w;
        w.kind = TemplateKind::WinPhase1;
        w.slot = slot_tag;
        w.alice = op;
        w.round = static_cast<uint16_t>(rounds + 1);
        w.inputs.push_back(TemplateInput{chain.enable.back(), 0, 0});
        w.inputs.push_back(TemplateInput{slot.anchor, slot.final_selector_output, 0});
        w.outputs.push_back(TemplateOutput{OutputRole::Phase2Activation, 0, 0, {op}});
        w.authorized = {op};
        w.signers = {op};
        chain.win_phase1 = add(std::move(w));
    }

    // One FLEX component per pair that can meet; the left-subtree party
    // asserts. Plus the round-1 non-registration cuts and per-slot stall
    // detectors.
    for (OperatorId x = 1; x <= n; ++x) {
        for (OperatorId y = x + 1; y <= n; ++y) {
            uint16_t r = meeting_round(x, y);
            OperatorId alice = left_of(x, y, r) ? x : y;
            OperatorId bob = alice == x ? y : x;
            FlexComponentRef c;
            c.alice = alice;
            c.bob = bob;
            c.round = r;
            c.phase = 1;
            c.slot = slot_tag;
            c.bracket_slot = static_cast<uint16_t>(
                flat_slot(size, r, slot_index_in_round(x, r)));
            const auto& ca = slot.chains[alice - 1];
            const auto& cb = slot.chains[bob - 1];
            const uint16_t open_lock = r == 1 ? 1 : 0;

            TxTemplate challenge;
            challenge.kind = TemplateKind::BobChallenge;
            challenge.slot = slot_tag;
            challenge.alice = alice;
            challenge.bob = bob;
            challenge.round = r;
            challenge.inputs.push_back(TemplateInput{ca.enable[r - 1], 0, open_lock});
            challenge.inputs.push_back(TemplateInput{cb.enable[r - 1], 0, open_lock});
            challenge.outputs.push_back(
                TemplateOutput{OutputRole::DisputeState, 0, 0, {alice, bob}});
            challenge.authorized = {bob};
            challenge.signers = {alice, bob};
            c.bob_challenge = add(std::move(challenge));

            TxTemplate nobob;
            nobob.kind = TemplateKind::NoBobChallenge;
            nobob.slot = slot_tag;
            nobob.alice = alice;
            nobob.bob = bob;
            nobob.round = r;
            nobob.inputs.push_back(TemplateInput{cb.enable[r - 1], 0, 1});
            nobob.inputs.push_back(TemplateInput{cb.enable[r - 1], 1, 1});
            nobob.authorized = {alice};
            nobob.signers = {alice, bob};
            c.no_bob_challenge = add(std::move(nobob));

            if (r == 1) {
                TxTemplate nobob_unreg;
                nobob_unreg.kind = TemplateKind::NoBobChallenge;
                nobob_unreg.slot = slot_tag;
                nobob_unreg.alice = alice;
                nobob_unreg.bob = bob;
                nobob_unreg.round = r;
                nobob_unreg.inputs.push_back(TemplateInput{
                    slot.anchor, reg_gate[bob],
                    static_cast<uint16_t>(p.registration_window)});
                nobob_unreg.authorized = {alice};
                nobob_unreg.signers = {alice, bob};
                c.no_bob_challenge_unreg = add(std::move(nobob_unreg));

                TxTemplate atimeout;
                atimeout.kind = TemplateKind::AsserterTimeout;
                atimeout.slot = slot_tag;
                atimeout.alice = alice;
                atimeout.bob = bob;
                atimeout.round = r;
                atimeout.inputs.push_back(TemplateInput{
                    slot.anchor, reg_gate[alice],
                    static_cast<uint16_t>(p.registration_window)});
                atimeout.authorized = {bob};
                atimeout.signers = {alice, bob};
                c.asserter_timeout = add(std::move(atimeout));
            }

            // Alice's bond rides with her input publication; her separate
            // bond deadline is tracked by the state machine. Contest builds
            // expose a second output feeding the counter-proof templates so
            // the main resolution path never waits on them.
            TxTemplate ainput;
            ainput.kind = TemplateKind::AliceInput;
            ainput.slot = slot_tag;
            ainput.alice = alice;
            ainput.bob = bob;
            ainput.round = r;
            ainput.inputs.push_back(TemplateInput{c.bob_challenge, 0, 0});
            ainput.outputs.push_back(
                TemplateOutput{OutputRole::DisputeState, 0, 0, {alice, bob}});
            if (dag_.params.contest_inputs)
                ainput.outputs.push_back(
                    TemplateOutput{OutputRole::DisputeState, 0, 0, {bob}});
            ainput.authorized = {alice};
            ainput.signers = {alice, bob};
            c.alice_input = add(std::move(ainput));

            if (dag_.params.contest_inputs) {
                TxTemplate binput;
                binput.kind = TemplateKind::BobInput;
                binput.slot = slot_tag;
                binput.alice = alice;
                binput.bob = bob;
                binput.round = r;
                binput.inputs.push_back(TemplateInput{c.alice_input, 1, 0});
                binput.outputs.push_back(
                    TemplateOutput{OutputRole::DisputeState, 0, 0, {alice, bob}});
                binput.authorized = {bob};
                binput.signers = {alice, bob};
                c.bob_input = add(std::move(binput));

                TxTemplate cosig;
                cosig.kind = TemplateKind::AliceInputCoSig;
                cosig.slot = slot_tag;
                cosig.alice = alice;
                cosig.bob = bob;
                cosig.round = r;
                cosig.inputs.push_back(TemplateInput{c.bob_input, 0, 0});
                cosig.authorized = {alice};
                cosig.signers = {alice, bob};
                c.alice_cosig = add(std::move(cosig));
            }

            TxTemplate ra;
            ra.kind = TemplateKind::FlexInternal;
            ra.step = FlexStep::ResolveAliceWins;
            ra.slot = slot_tag;
            ra.alice = alice;
            ra.bob = bob;
            ra.round = r;
            ra.inputs.push_back(TemplateInput{c.alice_input, 0, 0});
            ra.inputs.push_back(TemplateInput{cb.enable[r - 1], 1, 0}); // next Bob enabler
            ra.authorized = {alice};
            ra.signers = {alice, bob};
            c.resolve_alice = add(std::move(ra));

            TxTemplate rb;
            rb.kind = TemplateKind::FlexInternal;
            rb.step = FlexStep::ResolveBobWins;
            rb.slot = slot_tag;
            rb.alice = alice;
            rb.bob = bob;
            rb.round = r;
            rb.inputs.push_back(TemplateInput{c.alice_input, 0, 0});
            rb.inputs.push_back(TemplateInput{ca.enable[r - 1], 1, 0}); // next Alice enabler
            rb.authorized = {bob};
            rb.signers = {alice, bob};
            c.resolve_bob = add(std::move(rb));

            TxTemplate bt;
            bt.kind = TemplateKind::FlexInternal;
            bt.step = FlexStep::BobWinsTimeout;
            bt.slot = slot_tag;
            bt.alice = alice;
            bt.bob = bob;
            bt.round = r;
            bt.inputs.push_back(TemplateInput{c.bob_challenge, 0, 3}); // input deadline + 1
            bt.inputs.push_back(TemplateInput{ca.enable[r - 1], 1, 0});
            bt.authorized = {bob};
            bt.signers = {alice, bob};
            c.bob_timeout = add(std::move(bt));

            slot.components.push_back(static_cast<uint32_t>(dag_.components.size()));
            dag_.components.push_back(std::move(c));
        }
    }

    if (p.exclude_phase1_losers) {
        // every pairwise penalization gains one cancel gate per potential
        // phase-2 asserter; the matching cancellation templates are created
        // alongside phase 2, once the registration gates exist
        for (uint32_t ci : slot.components) {
            const auto& ref = dag_.components[ci];
            auto extend = [&](TemplateId t, OperatorId loser) {
                if (t < 0) return;
                auto& tpl = dag_.templates[static_cast<size_t>(t)];
                for (OperatorId z = 1; z <= n; ++z)
                    if (z != loser)
                        tpl.outputs.push_back(
                            TemplateOutput{OutputRole::Marker, 0, 0, {z}});
            };
            extend(ref.resolve_alice, ref.bob);
            extend(ref.resolve_bob, ref.alice);
            extend(ref.bob_timeout, ref.alice);
            extend(ref.no_bob_challenge, ref.bob);
            extend(ref.no_bob_challenge_unreg, ref.bob);
            extend(ref.asserter_timeout, ref.alice);
        }
    }

    for (auto& m : slot.matches) {
        if (m.left.empty() || m.right.empty()) continue;
        TxTemplate dt;
        dt.kind = TemplateKind::DisputeTimeout;
        dt.slot = slot_tag;
        dt.round = m.round;
        dt.inputs.push_back(TemplateInput{slot.anchor, m.selector_output,
                                          static_cast<uint16_t>(6 * m.round + 1)});
        for (OperatorId op : m.left) dt.signers.push_back(op);
        for (OperatorId op : m.right) dt.signers.push_back(op);
        m.dispute_timeout = add(std::move(dt));
    }

    dag_.slots.push_back(std::move(slot));
}

void DagBuilder::build_phase2(uint32_t slot_index) {
    const auto& p = dag_.params;
    const uint32_t n = p.n_ops;
    auto& slot = dag_.slots.at(slot_index);
    const uint32_t slot_tag = slot.link_index * p.starts_per_link + slot.start_output;
    const uint32_t c_max = dag_.challenger_count();
    uint32_t r2 = p.phase2_rounds == 0 ? std::max(1u, ceil_log2(c_max + 1)) : p.phase2_rounds;

    for (OperatorId x = 1; x <= n; ++x) {
        Phase2Ref ph;
        ph.asserter = x;

        // Candidate pool: the other operators first, then watchtower ids when
        // C exceeds N-1. The setup-fixed uniform permutation for this slot
        // orders them; position decides the static deadline round.
        std::vector<OperatorId> pool;
        for (OperatorId y = 1; y <= n && pool.size() < c_max; ++y)
            if (y != x) pool.push_back(y);
        for (OperatorId w = n + 1; pool.size() < c_max; ++w) pool.push_back(w);
        Prng perm_rng(mix_seed(p.permutation_seed, slot_tag * 1000003ULL + x));
        auto perm = perm_rng.permutation(static_cast<uint32_t>(pool.size()));
        for (uint32_t i = 0; i < c_max; ++i) ph.challengers.push_back(pool[perm[i]]);

        TxTemplate start;
        start.kind = TemplateKind::StartTournament;
        start.slot = slot_tag;
        start.alice = x;
        start.inputs.push_back(
            TemplateInput{slot.chains[x - 1].win_phase1, 0, 0});
        start.outputs.push_back(
            TemplateOutput{OutputRole::ReimburseEnabler, 0, 0, {x}});
        for (uint32_t j = 0; j < c_max; ++j) {
            start.outputs.push_back(TemplateOutput{
                OutputRole::Phase2RegGate, 0, 0, {ph.challengers[j], x}});
        }
        start.authorized = {x};
        start.signers = {x};
        ph.start = add(std::move(start));

        TxTemplate tryearly;
        tryearly.kind = TemplateKind::TryEarlyRefund;
        tryearly.slot = slot_tag;
        tryearly.alice = x;
        tryearly.inputs.push_back(TemplateInput{ph.start, 0, 1});
        tryearly.outputs.push_back(
            TemplateOutput{OutputRole::ReimbursementTried, 0, 0, {}});
        tryearly.authorized = {x};
        tryearly.signers = {x};
        ph.try_early_refund = add(std::move(tryearly));

        TxTemplate early;
        early.kind = TemplateKind::Refund;
        early.slot = slot_tag;
        early.alice = x;
        // two periods: one full period for challengers to contest the claim
        early.inputs.push_back(TemplateInput{ph.try_early_refund, 0, 2});
        early.outputs.push_back(TemplateOutput{OutputRole::RefundPaid, 0, 0, {x}});
        early.authorized = {x};
        early.signers = {x};
        ph.early_refund = add(std::move(early));

        TxTemplate refund;
        refund.kind = TemplateKind::Refund;
        refund.slot = slot_tag;
        refund.alice = x;
        refund.round = static_cast<uint16_t>(r2);
        refund.inputs.push_back(TemplateInput{
            ph.start, 0, static_cast<uint16_t>(kPeriodsPerEpoch * r2 + 2)});
        refund.outputs.push_back(TemplateOutput{OutputRole::RefundPaid, 0, 0, {x}});
        refund.authorized = {x};
        refund.signers = {x};
        ph.refund = add(std::move(refund));

        for (uint32_t j = 0; j < c_max; ++j) {
            OperatorId y = ph.challengers[j];
            const uint16_t gate = static_cast<uint16_t>(1 + j);
            const uint16_t sched_round =
                static_cast<uint16_t>(std::max(1u, ceil_log2(j + 2)));

            TxTemplate regin;
            regin.kind = TemplateKind::RegInPhase2;
            regin.slot = slot_tag;
            regin.alice = x;
            regin.bob = y;
            regin.round = sched_round;
            regin.inputs.push_back(TemplateInput{ph.start, gate, 1});
            regin.outputs.push_back(
                TemplateOutput{OutputRole::Phase2RegMark, 0, 0, {y, x}});
            regin.authorized = {y};
            regin.signers = {x, y};
            ph.reg_in.push_back(add(std::move(regin)));

            TxTemplate regto;
            regto.kind = TemplateKind::RegTimeout;
            regto.slot = slot_tag;
            regto.alice = x;
            regto.bob = y;
            // the one-period registration window is the period after the
            // StartTournament confirmation
            regto.inputs.push_back(TemplateInput{ph.start, gate, 2});
            regto.authorized = {x};
            regto.signers = {x, y};
            ph.reg_timeout.push_back(add(std::move(regto)));

            FlexComponentRef c;
            c.alice = x;
            c.bob = y;
            c.phase = 2;
            c.slot = slot_tag;
            c.round = sched_round;
            c.challenger_pos = j;
            c.delay_a = static_cast<int>(sched_round - 1);
            c.delay_b = 0;

            TxTemplate challenge;
            challenge.kind = TemplateKind::BobChallenge;
            challenge.slot = slot_tag;
            challenge.alice = x;
            challenge.bob = y;
            challenge.round = sched_round;
            challenge.inputs.push_back(TemplateInput{ph.reg_in[j], 0, 1});
            challenge.outputs.push_back(
                TemplateOutput{OutputRole::DisputeState, 0, 0, {x, y}});
            challenge.authorized = {y};
            challenge.signers = {x, y};
            c.bob_challenge = add(std::move(challenge));

            TxTemplate nobob;
            nobob.kind = TemplateKind::NoBobChallenge;
            nobob.slot = slot_tag;
            nobob.alice = x;
            nobob.bob = y;
            nobob.round = sched_round;
            nobob.inputs.push_back(TemplateInput{
                ph.reg_in[j], 0,
                static_cast<uint16_t>(1 + kPeriodsPerEpoch * sched_round)});
            nobob.authorized = {x};
            nobob.signers = {x, y};
            c.no_bob_challenge = add(std::move(nobob));

            TxTemplate ainput;
            ainput.kind = TemplateKind::AliceInput;
            ainput.slot = slot_tag;
            ainput.alice = x;
            ainput.bob = y;
            ainput.round = sched_round;
            ainput.inputs.push_back(TemplateInput{c.bob_challenge, 0, 0});
            ainput.outputs.push_back(
                TemplateOutput{OutputRole::DisputeState, 0, 0, {x, y}});
            ainput.authorized = {x};
            ainput.signers = {x, y};
            c.alice_input = add(std::move(ainput));

            TxTemplate ra;
            ra.kind = TemplateKind::FlexInternal;
            ra.step = FlexStep::ResolveAliceWins;
            ra.slot = slot_tag;
            ra.alice = x;
            ra.bob = y;
            ra.round = sched_round;
            ra.inputs.push_back(TemplateInput{c.alice_input, 0, 0});
            // no next-Bob-enabler in phase 2: the omitting variant
            ra.authorized = {x};
            ra.signers = {x, y};
            c.resolve_alice = add(std::move(ra));

            TxTemplate rb;
            rb.kind = TemplateKind::FlexInternal;
            rb.step = FlexStep::ResolveBobWins;
            rb.slot = slot_tag;
            rb.alice = x;
            rb.bob = y;
            rb.round = sched_round;
            rb.inputs.push_back(TemplateInput{c.alice_input, 0, 0});
            rb.inputs.push_back(TemplateInput{ph.start, 0, 0}); // Alice-can-win
            rb.authorized = {y};
            rb.signers = {x, y};
            c.resolve_bob = add(std::move(rb));

            TxTemplate bt;
            bt.kind = TemplateKind::FlexInternal;
            bt.step = FlexStep::BobWinsTimeout;
            bt.slot = slot_tag;
            bt.alice = x;
            bt.bob = y;
            bt.round = sched_round;
            bt.inputs.push_back(TemplateInput{
                c.bob_challenge, 0,
                static_cast<uint16_t>(3 + kPeriodsPerEpoch * c.delay_a)});
            bt.inputs.push_back(TemplateInput{ph.start, 0, 0});
            bt.authorized = {y};
            bt.signers = {x, y};
            c.bob_timeout = add(std::move(bt));

            TxTemplate so1;
            so1.kind = TemplateKind::StillOpen;
            so1.slot = slot_tag;
            so1.alice = x;
            so1.bob = y;
            so1.round = sched_round;
            so1.inputs.push_back(TemplateInput{ph.try_early_refund, 0, 0});
            so1.inputs.push_back(TemplateInput{c.bob_challenge, 0, 0});
            so1.authorized = {y};
            so1.signers = {x, y};
            c.still_open[0] = add(std::move(so1));

            TxTemplate so2;
            so2.kind = TemplateKind::StillOpen;
            so2.slot = slot_tag;
            so2.alice = x;
            so2.bob = y;
            so2.round = sched_round;
            so2.inputs.push_back(TemplateInput{ph.try_early_refund, 0, 0});
            so2.inputs.push_back(TemplateInput{c.alice_input, 0, 0});
            so2.authorized = {y};
            so2.signers = {x, y};
            c.still_open[1] = add(std::move(so2));

            ph.components.push_back(static_cast<uint32_t>(dag_.components.size()));
            dag_.components.push_back(std::move(c));
        }
        slot.phase2.push_back(std::move(ph));
    }

    if (!p.exclude_phase1_losers) return;
    // cancellation templates: a penalization's cancel gate plus the loser's
    // challenger gate in some asserter's template retire that challenger role
    for (uint32_t ci : slot.components) {
        const auto& ref = dag_.components[ci];
        if (ref.phase != 1) continue;
        auto cancel_all = [&](TemplateId t, OperatorId loser) {
            if (t < 0) return;
            const uint16_t base = static_cast<uint16_t>(
                dag_.templates[static_cast<size_t>(t)].outputs.size() - (n - 1));
            for (OperatorId z = 1; z <= n; ++z) {
                if (z == loser) continue;
                const auto& ph = slot.phase2[z - 1];
                uint32_t j = 0;
                bool found = false;
                for (; j < ph.challengers.size(); ++j)
                    if (ph.challengers[j] == loser) {
                        found = true;
                        break;
                    }
                if (!found) continue;
                TxTemplate cancel;
                cancel.kind = TemplateKind::RegTimeout;
                cancel.slot = slot_tag;
                cancel.alice = z;
                cancel.bob = loser;
                cancel.round = ref.round;
                int rank = cancel_gate_rank(n, loser, z);
                cancel.inputs.push_back(TemplateInput{
                    t, static_cast<uint16_t>(base + rank), 0});
                cancel.inputs.push_back(
                    TemplateInput{ph.start, static_cast<uint16_t>(1 + j), 0});
                cancel.signers = {loser, z};
                add(std::move(cancel));
            }
        };
        cancel_all(ref.resolve_alice, ref.bob);
        cancel_all(ref.resolve_bob, ref.alice);
        cancel_all(ref.bob_timeout, ref.alice);
        cancel_all(ref.no_bob_challenge, ref.bob);
        cancel_all(ref.no_bob_challenge_unreg, ref.bob);
        cancel_all(ref.asserter_timeout, ref.alice);
    }
}

Dag DagBuilder::take() {
    dag_.finalize();
    return std::move(dag_);
}

// ---------------------------------------------------------------------------

void Dag::finalize() {
    out_offset_.clear();
    out_offset_.reserve(templates.size());
    uint32_t off = 0;
    for (auto& t : templates) {
        out_offset_.push_back(off);
        off += static_cast<uint32_t>(t.outputs.size());
    }
    total_outputs_ = off;
    // Content-hash ids: kind, structural bindings, inputs (by producer hash),
    // outputs. Computed in topological (construction) order so producer ids
    // are already final.
    for (auto& t : templates) {
        Fnv1a h;
        h.add_u64(params.namespace_tag);
        h.add_u64(static_cast<uint64_t>(t.kind));
        h.add_u64(static_cast<uint64_t>(t.step));
        h.add_u64(t.slot);
        h.add_u64(t.alice);
        h.add_u64(t.bob);
        h.add_u64(t.round);
        for (const auto& in : t.inputs) {
            h.add_u64(in.producer == kExternalFunding
                          ? 0xfeedfaceULL
                          : templates[static_cast<size_t>(in.producer)].txid);
            h.add_u64(in.out_index);
            h.add_u64(in.required_timelock);
        }
        for (const auto& out : t.outputs) {
            h.add_u64(static_cast<uint64_t>(out.role));
            h.add_u64(static_cast<uint64_t>(out.value));
            h.add_u64(out.relative_timelock);
            for (auto s : out.spenders) h.add_u64(s);
        }
        t.txid = h.digest();
    }
}

// Fixed-width encoding used for the storage estimates:
//   header: kind(1) step(1) slot(4) alice(4) bob(4) round(2) counts(4) = 20
//   input:  producer(4) index(2) timelock(2) = 8
//   output: role(1) value(8) timelock(2) spender_count(1) + 4/spender
//   party lists: 4 bytes each; trailing txid(8)
// plus 64 bytes per required signature.
uint64_t Dag::encoded_template_bytes(const TxTemplate& t) const {
    uint64_t b = 20 + 8;
    b += 8 * t.inputs.size();
    for (const auto& o : t.outputs) b += 12 + 4 * o.spenders.size();
    b += 4 * (t.authorized.size() + t.signers.size());
    b += 64 * t.signers.size();
    return b;
}

DagStats Dag::stats() const {
    DagStats s;
    s.template_count = templates.size();
    for (const auto& t : templates) s.signature_count += t.signers.size();
    for (OperatorId op = 1; op <= params.n_ops; ++op)
        s.per_party_storage_bytes = std::max(s.per_party_storage_bytes, per_party_bytes(op));
    return s;
}

namespace {
bool relevant_to(const TxTemplate& t, OperatorId op) {
    for (OperatorId s : t.signers)
        if (s == op) return true;
    for (OperatorId a : t.authorized)
        if (a == op) return true;
    return false;
}
} // namespace

uint64_t Dag::per_party_bytes(OperatorId op) const {
    uint64_t b = 0;
    for (const auto& t : templates)
        if (relevant_to(t, op)) b += encoded_template_bytes(t);
    return b;
}

uint64_t Dag::subgraph_digest(OperatorId op) const {
    Fnv1a h;
    for (const auto& t : templates)
        if (relevant_to(t, op)) h.add_u64(t.txid);
    return h.digest();
}

std::string Dag::export_json() const {
    json nodes = json::array();
    for (size_t i = 0; i < templates.size(); ++i) {
        const auto& t = templates[i];
        json n;
        n["id"] = i;
        char buf[17];
        snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(t.txid));
        n["txid"] = buf;
        n["kind"] = to_string(t.kind);
        if (t.kind == TemplateKind::FlexInternal) n["step"] = to_string(t.step);
        n["slot"] = t.slot;
        if (t.alice) n["alice"] = t.alice;
        if (t.bob) n["bob"] = t.bob;
        if (t.round) n["round"] = t.round;
        n["authorized"] = t.authorized;
        n["signers"] = t.signers;
        nodes.push_back(std::move(n));
    }
    json edges = json::array();
    for (size_t i = 0; i < templates.size(); ++i) {
        for (const auto& in : templates[i].inputs) {
            json e;
            e["from"] = in.producer == kExternalFunding ? -1 : in.producer;
            e["output"] = in.out_index;
            e["to"] = i;
            uint16_t base = in.producer == kExternalFunding
                                ? 0
                                : tpl(in.producer).outputs[in.out_index].relative_timelock;
            e["timelock"] = std::max(base, in.required_timelock);
            edges.push_back(std::move(e));
        }
    }
    json doc;
    doc["format"] = "tournsim-dag-v1";
    doc["operators"] = params.n_ops;
    doc["rounds"] = rounds;
    // assumption flag: the +6 link gate applies uniformly, round 1 included
    doc["round1_link_timelock_uniform"] = true;
    doc["nodes"] = std::move(nodes);
    doc["edges"] = std::move(edges);
    return doc.dump(1);
}

std::string dag_diff(const std::string& export_a, const std::string& export_b) {
    json a = json::parse(export_a);
    json b = json::parse(export_b);
    std::ostringstream os;
    auto canon_nodes = [](const json& doc) {
        std::multiset<std::string> s;
        for (const auto& n : doc.at("nodes")) {
            json c = n;
            c.erase("id");
            c.erase("txid");
            s.insert(c.dump());
        }
        return s;
    };
    auto canon_edges = [](const json& doc) {
        std::multiset<std::string> s;
        for (const auto& e : doc.at("edges")) {
            json c;
            c["timelock"] = e.at("timelock");
            c["output"] = e.at("output");
            auto side = [&](const char* key) -> std::string {
                int id = e.at(key).get<int>();
                if (id < 0) return "external";
                const auto& n = doc.at("nodes").at(id);
                json k = n;
                k.erase("id");
                k.erase("txid");
                return k.dump();
            };
            c["from"] = side("from");
            c["to"] = side("to");
            s.insert(c.dump());
        }
        return s;
    };
    auto na = canon_nodes(a), nb = canon_nodes(b);
    auto ea = canon_edges(a), eb = canon_edges(b);
    auto report = [&os](const char* label, const std::multiset<std::string>& x,
                        const std::multiset<std::string>& y) {
        std::vector<std::string> only;
        std::set_difference(x.begin(), x.end(), y.begin(), y.end(),
                            std::back_inserter(only));
        for (const auto& item : only) os << label << " " << item << "\n";
    };
    report("-node", na, nb);
    report("+node", nb, na);
    report("-edge", ea, eb);
    report("+edge", eb, ea);
    return os.str();
}

// ---------------------------------------------------------------------------
// Counting mode: the same inventory rules as the builder, evaluated without
// materializing anything. Used for the N ~ 1000 storage estimates.

DagCounts count_slot_dag(uint32_t n_ops, uint32_t max_challengers, bool include_phase2) {
    const uint32_t n = n_ops;
    const uint32_t rounds = ceil_log2(n);
    const uint32_t size = 1u << rounds;
    const uint64_t pairs = static_cast<uint64_t>(n) * (n - 1) / 2;
    const uint32_t c_max = max_challengers == 0 ? n - 1 : max_challengers;

    DagCounts c;
    // anchor + chains + WinPhase1
    c.templates = 1 + static_cast<uint64_t>(n) * (rounds + 2);
    c.signatures = n + static_cast<uint64_t>(n) * (rounds + 2);
    // flex components: 6 templates / 12 signatures each; round-1 real pairs
    // add the two non-registration cuts
    uint64_t round1_pairs = n / 2;
    c.templates += pairs * 6 + round1_pairs * 2;
    c.signatures += pairs * 12 + round1_pairs * 4;
    // stall detectors: slots with both subtrees populated
    for (uint32_t r = 1; r <= rounds; ++r) {
        for (uint32_t k = 0; k < (size >> r); ++k) {
            uint32_t right_lo = k * (1u << r) + (1u << (r - 1)) + 1;
            if (right_lo <= n) {
                c.templates += 1;
                uint32_t hi = std::min<uint32_t>((k + 1) * (1u << r), n);
                c.signatures += hi - k * (1u << r);
            }
        }
    }
    if (include_phase2) {
        // per asserter: start + tryearly + early + refund + 10 per challenger
        c.templates += static_cast<uint64_t>(n) * (4 + 10ULL * c_max);
        c.signatures += static_cast<uint64_t>(n) * (4 + 20ULL * c_max);
    }

    // Per-party storage, dominated by pair templates (~2 signatures each).
    // Header 28 + inputs/outputs ~ 30 + 2 party refs ~ 8 -> ~66 encoded bytes
    // plus 128 signature bytes for a typical pair template.
    const uint64_t pair_tpl_bytes = 66 + 128;
    const uint64_t own_tpl_bytes = 60 + 64;
    uint64_t per_party = 0;
    per_party += (n - 1) * 6ULL * pair_tpl_bytes;            // phase-1 components
    per_party += (rounds + 2ULL) * own_tpl_bytes;            // own chain
    per_party += 2ULL * pair_tpl_bytes + rounds * 200ULL;    // cuts + stall detectors
    if (include_phase2) {
        per_party += (4ULL + 10ULL * c_max) * own_tpl_bytes;     // own template
        per_party += (n - 1) * 10ULL * pair_tpl_bytes;           // as challenger
    }
    c.max_party_bytes = per_party;
    return c;
}

} // namespace tournsim
