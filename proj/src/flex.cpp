#include "tournsim/flex.hpp"

namespace tournsim {

const char* to_string(FlexState s) {
    switch (s) {
        case FlexState::Dormant: return "Dormant";
        case FlexState::Challenged: return "Challenged";
        case FlexState::BondsPosted: return "BondsPosted";
        case FlexState::InputsPublished: return "InputsPublished";
        case FlexState::Resolved: return "Resolved";
        case FlexState::TimedOutCut: return "TimedOutCut";
        case FlexState::Cancelled: return "Cancelled";
    }
    return "?";
}

const char* to_string(FlexEventType t) {
    switch (t) {
        case FlexEventType::BobChallenge: return "BobChallenge";
        case FlexEventType::NoBobChallenge: return "NoBobChallenge";
        case FlexEventType::PostBond: return "PostBond";
        case FlexEventType::AliceInput: return "AliceInput";
        case FlexEventType::BobInput: return "BobInput";
        case FlexEventType::ResolveByAvp: return "ResolveByAvp";
        case FlexEventType::StillOpen: return "StillOpen";
        case FlexEventType::Timeout: return "Timeout";
    }
    return "?";
}

void FlexInstance::transition(FlexState next, const FlexEvent& ev) {
    log.push_back(FlexTransition{ev.at, ev.type, state, next});
    state = next;
}

FlexStepResult FlexInstance::step(const FlexEvent& ev, const Avp& avp) {
    if (terminal()) return FlexStepResult::IllegalTransition;

    switch (ev.type) {
        case FlexEventType::BobChallenge: {
            if (state != FlexState::Dormant) return FlexStepResult::IllegalTransition;
            if (ev.at > challenge_deadline()) {
                // late challenge converts to a timeout against Bob
                transition(FlexState::Cancelled, ev);
                winner = alice;
                return FlexStepResult::DeadlineExceeded;
            }
            challenged_at = ev.at;
            transition(FlexState::Challenged, ev);
            return FlexStepResult::Ok;
        }
        case FlexEventType::NoBobChallenge: {
            if (state != FlexState::Dormant) return FlexStepResult::IllegalTransition;
            if (ev.at <= challenge_deadline())
                return FlexStepResult::IllegalTransition; // Bob's window still open
            transition(FlexState::Cancelled, ev);
            return FlexStepResult::Ok;
        }
        case FlexEventType::PostBond: {
            if (ev.party == bob) {
                if (state != FlexState::Challenged || bob_bonded)
                    return FlexStepResult::IllegalTransition;
                if (ev.at > bob_bond_deadline()) {
                    transition(FlexState::Cancelled, ev);
                    winner = alice;
                    return FlexStepResult::DeadlineExceeded;
                }
                bob_bonded = true;
                return FlexStepResult::Ok;
            }
            if (ev.party == alice) {
                if (state != FlexState::Challenged || !bob_bonded || alice_bonded)
                    return FlexStepResult::IllegalTransition;
                if (ev.at > alice_bond_deadline()) {
                    transition(FlexState::Resolved, ev);
                    winner = bob;
                    return FlexStepResult::DeadlineExceeded;
                }
                alice_bonded = true;
                transition(FlexState::BondsPosted, ev);
                return FlexStepResult::Ok;
            }
            return FlexStepResult::IllegalTransition;
        }
        case FlexEventType::AliceInput: {
            if (state != FlexState::BondsPosted) return FlexStepResult::IllegalTransition;
            if (ev.at > alice_input_deadline()) {
                transition(FlexState::Resolved, ev);
                winner = bob;
                return FlexStepResult::DeadlineExceeded;
            }
            input_published = true;
            transition(FlexState::InputsPublished, ev);
            return FlexStepResult::Ok;
        }
        case FlexEventType::BobInput: {
            if (state != FlexState::InputsPublished || counter_input_published)
                return FlexStepResult::IllegalTransition;
            counter_input_published = true;
            return FlexStepResult::Ok;
        }
        case FlexEventType::ResolveByAvp: {
            if (state != FlexState::InputsPublished) return FlexStepResult::IllegalTransition;
            winner = avp(assertion) ? alice : bob;
            transition(FlexState::Resolved, ev);
            return FlexStepResult::Ok;
        }
        case FlexEventType::StillOpen: {
            // Bob consumes the reimbursement-tried output while this dispute
            // is unresolved. Before AliceInput the bonds go home; after it,
            // Alice's deposit is claimable by Bob.
            if (state == FlexState::Challenged || state == FlexState::BondsPosted) {
                transition(FlexState::Cancelled, ev);
                return FlexStepResult::Ok;
            }
            if (state == FlexState::InputsPublished) {
                winner = bob;
                transition(FlexState::Resolved, ev);
                return FlexStepResult::Ok;
            }
            return FlexStepResult::IllegalTransition;
        }
        case FlexEventType::Timeout: {
            if (ev.party == alice) {
                // Alice missed her bond or input deadline
                bool bond_late = state == FlexState::Challenged && bob_bonded &&
                                 ev.at > alice_bond_deadline();
                bool input_late =
                    state == FlexState::BondsPosted && ev.at > alice_input_deadline();
                if (!bond_late && !input_late) return FlexStepResult::IllegalTransition;
                winner = bob;
                transition(FlexState::Resolved, ev);
                return FlexStepResult::Ok;
            }
            if (ev.party == bob) {
                bool challenge_late =
                    state == FlexState::Dormant && ev.at > challenge_deadline();
                bool bond_late = state == FlexState::Challenged && !bob_bonded &&
                                 ev.at > bob_bond_deadline();
                if (!challenge_late && !bond_late) return FlexStepResult::IllegalTransition;
                winner = alice;
                transition(state == FlexState::Dormant ? FlexState::Cancelled
                                                       : FlexState::Resolved,
                           ev);
                return FlexStepResult::Ok;
            }
            // third-party stall cut
            transition(FlexState::TimedOutCut, ev);
            winner = kNoOperator;
            return FlexStepResult::Ok;
        }
    }
    return FlexStepResult::IllegalTransition;
}

std::vector<Outpoint> FlexInstance::cut_next(OperatorId loser) const {
    if (state != FlexState::Resolved && state != FlexState::TimedOutCut)
        throw SimError("NotResolved: dispute has no loser yet");
    if (state == FlexState::Resolved && winner == loser)
        throw SimError("NotResolved: party is not the loser");
    std::vector<Outpoint> cuts;
    if (loser == alice) {
        if (alice_can_win) cuts.push_back(*alice_can_win);
    } else if (loser == bob) {
        if (next_bob_enabler) cuts.push_back(*next_bob_enabler);
    } else {
        throw SimError("NotResolved: unknown party");
    }
    return cuts;
}

} // namespace tournsim
