#include "tournsim/tournament.hpp"

#include <algorithm>
#include <memory>
#include <unordered_map>

#include "tournsim/disable.hpp"
#include "tournsim/prng.hpp"

namespace tournsim {

const char* to_string(PolicyKind k) {
    switch (k) {
        case PolicyKind::Honest: return "Honest";
        case PolicyKind::Abstain: return "Abstain";
        case PolicyKind::StallAfterRound: return "StallAfterRound";
        case PolicyKind::CensorBudget: return "CensorBudget";
        case PolicyKind::OpenAndAbandon: return "OpenAndAbandon";
        case PolicyKind::EquivocateAssertion: return "EquivocateAssertion";
        case PolicyKind::LateRegister: return "LateRegister";
    }
    return "?";
}

const char* to_string(ChainCase c) {
    switch (c) {
        case ChainCase::Case1Challenged: return "Case1Challenged";
        case ChainCase::Case1NoChallenge: return "Case1NoChallenge";
        case ChainCase::Case1Dormant: return "Case1Dormant";
        case ChainCase::Case2AliceOnly: return "Case2AliceOnly";
        case ChainCase::Case3BobOnly: return "Case3BobOnly";
        case ChainCase::Case4Neither: return "Case4Neither";
        case ChainCase::CaseResolved: return "CaseResolved";
    }
    return "?";
}

namespace {

struct OpRuntime {
    Strategy strategy;
    bool participates = true;
    bool registered = false;
    bool eliminated = false;
    Period eliminated_at = -1;
    uint16_t eliminated_round = 0;
    uint16_t arrived_round = 0;
    uint32_t moves_in_round = 0;
    uint16_t move_round = 0;
    bool registered_phase2 = false;
};

struct CompRuntime {
    FlexInstance inst;
    const FlexComponentRef* ref = nullptr;
    bool settled = false;
    uint32_t dyn_round = 0; // phase 2: dynamic schedule round
};

class Engine {
public:
    Engine(const Dag& dag, const RunConfig& cfg)
        : dag_(dag),
          cfg_(cfg),
          ledger_(dag),
          book_(dag.total_parties(), cfg.starting_balance, cfg.bonds),
          side_(cfg.side_system_latency) {
        n_parties_ = dag.total_parties();
        book_.set_reward_delay(cfg_.extra_confirmation_periods);
        avp_.verdict = cfg_.avp ? cfg_.avp : [](uint64_t a) { return (a & 1) == 1; };
        init_ops();
        init_comps();
        if (cfg_.disable_method != "none") {
            DisableMethod m = cfg_.disable_method == "direct"    ? DisableMethod::Direct
                              : cfg_.disable_method == "pairwise" ? DisableMethod::Pairwise
                                                                  : DisableMethod::Threshold;
            disable_ = std::make_unique<DisableRegistry>(n_parties_, m,
                                                         cfg_.disable_threshold, cfg_.seed);
        }
        ledger_.on_confirm = [this](TemplateId t, OperatorId by, Period at) {
            apply_confirm(t, by, at);
        };
        ledger_.on_fee = [this](OperatorId by, Period at) {
            if (by != kNoOperator) book_.pay_fee(by, at);
        };
        for (OperatorId op = 1; op <= cfg_.n_ops; ++op) {
            const auto& s = strat(op);
            if (s.kind == PolicyKind::CensorBudget && s.censor_fraction > 0.0)
                for (OperatorId other = 1; other <= n_parties_; ++other)
                    if (other != op)
                        ledger_.add_censorship(CensorDirective{other, s.censor_fraction});
        }
    }

    const Dag& dag_;
    RunConfig cfg_;
    Ledger ledger_;
    CapitalBook book_;
    SideSystem side_;
    Avp avp_;

    uint32_t n_parties_ = 0;
    const SlotRefs* slot_ = nullptr;
    std::vector<OpRuntime> ops_; // 1-based
    std::vector<CompRuntime> comps_;
    std::vector<int32_t> comp_of_tpl_;
    std::unordered_map<uint64_t, int32_t> comp_by_pair_; // phase-1 lookup
    Period p0_ = 0;
    Period ts_ = -1;
    OperatorId phase2_asserter_ = kNoOperator;
    const Phase2Ref* ph2_ = nullptr;
    uint32_t win_confirmations_ = 0;
    OperatorId winner_ = kNoOperator;
    Period win_period_ = -1;
    std::vector<std::string> violations_;
    std::vector<uint32_t> dt_by_;
    std::vector<uint16_t> dt_round_by_;
    std::vector<TcEvent> tc_events_;
    std::optional<OaaVerdict> oaa_;
    std::unique_ptr<DisableRegistry> disable_;
    uint32_t blocked_actions_ = 0;
    bool tried_refund_ = false;
    bool refunded_ = false;
    bool early_refund_ = false;
    Period refund_period_ = -1;
    int64_t initial_units_ = 0;

    Strategy strat(OperatorId op) const {
        if (op <= cfg_.strategies.size()) return cfg_.strategies[op - 1];
        return Strategy::honest(); // watchtower-only challengers screen honestly
    }
    OpRuntime& rt(OperatorId op) { return ops_[op]; }

    void init_ops() {
        if (cfg_.strategies.size() != cfg_.n_ops)
            throw SimError("strategy assignment must cover every operator");
        ops_.resize(n_parties_ + 1);
        if (cfg_.assertions.empty()) {
            cfg_.assertions.assign(n_parties_ + 1, 0);
            for (OperatorId op = 1; op <= n_parties_; ++op)
                cfg_.assertions[op] = op == 1 ? 1 : 2 * op; // one true claim by default
        } else if (cfg_.assertions.size() <= n_parties_) {
            cfg_.assertions.insert(cfg_.assertions.begin(), 0);
            cfg_.assertions.resize(n_parties_ + 1, 0);
        }
        for (OperatorId op = 1; op <= n_parties_; ++op) {
            auto& r = ops_[op];
            r.strategy = strat(op);
            r.participates = r.strategy.kind != PolicyKind::Abstain &&
                             r.strategy.kind != PolicyKind::OpenAndAbandon;
            if (r.strategy.kind == PolicyKind::StallAfterRound && r.strategy.stall_round == 0 &&
                r.strategy.stall_step < 0)
                r.participates = false;
            book_.deposit_apsb(op, cfg_.apsb);
        }
        dt_by_.assign(n_parties_ + 1, 0);
        dt_round_by_.assign(n_parties_ + 1, 0xffff);
    }

    void init_comps() {
        slot_ = &dag_.slots.at(0);
        comps_.resize(dag_.components.size());
        comp_of_tpl_.assign(dag_.templates.size(), -1);
        for (size_t i = 0; i < dag_.components.size(); ++i) {
            const auto& ref = dag_.components[i];
            auto& c = comps_[i];
            c.ref = &ref;
            c.inst.alice = ref.alice;
            c.inst.bob = ref.bob;
            c.inst.delay_a = ref.delay_a;
            c.inst.delay_b = ref.delay_b;
            uint64_t a = cfg_.assertions[ref.alice];
            if (strat(ref.alice).kind == PolicyKind::EquivocateAssertion)
                a = (a + 2 * ref.bob) & ~1ULL; // a fresh but still-false claim per dispute
            c.inst.assertion = a;
            if (ref.phase == 1) {
                const auto& ca = slot_->chains[ref.alice - 1];
                const auto& cb = slot_->chains[ref.bob - 1];
                c.inst.alice_enabler = Outpoint{ca.enable[ref.round - 1], 0};
                c.inst.bob_enabler = Outpoint{cb.enable[ref.round - 1], 0};
                c.inst.alice_can_win = Outpoint{ca.enable[ref.round - 1], 1};
                c.inst.next_bob_enabler = Outpoint{cb.enable[ref.round - 1], 1};
                c.inst.scheduled_start =
                    static_cast<Period>(cfg_.registration_window - 1) + 6 * (ref.round - 1);
                comp_by_pair_[pair_key(ref.alice, ref.bob, ref.round)] =
                    static_cast<int32_t>(i);
            } else {
                const auto& ph = slot_->phase2[ref.alice - 1];
                c.inst.alice_enabler = Outpoint{ph.start, 0};
                c.inst.alice_can_win = Outpoint{ph.start, 0};
                c.inst.bob_enabler = Outpoint{ph.reg_in[ref.challenger_pos], 0};
                c.inst.alice_tries_early = Outpoint{ph.try_early_refund, 0};
                // next Bob enabler stays unwired: phase 2 has no Bob chain
            }
            auto tag = [&](TemplateId t) {
                if (t >= 0) comp_of_tpl_[static_cast<size_t>(t)] = static_cast<int32_t>(i);
            };
            tag(ref.bob_challenge);
            tag(ref.no_bob_challenge);
            tag(ref.no_bob_challenge_unreg);
            tag(ref.asserter_timeout);
            tag(ref.alice_input);
            tag(ref.bob_input);
            tag(ref.alice_cosig);
            tag(ref.resolve_alice);
            tag(ref.resolve_bob);
            tag(ref.bob_timeout);
            tag(ref.still_open[0]);
            tag(ref.still_open[1]);
        }
    }

    static uint64_t pair_key(OperatorId a, OperatorId b, uint16_t round) {
        if (a > b) std::swap(a, b);
        return (static_cast<uint64_t>(round) << 40) | (static_cast<uint64_t>(a) << 20) | b;
    }

    bool verdict(const CompRuntime& c) const { return avp_(c.inst.assertion); }

    uint16_t round_of(Period p) const {
        if (p < p0_) return 0;
        return static_cast<uint16_t>((p - p0_) / 6 + 1);
    }

    bool may_move(OperatorId op, Period now) {
        auto& r = rt(op);
        if (!r.participates) return false;
        if (r.strategy.kind != PolicyKind::StallAfterRound) return true;
        uint16_t rd = round_of(now);
        if (rd > r.strategy.stall_round) return false;
        if (r.strategy.stall_step >= 0 && rd == r.strategy.stall_round) {
            if (r.move_round != rd) {
                r.move_round = rd;
                r.moves_in_round = 0;
            }
            if (r.moves_in_round >= static_cast<uint32_t>(r.strategy.stall_step)) return false;
        }
        return true;
    }

    bool blocked_by_disable(TemplateId tpl, OperatorId op) {
        if (!disable_ || !disable_->disabled(op)) return false;
        // fresh assert/challenge privileges are gated; live disputes run on
        const auto& t = dag_.tpl(tpl);
        bool fresh = (t.kind == TemplateKind::EnableRound && t.round == 1) ||
                     t.kind == TemplateKind::BobChallenge ||
                     t.kind == TemplateKind::RegInPhase2 ||
                     t.kind == TemplateKind::StartTournament;
        if (fresh) ++blocked_actions_;
        return fresh;
    }

    bool try_broadcast(TemplateId tpl, OperatorId op, Period now) {
        if (tpl < 0 || ledger_.is_confirmed(tpl)) return false;
        if (!may_move(op, now)) return false;
        if (blocked_by_disable(tpl, op)) return false;
        auto r = ledger_.broadcast(tpl, op);
        if (r.status == BroadcastStatus::Pending) {
            auto& o = rt(op);
            if (o.strategy.kind == PolicyKind::StallAfterRound && o.move_round == round_of(now))
                ++o.moves_in_round;
            return true;
        }
        return false;
    }

    void bootstrap() {
        OperatorId opener = kNoOperator;
        for (OperatorId op = 1; op <= cfg_.n_ops && opener == kNoOperator; ++op)
            if (strat(op).kind == PolicyKind::OpenAndAbandon) opener = op;
        for (OperatorId op = 1; op <= cfg_.n_ops && opener == kNoOperator; ++op)
            if (ops_[op].participates) opener = op;
        if (opener == kNoOperator) opener = 1;
        ledger_.broadcast(dag_.tc_links[0], opener);
        ledger_.broadcast(dag_.tc_links[1], opener);
        ledger_.broadcast(slot_->anchor, opener);
        tc_events_.push_back(TcEvent{0, 1, TcEventKind::Advanced, opener});
        tc_events_.push_back(TcEvent{0, 1, TcEventKind::Opened, opener});
        p0_ = 0;
        initial_units_ = book_.total_units();
    }

    // ---- phase 1 ----------------------------------------------------------

    void decide_registration(OperatorId op, Period now) {
        auto& r = rt(op);
        if (r.registered || !r.participates) return;
        const auto& chain = slot_->chains[op - 1];
        Period window_end = p0_ + cfg_.registration_window;
        if (r.strategy.kind == PolicyKind::LateRegister) {
            if (now == window_end + r.strategy.late_by - 1)
                ledger_.broadcast(chain.enable[0], op);
            return;
        }
        if (now >= p0_ && now < window_end) try_broadcast(chain.enable[0], op, now);
    }

    bool arrived(OperatorId op, uint16_t round) const {
        return ledger_.is_confirmed(slot_->chains[op - 1].enable[round - 1]);
    }

    bool is_left(OperatorId op, uint16_t round) const {
        return ((op - 1) >> (round - 1) & 1u) == 0;
    }

    size_t match_index(OperatorId op, uint16_t round) const {
        uint32_t off = 0;
        for (uint16_t r = 1; r < round; ++r) off += dag_.bracket_size >> r;
        return off + ((op - 1) >> round);
    }

    OperatorId live_opponent(OperatorId op, uint16_t round) const {
        const auto& m = slot_->matches[match_index(op, round)];
        const auto& side = is_left(op, round) ? m.right : m.left;
        for (OperatorId y : side)
            if (arrived(y, round)) return y;
        return kNoOperator;
    }

    int32_t comp_index(OperatorId a, OperatorId b, uint16_t round) const {
        auto it = comp_by_pair_.find(pair_key(a, b, round));
        return it == comp_by_pair_.end() ? -1 : it->second;
    }

    void decide_phase1_disputes(OperatorId op, Period now) {
        auto& r = rt(op);
        if (!r.registered || r.eliminated) return;
        uint16_t round = r.arrived_round;
        if (round == 0 || round > dag_.rounds) return;

        // round-1 cuts against parties that never registered
        if (round == 1 && now >= p0_ + cfg_.registration_window) {
            const auto& m = slot_->matches[match_index(op, 1)];
            const auto& other = is_left(op, 1) ? m.right : m.left;
            for (OperatorId y : other) {
                if (rt(y).registered) continue;
                int32_t ci = comp_index(op, y, 1);
                if (ci < 0) continue;
                const auto& ref = dag_.components[ci];
                if (ref.alice == op)
                    try_broadcast(ref.no_bob_challenge_unreg, op, now);
                else
                    try_broadcast(ref.asserter_timeout, op, now);
            }
        }

        OperatorId opp = live_opponent(op, round);
        if (opp == kNoOperator) return;
        int32_t ci = comp_index(op, opp, round);
        if (ci < 0) return;
        auto& c = comps_[static_cast<size_t>(ci)];
        const auto& ref = *c.ref;
        const bool i_am_alice = ref.alice == op;
        switch (c.inst.state) {
            case FlexState::Dormant:
                if (!i_am_alice) {
                    // declining the match forfeits the bracket slot, so an
                    // active challenger always disputes
                    if (now <= c.inst.challenge_deadline())
                        try_broadcast(ref.bob_challenge, op, now);
                } else if (now > c.inst.challenge_deadline()) {
                    try_broadcast(ref.no_bob_challenge, op, now);
                }
                break;
            case FlexState::Challenged:
                if (i_am_alice) {
                    if (book_.can_lock(op, now)) try_broadcast(ref.alice_input, op, now);
                } else if (now > c.inst.alice_input_deadline()) {
                    try_broadcast(ref.bob_timeout, op, now);
                }
                break;
            case FlexState::InputsPublished: {
                bool alice_wins = verdict(c);
                bool contest = contest_on(ref);
                if (i_am_alice) {
                    if (contest && ledger_.is_confirmed(ref.bob_input))
                        try_broadcast(ref.alice_cosig, op, now); // authorize the counter-proof
                    if (alice_wins) try_broadcast(ref.resolve_alice, op, now);
                } else if (!alice_wins) {
                    if (contest && !c.inst.counter_input_published)
                        try_broadcast(ref.bob_input, op, now);
                    else
                        try_broadcast(ref.resolve_bob, op, now);
                }
                break;
            }
            default:
                break;
        }
    }

    bool contest_on(const FlexComponentRef& ref) const {
        return cfg_.contest_method != "none" && ref.bob_input >= 0;
    }

    void decide_advance(OperatorId op, Period now) {
        auto& r = rt(op);
        if (!r.registered || r.eliminated) return;
        uint16_t round = r.arrived_round;
        const auto& chain = slot_->chains[op - 1];
        if (round >= 1 && round <= dag_.rounds) {
            OperatorId opp = live_opponent(op, round);
            if (opp != kNoOperator) {
                int32_t ci = comp_index(op, opp, round);
                if (ci >= 0) {
                    const auto& inst = comps_[static_cast<size_t>(ci)].inst;
                    if (!inst.terminal()) return; // match still live
                    if (inst.state == FlexState::Resolved && inst.winner != op) return;
                }
            }
            if (ledger_.spendable_now(chain.enable[round])) {
                bool sent = try_broadcast(chain.enable[round], op, now);
                // the terminal link, the win claim and the phase-2 activation
                // chain within one period (children may spend unconfirmed
                // parents)
                if (sent && round == dag_.rounds) claim_win(op, now);
            }
            return;
        }
        if (round == dag_.rounds + 1) claim_win(op, now);
    }

    void claim_win(OperatorId op, Period now) {
        const auto& chain = slot_->chains[op - 1];
        bool sent = try_broadcast(chain.win_phase1, op, now);
        if ((sent || ledger_.is_confirmed(chain.win_phase1)) && !cfg_.phase1_only &&
            ph2_ == nullptr && !slot_->phase2.empty())
            try_broadcast(slot_->phase2[op - 1].start, op, now);
    }

    // Retire dormant selectors. Every honest participant shares the duty, at
    // most one broadcast per operator per round.
    void decide_stall_watch(OperatorId op, Period now) {
        auto& r = rt(op);
        if (!r.participates || op > cfg_.n_ops) return;
        if (r.strategy.kind == PolicyKind::StallAfterRound && !may_move(op, now)) return;
        uint16_t rd = round_of(now);
        if (dt_round_by_[op] == rd) return;
        std::vector<const MatchSlotRef*> dormant;
        for (const auto& m : slot_->matches) {
            if (m.dispute_timeout < 0 || ledger_.is_confirmed(m.dispute_timeout)) continue;
            if (now < p0_ + 6 * m.round + 1) continue;
            if (ledger_.output_spent(Outpoint{slot_->anchor, m.selector_output})) continue;
            bool reached = false;
            for (OperatorId x : m.left) reached |= arrived(x, m.round);
            for (OperatorId x : m.right) reached |= arrived(x, m.round);
            if (reached) dormant.push_back(&m);
        }
        if (dormant.empty()) return;
        uint32_t pick = (op - 1) % static_cast<uint32_t>(dormant.size());
        if (try_broadcast(dormant[pick]->dispute_timeout, op, now)) dt_round_by_[op] = rd;
    }

    // ---- phase 2 ----------------------------------------------------------

    bool wants_to_challenge(OperatorId op) const {
        if (op == phase2_asserter_) return false;
        if (!cfg_.phase2_challengers.empty())
            return std::find(cfg_.phase2_challengers.begin(), cfg_.phase2_challengers.end(),
                             op) != cfg_.phase2_challengers.end();
        const auto& s = strat(op);
        switch (s.kind) {
            case PolicyKind::Honest:
            case PolicyKind::CensorBudget:
            case PolicyKind::EquivocateAssertion:
            case PolicyKind::LateRegister:
                break;
            default:
                return false;
        }
        if (s.challenge_all) return true;
        return !avp_(cfg_.assertions[phase2_asserter_]);
    }

    uint32_t challenger_index(OperatorId op) const {
        for (uint32_t j = 0; j < ph2_->challengers.size(); ++j)
            if (ph2_->challengers[j] == op) return j;
        return UINT32_MAX;
    }

    // Cumulative dispute budget after `epochs` phase-2 rounds: the schedule
    // paces concurrency; rewards recycled within earlier rounds fund it.
    uint64_t schedule_budget(uint32_t epochs) const {
        uint64_t total = 0;
        uint32_t k = std::max(1u, cfg_.schedule.k1);
        if (cfg_.schedule.rule == ScheduleRule::Custom) k = cfg_.schedule.custom[0];
        for (uint32_t r = 1; r <= epochs; ++r) {
            total += k;
            k = std::max(1u, cfg_.schedule.next(k, r, UINT64_MAX / 4));
        }
        return total;
    }

    uint32_t phase2_epoch(Period now) const {
        if (now < ts_ + 2) return 0;
        return static_cast<uint32_t>((now - (ts_ + 2)) / kPeriodsPerEpoch + 1);
    }

    void decide_phase2(OperatorId op, Period now) {
        if (cfg_.phase1_only || ph2_ == nullptr || ts_ < 0) return;
        auto& r = rt(op);
        if (op != phase2_asserter_) {
            uint32_t j = challenger_index(op);
            if (j == UINT32_MAX) return;
            // an explicit challenger list overrides the phase-1 policy gates
            bool forced = !cfg_.phase2_challengers.empty() &&
                          std::find(cfg_.phase2_challengers.begin(),
                                    cfg_.phase2_challengers.end(),
                                    op) != cfg_.phase2_challengers.end();
            auto cast = [&](TemplateId t) {
                if (t < 0 || ledger_.is_confirmed(t)) return false;
                if (blocked_by_disable(t, op)) return false;
                if (!forced) return try_broadcast(t, op, now);
                return ledger_.broadcast(t, op).status == BroadcastStatus::Pending;
            };
            if (!r.registered_phase2) {
                if (!wants_to_challenge(op)) return;
                bool late = strat(op).kind == PolicyKind::LateRegister;
                Period when = ts_ + 1 + (late ? strat(op).late_by : 0);
                if (now == when) cast(ph2_->reg_in[j]);
                return;
            }
            auto& c = comps_[ph2_->components[j]];
            switch (c.inst.state) {
                case FlexState::Dormant:
                    if (now <= c.inst.challenge_deadline())
                        cast(c.ref->bob_challenge);
                    break;
                case FlexState::Challenged:
                    if (now > c.inst.alice_input_deadline())
                        cast(c.ref->bob_timeout);
                    if (tried_refund_ && !refunded_)
                        cast(c.ref->still_open[0]);
                    break;
                case FlexState::InputsPublished:
                    if (!verdict(c)) {
                        if (contest_on(*c.ref) && !c.inst.counter_input_published)
                            cast(c.ref->bob_input);
                        else
                            cast(c.ref->resolve_bob);
                    }
                    if (tried_refund_ && !refunded_)
                        cast(c.ref->still_open[1]);
                    break;
                default:
                    break;
            }
            return;
        }

        // asserter: drive the capital schedule, cancel what never opened,
        // then collect the refund
        if (cfg_.premature_refund_at >= 0) {
            if (now == cfg_.premature_refund_at)
                ledger_.broadcast(ph2_->try_early_refund, op);
            if (tried_refund_ && !refunded_) try_broadcast(ph2_->early_refund, op, now);
        }
        if (cfg_.skip_cancellations) try_broadcast(ph2_->refund, op, now); // the 5R+2 gate
        uint32_t epoch = phase2_epoch(now);
        uint64_t budget = schedule_budget(epoch);
        uint64_t committed = 0;
        for (uint32_t j = 0; j < ph2_->challengers.size(); ++j)
            if (comps_[ph2_->components[j]].dyn_round > 0) ++committed;
        bool all_done = now >= ts_ + 2;
        for (uint32_t j = 0; j < ph2_->challengers.size() && now >= ts_ + 2; ++j) {
            Outpoint gate{ph2_->start, static_cast<uint16_t>(1 + j)};
            TemplateId spender = ledger_.output_spender(gate);
            if (spender < 0) {
                if (!cfg_.skip_cancellations) try_broadcast(ph2_->reg_timeout[j], op, now);
                all_done = false;
                continue;
            }
            if (spender == ph2_->reg_timeout[j]) continue;
            auto& c = comps_[ph2_->components[j]];
            if (c.inst.terminal()) continue;
            all_done = false;
            switch (c.inst.state) {
                case FlexState::Dormant:
                    if (!cfg_.skip_cancellations && now > c.inst.challenge_deadline())
                        try_broadcast(c.ref->no_bob_challenge, op, now);
                    break;
                case FlexState::Challenged: {
                    // open disputes in permutation order, within this round's
                    // cumulative budget and the recycled capital
                    if (c.dyn_round == 0 && committed < budget &&
                        now > c.inst.challenged_at && book_.can_lock(op, now)) {
                        if (try_broadcast(c.ref->alice_input, op, now)) {
                            c.dyn_round = epoch;
                            ++committed;
                        }
                    }
                    break;
                }
                case FlexState::InputsPublished:
                    if (contest_on(*c.ref) && ledger_.is_confirmed(c.ref->bob_input))
                        try_broadcast(c.ref->alice_cosig, op, now);
                    if (verdict(c)) try_broadcast(c.ref->resolve_alice, op, now);
                    break;
                default:
                    break;
            }
        }
        if (cfg_.skip_cancellations) return;
        if (all_done && !tried_refund_) try_broadcast(ph2_->try_early_refund, op, now);
        if (tried_refund_ && !refunded_) try_broadcast(ph2_->early_refund, op, now);
    }

    // ---- confirmation effects ----------------------------------------------

    void settle_comp(CompRuntime& c, Period at) {
        if (c.settled || !c.inst.terminal()) return;
        const auto& inst = c.inst;
        if (inst.state == FlexState::Resolved) {
            OperatorId loser = inst.winner == inst.alice ? inst.bob : inst.alice;
            bool winner_bonded = inst.winner == inst.alice ? inst.alice_bonded : inst.bob_bonded;
            bool loser_bonded = loser == inst.alice ? inst.alice_bonded : inst.bob_bonded;
            if (winner_bonded && loser_bonded)
                book_.settle_dispute(inst.winner, loser, at);
            else if (winner_bonded)
                book_.unlock_bond(inst.winner, at);
            else if (loser_bonded)
                book_.unlock_bond(loser, at);
            if (disable_ && loser != kNoOperator && inst.winner != kNoOperator)
                disable_->on_loss_reveal(loser, inst.winner);
            if (c.ref->phase == 1) mark_eliminated(loser, c.ref->round, at);
        } else if (inst.state == FlexState::TimedOutCut) {
            if (inst.alice_bonded) book_.unlock_bond(inst.alice, at);
            if (inst.bob_bonded) book_.unlock_bond(inst.bob, at);
        } else { // Cancelled
            if (inst.alice_bonded) book_.unlock_bond(inst.alice, at);
            if (inst.bob_bonded) book_.unlock_bond(inst.bob, at);
        }
        c.settled = true;
    }

    void mark_eliminated(OperatorId op, uint16_t round, Period at) {
        if (op == kNoOperator) return;
        auto& r = rt(op);
        if (r.eliminated) return;
        r.eliminated = true;
        r.eliminated_at = at;
        r.eliminated_round = round;
    }

    void apply_confirm(TemplateId tpl, OperatorId by, Period at) {
        const auto& t = dag_.tpl(tpl);
        int32_t ci = comp_of_tpl_[static_cast<size_t>(tpl)];
        switch (t.kind) {
            case TemplateKind::EnableRound: {
                auto& r = rt(t.alice);
                if (t.round == 1) r.registered = true;
                r.arrived_round = std::max<uint16_t>(r.arrived_round, t.round);
                return;
            }
            case TemplateKind::WinPhase1:
                ++win_confirmations_;
                if (winner_ == kNoOperator) {
                    winner_ = t.alice;
                    win_period_ = at;
                }
                return;
            case TemplateKind::BobChallenge: {
                auto& c = comps_[static_cast<size_t>(ci)];
                auto res = c.inst.step({FlexEventType::BobChallenge, t.bob, at}, avp_);
                if (res == FlexStepResult::Ok) {
                    c.inst.step({FlexEventType::PostBond, t.bob, at}, avp_);
                    book_.lock_bond(t.bob, at);
                } else {
                    settle_comp(c, at);
                }
                return;
            }
            case TemplateKind::AliceInput: {
                auto& c = comps_[static_cast<size_t>(ci)];
                auto res = c.inst.step({FlexEventType::PostBond, t.alice, at}, avp_);
                if (res == FlexStepResult::Ok) {
                    book_.lock_bond(t.alice, at);
                    book_.pay_publication(t.alice, at);
                    c.inst.step({FlexEventType::AliceInput, t.alice, at}, avp_);
                }
                settle_comp(c, at);
                return;
            }
            case TemplateKind::BobInput:
                comps_[static_cast<size_t>(ci)].inst.step({FlexEventType::BobInput, t.bob, at},
                                                          avp_);
                return;
            case TemplateKind::NoBobChallenge: {
                auto& c = comps_[static_cast<size_t>(ci)];
                if (tpl == c.ref->no_bob_challenge_unreg)
                    c.inst.cancel_unopened(at);
                else if (c.inst.state == FlexState::Dormant)
                    c.inst.step({FlexEventType::NoBobChallenge, t.alice, at}, avp_);
                if (c.ref->phase == 1) mark_eliminated(t.bob, t.round, at);
                settle_comp(c, at);
                return;
            }
            case TemplateKind::AsserterTimeout: {
                auto& c = comps_[static_cast<size_t>(ci)];
                c.inst.cancel_unopened(at);
                mark_eliminated(t.alice, t.round, at);
                settle_comp(c, at);
                return;
            }
            case TemplateKind::FlexInternal: {
                auto& c = comps_[static_cast<size_t>(ci)];
                if (t.step == FlexStep::ResolveAliceWins || t.step == FlexStep::ResolveBobWins)
                    c.inst.step({FlexEventType::ResolveByAvp, by, at}, avp_);
                else if (t.step == FlexStep::BobWinsTimeout)
                    c.inst.step({FlexEventType::Timeout, t.alice, at}, avp_);
                settle_comp(c, at);
                return;
            }
            case TemplateKind::DisputeTimeout: {
                ++dt_by_[by];
                const MatchSlotRef* slot_match = nullptr;
                for (const auto& m : slot_->matches)
                    if (m.dispute_timeout == tpl) slot_match = &m;
                if (!slot_match) return;
                auto retire = [&](OperatorId x) {
                    if (arrived(x, slot_match->round) &&
                        rt(x).arrived_round == slot_match->round)
                        mark_eliminated(x, slot_match->round, at);
                };
                for (OperatorId x : slot_match->left) retire(x);
                for (OperatorId x : slot_match->right) retire(x);
                uint16_t flat = flat_index_of(*slot_match);
                for (uint32_t cj : slot_->components) {
                    auto& c = comps_[cj];
                    if (c.ref->bracket_slot == flat && !c.inst.terminal() &&
                        c.inst.state != FlexState::Dormant) {
                        c.inst.step({FlexEventType::Timeout, kNoOperator, at}, avp_);
                        settle_comp(c, at);
                    }
                }
                return;
            }
            case TemplateKind::StartTournament:
                ts_ = at;
                phase2_asserter_ = t.alice;
                ph2_ = &slot_->phase2[t.alice - 1];
                for (uint32_t cj : ph2_->components)
                    comps_[cj].inst.scheduled_start = at + 2;
                return;
            case TemplateKind::RegInPhase2:
                rt(t.bob).registered_phase2 = true;
                return;
            case TemplateKind::TryEarlyRefund:
                tried_refund_ = true;
                return;
            case TemplateKind::Refund:
                refunded_ = true;
                refund_period_ = at;
                early_refund_ = ph2_ != nullptr && tpl == ph2_->early_refund;
                return;
            case TemplateKind::StillOpen: {
                auto& c = comps_[static_cast<size_t>(ci)];
                c.inst.step({FlexEventType::StillOpen, t.bob, at}, avp_);
                settle_comp(c, at);
                return;
            }
            default:
                return;
        }
    }

    uint16_t flat_index_of(const MatchSlotRef& m) const {
        uint32_t off = 0;
        for (uint16_t r = 1; r < m.round; ++r) off += dag_.bracket_size >> r;
        return static_cast<uint16_t>(off + m.index);
    }

    void check_oaa(Period now) {
        if (oaa_ || !ledger_.is_confirmed(slot_->anchor)) return;
        Period window_end =
            ledger_.confirmed_period(slot_->anchor) + cfg_.registration_window;
        if (now < window_end) return;
        OaaVerdict v;
        v.slot = 0;
        v.opener = ledger_.confirmed_broadcaster(slot_->anchor);
        v.window_end = window_end;
        for (const auto& chain : slot_->chains) {
            TemplateId reg = chain.enable[0];
            if (ledger_.is_confirmed(reg) && ledger_.confirmed_period(reg) < window_end)
                ++v.assertions_seen;
        }
        v.is_oaa = v.assertions_seen == 0;
        if (v.is_oaa) side_.slash(book_, v.opener, now, slot_->link_index, tc_events_);
        oaa_ = v;
    }

    // ---- finalization ------------------------------------------------------

    void classify_matches(RunReport& rep) {
        for (const auto& m : slot_->matches) {
            if (m.left.empty() && m.right.empty()) continue;
            if (m.left.empty() || m.right.empty()) continue; // bye slot, no match
            MatchOutcome mo;
            mo.round = m.round;
            mo.index = m.index;
            bool left_in = false, right_in = false;
            OperatorId la = kNoOperator, lb = kNoOperator;
            for (OperatorId x : m.left)
                if (arrived(x, m.round)) left_in = true, la = x;
            for (OperatorId x : m.right)
                if (arrived(x, m.round)) right_in = true, lb = x;
            mo.dual_cut = m.dispute_timeout >= 0 && ledger_.is_confirmed(m.dispute_timeout);
            if (m.selector_output != 0xffff && !mo.dual_cut) {
                TemplateId sp =
                    ledger_.output_spender(Outpoint{slot_->anchor, m.selector_output});
                if (sp >= 0) mo.advanced = dag_.tpl(sp).alice;
            }
            if (!left_in && !right_in) {
                mo.chain_case = ChainCase::Case4Neither;
            } else if (left_in && !right_in) {
                mo.chain_case = ChainCase::Case2AliceOnly;
            } else if (!left_in && right_in) {
                mo.chain_case = ChainCase::Case3BobOnly;
            } else {
                int32_t ci = comp_index(la, lb, m.round);
                if (ci >= 0) {
                    const auto& inst = comps_[static_cast<size_t>(ci)].inst;
                    bool challenged = inst.challenged_at >= 0;
                    if (inst.state == FlexState::Resolved)
                        mo.chain_case = ChainCase::CaseResolved;
                    else if (challenged)
                        mo.chain_case = ChainCase::Case1Challenged;
                    else if (inst.state == FlexState::Cancelled)
                        mo.chain_case = ChainCase::Case1NoChallenge;
                    else
                        mo.chain_case = ChainCase::Case1Dormant;
                }
            }
            rep.case_coverage[mo.chain_case]++;
            rep.phase1.matches.push_back(mo);
        }
    }

    void check_soundness() {
        if (win_confirmations_ > 1) violations_.push_back("multiple WinPhase1 confirmations");
        for (OperatorId op = 1; op <= cfg_.n_ops; ++op) {
            const auto& r = ops_[op];
            if (!r.eliminated) continue;
            const auto& chain = slot_->chains[op - 1];
            for (uint16_t rd = r.eliminated_round; rd < chain.enable.size(); ++rd) {
                TemplateId t = chain.enable[rd];
                if (ledger_.is_confirmed(t) && ledger_.confirmed_period(t) > r.eliminated_at)
                    violations_.push_back("post-elimination EnableRound by operator " +
                                          std::to_string(op));
            }
            if (ledger_.is_confirmed(chain.win_phase1) &&
                ledger_.confirmed_period(chain.win_phase1) > r.eliminated_at)
                violations_.push_back("post-elimination WinPhase1 by operator " +
                                      std::to_string(op));
        }
        if (book_.total_units() != initial_units_)
            violations_.push_back("conservation breach: " + std::to_string(initial_units_) +
                                  " -> " + std::to_string(book_.total_units()));
    }

    Period horizon() const {
        if (cfg_.horizon > 0) return cfg_.horizon;
        Period h = static_cast<Period>(cfg_.registration_window) +
                   6 * static_cast<Period>(dag_.rounds) + 8;
        if (!cfg_.phase1_only && !dag_.slots[0].phase2.empty()) {
            uint32_t c_max =
                static_cast<uint32_t>(dag_.slots[0].phase2[0].challengers.size());
            uint32_t r2 = dag_.params.phase2_rounds
                              ? dag_.params.phase2_rounds
                              : std::max(1u, ceil_log2(c_max + 1));
            h += 2 + kPeriodsPerEpoch * static_cast<Period>(r2) + 6;
        }
        return h;
    }

};

} // namespace

RunReport run_tournament(const Dag& dag, const RunConfig& cfg) {
    Engine e(dag, cfg);
    e.bootstrap();
    const Period stop = e.horizon();
    std::optional<Prng> fuzz;
    if (cfg.reorder_seed) fuzz.emplace(*cfg.reorder_seed);
    for (Period p = 0; p < stop; ++p) {
        for (OperatorId op = 1; op <= e.n_parties_; ++op) {
            if (op <= cfg.n_ops) {
                e.decide_registration(op, p);
                e.decide_phase1_disputes(op, p);
                e.decide_advance(op, p);
                e.decide_stall_watch(op, p);
            }
            e.decide_phase2(op, p);
        }
        if (fuzz) {
            auto perm = fuzz->permutation(
                static_cast<uint32_t>(e.ledger_.pending_in_current_period()));
            e.ledger_.reorder_within_period(perm);
        }
        e.ledger_.advance(1);
        e.check_oaa(e.ledger_.now());
        std::vector<TcEvent> side_log;
        e.side_.tick(e.ledger_.now(), side_log);
        for (auto& ev : side_log) e.tc_events_.push_back(ev);
    }

    RunReport rep;
    rep.phase1.winner = e.winner_;
    rep.phase1.win_phase1_confirmations = e.win_confirmations_;
    rep.phase1.makespan = e.win_period_ >= 0 ? e.win_period_ - e.p0_ : -1;
    for (OperatorId op = 1; op <= cfg.n_ops; ++op)
        if (e.ops_[op].eliminated) rep.phase1.eliminated.push_back(op);
    e.classify_matches(rep);
    if (!cfg.phase1_only && e.ph2_ != nullptr) {
        Phase2Outcome p2;
        p2.refunded = e.refunded_;
        p2.early_refund = e.early_refund_;
        p2.finished_at = e.refund_period_;
        for (uint32_t j = 0; j < e.ph2_->challengers.size(); ++j) {
            if (e.ledger_.is_confirmed(e.ph2_->reg_in[j])) ++p2.challengers_registered;
            const auto& c = e.comps_[e.ph2_->components[j]];
            if (c.inst.challenged_at >= 0) p2.rounds_used = std::max(p2.rounds_used, c.dyn_round);
        }
        rep.phase2 = p2;
    }
    rep.oaa = e.oaa_;
    e.check_soundness();
    rep.violations = e.violations_;
    rep.trace_digest = e.ledger_.trace_digest();
    rep.final_balance.assign(e.n_parties_ + 1, 0);
    rep.peak_drawdown.assign(e.n_parties_ + 1, 0);
    for (OperatorId op = 1; op <= e.n_parties_; ++op) {
        rep.final_balance[op] = e.book_.available(op, e.ledger_.now()) + e.book_.locked(op);
        rep.peak_drawdown[op] = e.book_.peak_drawdown(op);
    }
    rep.capital_events = e.book_.events();
    for (size_t ci = 0; ci < e.comps_.size(); ++ci)
        for (const auto& tr : e.comps_[ci].inst.log) {
            rep.flex_log.push_back(tr);
            rep.flex_log.back().instance = static_cast<int32_t>(ci);
        }
    if (e.disable_) {
        for (OperatorId op = 1; op <= e.n_parties_; ++op)
            if (e.disable_->disabled(op)) rep.disabled_parties.push_back(op);
    }
    rep.blocked_actions = e.blocked_actions_;
    rep.dispute_timeouts_by = e.dt_by_;
    rep.tc_events = e.tc_events_;
    rep.trace_jsonl = e.ledger_.trace_jsonl();
    rep.end_period = e.ledger_.now();
    return rep;
}

Phase1Outcome run_phase1(const Dag& dag, const RunConfig& cfg) {
    RunConfig c = cfg;
    c.phase1_only = true;
    return run_tournament(dag, c).phase1;
}

Phase2Outcome run_phase2(const Dag& dag, OperatorId asserter,
                         const std::vector<OperatorId>& challengers,
                         const Phase2Schedule& schedule,
                         const std::function<bool(uint64_t)>& avp,
                         const std::vector<uint64_t>& assertions, uint64_t seed) {
    RunConfig cfg;
    cfg.n_ops = dag.params.n_ops;
    cfg.seed = seed;
    cfg.schedule = schedule;
    cfg.avp = avp;
    cfg.assertions = assertions;
    cfg.phase2_challengers = challengers;
    cfg.strategies.assign(cfg.n_ops, Strategy::abstain());
    cfg.strategies[asserter - 1] = Strategy::honest();
    RunReport r = run_tournament(dag, cfg);
    if (!r.phase2) throw SimError("phase 2 never activated");
    return *r.phase2;
}

// ---------------------------------------------------------------------------

ParallelOutcome run_parallel_brackets(uint32_t n_ops, uint32_t q, int64_t amic,
                                      const BondParams& bonds,
                                      const std::function<bool(uint64_t)>& avp,
                                      const std::vector<uint64_t>& assertions,
                                      uint64_t seed) {
    if (!is_power_of_two(q)) throw SimError("Q must be a power of two");
    int64_t per_round_need =
        static_cast<int64_t>(q) * (bonds.aosb + bonds.publication_cost + bonds.fee);
    if (amic < per_round_need)
        throw SimError("InsufficientCapital: AMIC cannot fund Q concurrent disputes");
    uint32_t r = ceil_log2(n_ops);
    uint32_t logq = ceil_log2(q);
    if (logq > r) throw SimError("Q exceeds the bracket depth");

    ParallelOutcome out;
    if (q == 1 && n_ops <= 64) {
        DagParams p;
        p.n_ops = n_ops;
        p.include_phase2 = false;
        DagBuilder b(p);
        b.build_tc();
        b.build_phase1(0, 0);
        Dag dag = b.take();
        RunConfig cfg;
        cfg.n_ops = n_ops;
        cfg.seed = seed;
        cfg.phase1_only = true;
        cfg.strategies.assign(n_ops, Strategy::honest());
        if (!assertions.empty()) cfg.assertions = assertions;
        cfg.avp = avp;
        cfg.bonds = bonds;
        auto p1 = run_phase1(dag, cfg);
        out.winner = p1.winner;
        out.rounds = r;
        out.makespan = p1.makespan;
        return out;
    }
    // Abstract multi-bracket schedule: each survivor plays Q matches per
    // round, multiplying the elimination rate by 2^log2(Q); wall clock is
    // R - log2 Q rounds of 6 periods.
    uint32_t rounds = r - logq;
    std::vector<OperatorId> survivors;
    for (OperatorId op = 1; op <= n_ops; ++op) survivors.push_back(op);
    auto truth = [&](OperatorId op) {
        uint64_t a = op < assertions.size() ? assertions[op] : (op == 1 ? 1 : 2ULL * op);
        return avp ? avp(a) : (a & 1) == 1;
    };
    for (uint32_t round = 0; round < rounds && survivors.size() > 1; ++round) {
        uint64_t keep = std::max<uint64_t>(1, survivors.size() >> (logq + 1));
        std::stable_sort(survivors.begin(), survivors.end(), [&](OperatorId a, OperatorId b) {
            bool ta = truth(a), tb = truth(b);
            if (ta != tb) return ta;
            return a < b;
        });
        survivors.resize(keep);
    }
    out.winner = survivors.front();
    out.rounds = rounds;
    out.makespan = 6 * static_cast<Period>(rounds);
    return out;
}

// ---------------------------------------------------------------------------

LotteryOutcome run_lottery(const std::vector<LotteryParticipant>& participants) {
    if (participants.empty()) throw SimError("lottery needs participants");
    LotteryOutcome out;
    uint32_t n = static_cast<uint32_t>(participants.size());
    out.template_count = count_slot_dag(std::max(2u, n), 0, false).templates;

    std::vector<const LotteryParticipant*> bracket;
    for (const auto& p : participants) bracket.push_back(&p);
    uint32_t size = n <= 1 ? 1 : (1u << ceil_log2(n));
    bracket.resize(size, nullptr);

    auto usable = [](const LotteryParticipant* p) {
        return p && p->reveals && p->reveal_matches_commit;
    };
    for (const auto& p : participants) {
        if (!p.reveals)
            out.forfeits.push_back(std::to_string(p.id) + " no-reveal");
        else if (!p.reveal_matches_commit)
            out.forfeits.push_back(std::to_string(p.id) + " reveal-mismatch");
    }

    while (bracket.size() > 1) {
        std::vector<const LotteryParticipant*> next;
        for (size_t i = 0; i + 1 < bracket.size(); i += 2) {
            const auto* a = bracket[i];
            const auto* b = bracket[i + 1];
            bool a_ok = usable(a), b_ok = usable(b);
            if (a_ok && b_ok)
                next.push_back(lottery_selector(a->seed, b->seed) == 1 ? a : b);
            else if (a_ok)
                next.push_back(a); // opponent forfeits by timeout
            else if (b_ok)
                next.push_back(b);
            else
                next.push_back(nullptr);
        }
        bracket = std::move(next);
    }
    out.winner = bracket[0] ? bracket[0]->id : kNoOperator;
    return out;
}

} // namespace tournsim
