#include "tournsim/economics.hpp"

#include <algorithm>

namespace tournsim {

const char* to_string(CapitalEventKind k) {
    switch (k) {
        case CapitalEventKind::LockBond: return "LockBond";
        case CapitalEventKind::UnlockBond: return "UnlockBond";
        case CapitalEventKind::BondForfeit: return "BondForfeit";
        case CapitalEventKind::RewardIn: return "RewardIn";
        case CapitalEventKind::Fee: return "Fee";
        case CapitalEventKind::Publication: return "Publication";
        case CapitalEventKind::ApsbSlash: return "ApsbSlash";
        case CapitalEventKind::Refund: return "Refund";
        case CapitalEventKind::Spend: return "Spend";
    }
    return "?";
}

CapitalBook::CapitalBook(uint32_t n_ops, int64_t starting_balance, BondParams params)
    : params_(params) {
    if (!params.valid()) throw SimError("invalid BondParams: need adr <= aosb and aosb >= publication + fee");
    accounts_.resize(n_ops + 1);
    for (uint32_t i = 1; i <= n_ops; ++i) {
        accounts_[i].balance = starting_balance;
        accounts_[i].starting = starting_balance;
    }
}

void CapitalBook::mature(Account& a, Period at) const {
    if (a.pending_reward > 0 && at >= a.pending_until) {
        a.balance += a.pending_reward;
        a.pending_reward = 0;
    }
}

void CapitalBook::note_drawdown(Account& a) {
    // locked capital has already left the balance, so this is bonds plus
    // unrecouped costs
    int64_t draw = a.starting - (a.balance + a.pending_reward);
    a.peak_drawdown = std::max(a.peak_drawdown, draw);
}

int64_t CapitalBook::available(OperatorId p, Period at) const {
    const Account& a = accounts_[p];
    int64_t v = a.balance;
    if (a.pending_reward > 0 && at >= a.pending_until) v += a.pending_reward;
    return v;
}

bool CapitalBook::can_lock(OperatorId p, Period at) const {
    return available(p, at) >= params_.aosb;
}

void CapitalBook::lock_bond(OperatorId p, Period at) {
    Account& a = accounts_[p];
    mature(a, at);
    if (a.balance < params_.aosb) throw SimError("InsufficientCapital: bond lock");
    a.balance -= params_.aosb;
    a.locked += params_.aosb;
    note_drawdown(a);
    events_.push_back({at, p, CapitalEventKind::LockBond, params_.aosb});
}

void CapitalBook::unlock_bond(OperatorId p, Period at) {
    Account& a = accounts_[p];
    if (a.locked < params_.aosb) throw SimError("BondNotPosted: unlock without lock");
    a.locked -= params_.aosb;
    a.balance += params_.aosb;
    events_.push_back({at, p, CapitalEventKind::UnlockBond, params_.aosb});
}

void CapitalBook::settle_dispute(OperatorId winner, OperatorId loser, Period at) {
    Account& w = accounts_[winner];
    Account& l = accounts_[loser];
    if (l.locked < params_.aosb || w.locked < params_.aosb)
        throw SimError("BondNotPosted: settle without both bonds");
    // loser's bond: ADR to the winner, residue to the fee sink
    l.locked -= params_.aosb;
    events_.push_back({at, loser, CapitalEventKind::BondForfeit, params_.aosb});
    w.pending_reward += params_.adr;
    w.pending_until = at + reward_delay_;
    mature(w, at);
    w.cum_adr += params_.adr;
    fee_sink_ += params_.aosb - params_.adr;
    events_.push_back({at, winner, CapitalEventKind::RewardIn, params_.adr});
    // winner's own bond comes home
    unlock_bond(winner, at);
    note_drawdown(l);
}

void CapitalBook::pay_fee(OperatorId p, Period at) {
    if (params_.fee == 0 || p == kNoOperator) return;
    Account& a = accounts_[p];
    mature(a, at);
    a.balance -= params_.fee;
    a.cum_fees += params_.fee;
    fee_sink_ += params_.fee;
    note_drawdown(a);
    events_.push_back({at, p, CapitalEventKind::Fee, params_.fee});
}

void CapitalBook::pay_publication(OperatorId p, Period at) {
    if (params_.publication_cost == 0) return;
    Account& a = accounts_[p];
    mature(a, at);
    a.balance -= params_.publication_cost;
    a.cum_fees += params_.publication_cost;
    fee_sink_ += params_.publication_cost;
    note_drawdown(a);
    events_.push_back({at, p, CapitalEventKind::Publication, params_.publication_cost});
}

void CapitalBook::credit(OperatorId p, int64_t amount, Period at, CapitalEventKind kind) {
    Account& a = accounts_[p];
    mature(a, at);
    a.balance += amount;
    escrow_ -= amount;
    events_.push_back({at, p, kind, amount});
}

void CapitalBook::debit(OperatorId p, int64_t amount, Period at, CapitalEventKind kind) {
    Account& a = accounts_[p];
    mature(a, at);
    a.balance -= amount;
    escrow_ += amount;
    note_drawdown(a);
    events_.push_back({at, p, kind, amount});
}

void CapitalBook::slash_apsb(OperatorId p, Period at) {
    Account& a = accounts_[p];
    fee_sink_ += a.apsb;
    events_.push_back({at, p, CapitalEventKind::ApsbSlash, a.apsb});
    a.apsb = 0;
}

int64_t CapitalBook::total_units() const {
    int64_t total = escrow_ + fee_sink_;
    for (const auto& a : accounts_) total += a.balance + a.locked + a.apsb + a.pending_reward;
    return total;
}

// ---------------------------------------------------------------------------

int64_t peak_capital(const CapitalTrace& trace, OperatorId party) {
    if (!trace.complete) throw SimError("IncompleteTrace");
    int64_t locked = 0, outflow = 0, inflow = 0, peak = 0;
    for (const auto& ev : trace.events) {
        if (ev.party != party) continue;
        switch (ev.kind) {
            case CapitalEventKind::LockBond: locked += ev.amount; break;
            case CapitalEventKind::UnlockBond: locked -= ev.amount; break;
            case CapitalEventKind::BondForfeit: locked -= ev.amount; outflow += ev.amount; break;
            case CapitalEventKind::RewardIn: inflow += ev.amount; break;
            case CapitalEventKind::Fee:
            case CapitalEventKind::Publication:
            case CapitalEventKind::Spend: outflow += ev.amount; break;
            case CapitalEventKind::Refund: inflow += ev.amount; break;
            case CapitalEventKind::ApsbSlash: break; // side-system balance
        }
        peak = std::max(peak, locked + outflow - inflow);
    }
    return peak;
}

// ---------------------------------------------------------------------------

bool Phase2Schedule::valid() const {
    if (k1 < 1) return false;
    if (rule == ScheduleRule::Custom) {
        if (custom.empty()) return false;
        for (size_t i = 1; i < custom.size(); ++i)
            if (custom[i] < custom[i - 1]) return false; // must be non-decreasing
    }
    return true;
}

uint32_t Phase2Schedule::next(uint32_t k_r, uint32_t round, uint64_t remaining) const {
    uint64_t n;
    switch (rule) {
        case ScheduleRule::MaintainOrDouble: n = 2ull * k_r; break;
        case ScheduleRule::Gradual: n = k_r + 1ull; break;
        case ScheduleRule::Custom:
            n = round < custom.size() ? custom[round] : custom.back();
            break;
        default: n = k_r;
    }
    if (n < k_r) n = k_r;
    return static_cast<uint32_t>(std::min<uint64_t>(n, remaining));
}

uint32_t rounds_needed(uint64_t challengers, const Phase2Schedule& schedule,
                       int64_t starting_capital, const BondParams& params) {
    if (!schedule.valid()) throw SimError("invalid schedule");
    if (challengers == 0) return 0;
    int64_t per_dispute = params.aosb + params.publication_cost + params.fee;
    if (starting_capital < per_dispute) throw SimError("InsufficientCapital");
    uint64_t affordable = static_cast<uint64_t>(starting_capital / per_dispute);
    uint64_t k = std::min<uint64_t>(std::max<uint64_t>(schedule.k1, 1), affordable);
    if (schedule.rule == ScheduleRule::Custom) k = std::min<uint64_t>(schedule.custom[0], affordable);
    uint64_t resolved = 0;
    uint32_t rounds = 0;
    while (resolved < challengers) {
        uint64_t open = std::min<uint64_t>(k, challengers - resolved);
        resolved += open;
        ++rounds;
        // each win returns the bond and pays ADR, funding the next round
        k = schedule.next(static_cast<uint32_t>(open), rounds, challengers - resolved);
        if (k == 0) k = 1;
    }
    return rounds;
}

} // namespace tournsim
