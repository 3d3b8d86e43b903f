#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tournsim/types.hpp"

namespace tournsim {

struct BondParams {
    int64_t aosb = 10;             // on-demand bond per dispute
    int64_t adr = 10;              // reward to the winner, taken from the loser's bond
    int64_t fee = 0;               // flat per-confirmed-transaction fee
    int64_t publication_cost = 0;  // per circuit-input publication

    bool valid() const { return aosb >= publication_cost + fee && adr >= 0 && adr <= aosb; }
};

enum class CapitalEventKind : uint8_t {
    LockBond,
    UnlockBond,
    BondForfeit,   // loser's locked bond leaves them
    RewardIn,      // ADR credited to the winner
    Fee,
    Publication,
    ApsbSlash,
    Refund,        // generic credit (e.g. returned deposit)
    Spend,         // generic debit
};

const char* to_string(CapitalEventKind k);

struct CapitalEvent {
    Period period = 0;
    OperatorId party = kNoOperator;
    CapitalEventKind kind = CapitalEventKind::Fee;
    int64_t amount = 0;
};

// Per-party capital time series plus the global conservation accounts.
// Rewards become spendable reward_delay periods after they land.
class CapitalBook {
public:
    CapitalBook() = default;
    CapitalBook(uint32_t n_ops, int64_t starting_balance, BondParams params);

    void set_reward_delay(Period d) { reward_delay_ = d; }

    bool can_lock(OperatorId p, Period at) const;
    void lock_bond(OperatorId p, Period at);
    void unlock_bond(OperatorId p, Period at);
    // Loser's bond pays ADR to the winner; the residue goes to the fee sink.
    void settle_dispute(OperatorId winner, OperatorId loser, Period at);
    void pay_fee(OperatorId p, Period at);
    void pay_publication(OperatorId p, Period at);
    void credit(OperatorId p, int64_t amount, Period at, CapitalEventKind kind);
    void debit(OperatorId p, int64_t amount, Period at, CapitalEventKind kind);

    int64_t apsb(OperatorId p) const { return accounts_[p].apsb; }
    void deposit_apsb(OperatorId p, int64_t amount) { accounts_[p].apsb += amount; }
    void slash_apsb(OperatorId p, Period at);

    int64_t available(OperatorId p, Period at) const;
    int64_t locked(OperatorId p) const { return accounts_[p].locked; }
    int64_t cumulative_adr(OperatorId p) const { return accounts_[p].cum_adr; }
    int64_t cumulative_fees(OperatorId p) const { return accounts_[p].cum_fees; }
    // Peak drawdown so far: max over time of locked capital plus net outflow.
    int64_t peak_drawdown(OperatorId p) const { return accounts_[p].peak_drawdown; }

    int64_t total_units() const; // parties + escrow + fee sink + apsb pool
    int64_t fee_sink() const { return fee_sink_; }
    int64_t escrow() const { return escrow_; }

    const BondParams& params() const { return params_; }
    const std::vector<CapitalEvent>& events() const { return events_; }
    uint32_t parties() const { return static_cast<uint32_t>(accounts_.size()) - 1; }

private:
    struct Account {
        int64_t balance = 0; // excludes locked
        int64_t locked = 0;
        int64_t cum_adr = 0;
        int64_t cum_fees = 0;
        int64_t apsb = 0;
        int64_t starting = 0;
        int64_t pending_reward = 0; // credited but not yet spendable
        Period pending_until = 0;
        int64_t peak_drawdown = 0;
    };
    void note_drawdown(Account& a);
    void mature(Account& a, Period at) const;

    std::vector<Account> accounts_; // index 0 unused (operator ids are 1-based)
    int64_t escrow_ = 0;
    int64_t fee_sink_ = 0;
    BondParams params_;
    Period reward_delay_ = 0;
    std::vector<CapitalEvent> events_;
};

// Completed-run view used by reports and the acceptance suite.
struct CapitalTrace {
    std::vector<CapitalEvent> events;
    uint32_t n_ops = 0;
    int64_t amic = 0; // configured minimum initial capital
    bool complete = false;
};

// Maximum simultaneous locked capital plus unrecouped costs over the run.
// Throws SimError("IncompleteTrace") when the run did not finish.
int64_t peak_capital(const CapitalTrace& trace, OperatorId party);

enum class ScheduleRule : uint8_t { MaintainOrDouble, Gradual, Custom };

struct Phase2Schedule {
    ScheduleRule rule = ScheduleRule::MaintainOrDouble;
    uint32_t k1 = 1;
    std::vector<uint32_t> custom;

    // k_{r+1} given k_r and the challengers still unresolved.
    uint32_t next(uint32_t k_r, uint32_t round, uint64_t remaining) const;
    bool valid() const;
};

// Rounds until C challengers are resolved under reward recycling.
// Throws SimError("InsufficientCapital") if starting_capital cannot fund a
// single dispute.
uint32_t rounds_needed(uint64_t challengers, const Phase2Schedule& schedule,
                       int64_t starting_capital, const BondParams& params);

} // namespace tournsim
