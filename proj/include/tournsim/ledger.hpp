#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tournsim/dag.hpp"
#include "tournsim/types.hpp"

namespace tournsim {

// A template instantiates at most once per run, so (template, index) is a
// run-unique outpoint; the display tx_id is the template's content hash.
struct Outpoint {
    TemplateId tpl = kExternalFunding;
    uint16_t index = 0;
    bool operator==(const Outpoint&) const = default;
};

enum class BroadcastStatus : uint8_t {
    Pending,
    Confirmed,
    UnauthorizedBroadcaster,
    MissingInput,
    TimelockNotExpired,
    ConflictLost,
    AlreadyBroadcast,
    Expired, // horizon reached while still pending
};

const char* to_string(BroadcastStatus s);

struct BroadcastReceipt {
    uint32_t seq = 0;
    BroadcastStatus status = BroadcastStatus::Pending;
    bool accepted() const {
        return status == BroadcastStatus::Pending || status == BroadcastStatus::Confirmed;
    }
};

struct TraceRecord {
    Period period = 0;
    uint64_t tx_id = 0;
    TemplateId tpl = -1;
    TemplateKind kind = TemplateKind::FlexInternal;
    OperatorId broadcaster = kNoOperator;
};

// Intra-period censorship: delays a target operator's broadcasts by a
// fraction of one period. Fractions are capped strictly below 1.0, so a
// directive can only reorder within the period, never move a confirmation
// across a period boundary.
struct CensorDirective {
    OperatorId against = kNoOperator; // whose broadcasts are delayed
    double delay = 0.0;               // in periods, < 1.0
};

class Ledger {
public:
    explicit Ledger(const Dag& dag);

    Period now() const { return now_; }
    Time time() const { return Time{now_}; }

    BroadcastReceipt broadcast(TemplateId tpl, OperatorId by);
    // Confirms what can confirm this period, then moves time forward.
    void advance(Period periods);
    // Processes the current period's queue without moving time; advance()
    // calls this once per elapsed period.
    void settle_current_period();

    // Applies a permutation to the broadcasts queued in the current period.
    // Throws SimError("InvalidPermutation") if it is not a bijection on them.
    void reorder_within_period(const std::vector<uint32_t>& permutation);

    void add_censorship(CensorDirective d);
    void clear_censorship() { censors_.clear(); }

    bool is_confirmed(TemplateId tpl) const { return confirmed_at_[static_cast<size_t>(tpl)] >= 0; }
    Period confirmed_period(TemplateId tpl) const { return confirmed_at_[static_cast<size_t>(tpl)]; }
    OperatorId confirmed_broadcaster(TemplateId tpl) const { return confirmed_by_[static_cast<size_t>(tpl)]; }
    bool output_exists(const Outpoint& o) const;
    bool output_spent(const Outpoint& o) const;
    TemplateId output_spender(const Outpoint& o) const;

    // Earliest period at which `tpl` could satisfy input `i`'s timelocks,
    // or nullopt if the producer has not confirmed. Exposes the ledger's
    // TimelockNotExpired notion to callers that probe before broadcasting.
    std::optional<Period> earliest_spendable(TemplateId tpl, size_t input) const;
    bool spendable_now(TemplateId tpl) const;

    BroadcastStatus status_of(uint32_t seq) const { return receipts_[seq]; }
    size_t pending_count() const { return pending_.size(); }
    size_t pending_in_current_period() const {
        size_t n = 0;
        for (const auto& p : pending_)
            if (p.submitted == now_) ++n;
        return n;
    }

    const std::vector<TraceRecord>& trace() const { return trace_; }
    uint64_t trace_digest() const;
    std::string trace_jsonl() const;

    // Fired on every confirmation, before the next queue entry is examined.
    std::function<void(TemplateId, OperatorId, Period)> on_confirm;
    // Fired once per confirmed transaction for fee accounting.
    std::function<void(OperatorId, Period)> on_fee;

    const Dag& dag() const { return *dag_; }

private:
    struct Pending {
        TemplateId tpl;
        OperatorId by;
        uint32_t seq;
        Period submitted;
        double delay;
        uint8_t priority;
        uint32_t rank; // reorder override within the current period
    };

    const Dag* dag_;
    Period now_ = 0;
    std::vector<Period> confirmed_at_;
    std::vector<OperatorId> confirmed_by_;
    std::vector<TemplateId> spent_by_; // flat, indexed by dag output offset
    std::vector<Pending> pending_;
    std::vector<BroadcastStatus> receipts_;
    std::vector<CensorDirective> censors_;
    std::vector<TraceRecord> trace_;
    bool broadcast_seen_(TemplateId tpl) const;
    double censor_delay_(OperatorId by) const;
    enum class Ready { Yes, Waiting, Conflict };
    Ready ready_(const Pending& p) const;
    void confirm_(const Pending& p);
};

} // namespace tournsim
