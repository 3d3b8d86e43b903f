#include "tournsim/ledger.hpp"

#include <algorithm>
#include <sstream>

#include "tournsim/prng.hpp"

namespace tournsim {

const char* to_string(BroadcastStatus s) {
    switch (s) {
        case BroadcastStatus::Pending: return "Pending";
        case BroadcastStatus::Confirmed: return "Confirmed";
        case BroadcastStatus::UnauthorizedBroadcaster: return "UnauthorizedBroadcaster";
        case BroadcastStatus::MissingInput: return "MissingInput";
        case BroadcastStatus::TimelockNotExpired: return "TimelockNotExpired";
        case BroadcastStatus::ConflictLost: return "ConflictLost";
        case BroadcastStatus::AlreadyBroadcast: return "AlreadyBroadcast";
        case BroadcastStatus::Expired: return "Expired";
    }
    return "?";
}

Ledger::Ledger(const Dag& dag) : dag_(&dag) {
    confirmed_at_.assign(dag.templates.size(), -1);
    confirmed_by_.assign(dag.templates.size(), kNoOperator);
    spent_by_.assign(dag.output_count(), -1);
}

bool Ledger::output_exists(const Outpoint& o) const {
    if (o.tpl == kExternalFunding) return true;
    return confirmed_at_[static_cast<size_t>(o.tpl)] >= 0;
}

bool Ledger::output_spent(const Outpoint& o) const {
    if (o.tpl == kExternalFunding) return false;
    return spent_by_[dag_->output_base(o.tpl) + o.index] >= 0;
}

TemplateId Ledger::output_spender(const Outpoint& o) const {
    if (o.tpl == kExternalFunding) return -1;
    return spent_by_[dag_->output_base(o.tpl) + o.index];
}

std::optional<Period> Ledger::earliest_spendable(TemplateId tpl, size_t input) const {
    const auto& in = dag_->tpl(tpl).inputs[input];
    if (in.producer == kExternalFunding) return Period{0};
    Period at = confirmed_at_[static_cast<size_t>(in.producer)];
    if (at < 0) return std::nullopt;
    const auto& out = dag_->tpl(in.producer).outputs[in.out_index];
    uint16_t lock = std::max(out.relative_timelock, in.required_timelock);
    return at + lock;
}

bool Ledger::spendable_now(TemplateId tpl) const {
    const auto& t = dag_->tpl(tpl);
    for (size_t i = 0; i < t.inputs.size(); ++i) {
        auto e = earliest_spendable(tpl, i);
        if (!e || *e > now_) return false;
        const auto& in = t.inputs[i];
        if (in.producer != kExternalFunding &&
            spent_by_[dag_->output_base(in.producer) + in.out_index] >= 0)
            return false;
    }
    return true;
}

bool Ledger::broadcast_seen_(TemplateId tpl) const {
    if (confirmed_at_[static_cast<size_t>(tpl)] >= 0) return true;
    for (const auto& p : pending_)
        if (p.tpl == tpl) return true;
    return false;
}

double Ledger::censor_delay_(OperatorId by) const {
    double d = 0.0;
    for (const auto& c : censors_)
        if (c.against == by || c.against == kNoOperator) d += c.delay;
    // Sustained censorship of a period or more is assumed irrational and is
    // excluded by construction.
    if (d > 0.999) d = 0.999;
    return d;
}

void Ledger::add_censorship(CensorDirective d) {
    if (d.delay < 0.0 || d.delay >= 1.0)
        throw SimError("censorship delay must lie in [0, 1) periods");
    censors_.push_back(d);
}

BroadcastReceipt Ledger::broadcast(TemplateId tpl, OperatorId by) {
    const auto& t = dag_->tpl(tpl);
    BroadcastReceipt r;
    r.seq = static_cast<uint32_t>(receipts_.size());
    if (broadcast_seen_(tpl)) {
        r.status = BroadcastStatus::AlreadyBroadcast;
        receipts_.push_back(r.status);
        return r;
    }
    if (!t.may_broadcast(by)) {
        r.status = BroadcastStatus::UnauthorizedBroadcaster;
        receipts_.push_back(r.status);
        return r;
    }
    // Inputs must exist, be pending (parent broadcast this period counts), or
    // come from external funding; otherwise the broadcast is malformed.
    for (const auto& in : t.inputs) {
        if (in.producer == kExternalFunding) continue;
        if (confirmed_at_[static_cast<size_t>(in.producer)] >= 0) continue;
        bool queued = false;
        for (const auto& p : pending_)
            if (p.tpl == in.producer) queued = true;
        if (!queued) {
            r.status = BroadcastStatus::MissingInput;
            receipts_.push_back(r.status);
            return r;
        }
    }
    uint8_t priority = 1;
    if (t.kind == TemplateKind::AliceWasDisabled || t.kind == TemplateKind::BobWasDisabled)
        priority = 0; // disable branches bind ahead of conflicting spends
    r.status = BroadcastStatus::Pending;
    receipts_.push_back(r.status);
    pending_.push_back(Pending{tpl, by, r.seq, now_, censor_delay_(by), priority, r.seq});
    return r;
}

Ledger::Ready Ledger::ready_(const Pending& p) const {
    const auto& t = dag_->tpl(p.tpl);
    for (size_t i = 0; i < t.inputs.size(); ++i) {
        const auto& in = t.inputs[i];
        if (in.producer == kExternalFunding) continue;
        Period at = confirmed_at_[static_cast<size_t>(in.producer)];
        if (at < 0) return Ready::Waiting;
        TemplateId spender = spent_by_[dag_->output_base(in.producer) + in.out_index];
        if (spender >= 0) return Ready::Conflict;
        const auto& out = dag_->tpl(in.producer).outputs[in.out_index];
        uint16_t lock = std::max(out.relative_timelock, in.required_timelock);
        if (at + lock > now_) return Ready::Waiting;
    }
    return Ready::Yes;
}

void Ledger::confirm_(const Pending& p) {
    const auto& t = dag_->tpl(p.tpl);
    for (const auto& in : t.inputs) {
        if (in.producer == kExternalFunding) continue;
        spent_by_[dag_->output_base(in.producer) + in.out_index] = p.tpl;
    }
    confirmed_at_[static_cast<size_t>(p.tpl)] = now_;
    confirmed_by_[static_cast<size_t>(p.tpl)] = p.by;
    receipts_[p.seq] = BroadcastStatus::Confirmed;
    trace_.push_back(TraceRecord{now_, t.txid, p.tpl, t.kind, p.by});
    if (on_fee) on_fee(p.by, now_);
    if (on_confirm) on_confirm(p.tpl, p.by, now_);
}

void Ledger::settle_current_period() {
    // Deterministic order: priority class, censorship delay, queue rank,
    // then template id. Broadcasts from earlier periods keep their rank.
    std::stable_sort(pending_.begin(), pending_.end(), [](const Pending& a, const Pending& b) {
        if (a.priority != b.priority) return a.priority < b.priority;
        if (a.delay != b.delay) return a.delay < b.delay;
        if (a.rank != b.rank) return a.rank < b.rank;
        return a.tpl < b.tpl;
    });
    bool progressed = true;
    while (progressed) {
        progressed = false;
        for (auto& p : pending_) {
            if (receipts_[p.seq] != BroadcastStatus::Pending) continue;
            switch (ready_(p)) {
                case Ready::Yes:
                    confirm_(p);
                    progressed = true;
                    break;
                case Ready::Conflict:
                    receipts_[p.seq] = BroadcastStatus::ConflictLost;
                    progressed = true;
                    break;
                case Ready::Waiting:
                    break;
            }
        }
    }
    std::erase_if(pending_, [&](const Pending& p) {
        return receipts_[p.seq] != BroadcastStatus::Pending;
    });
}

void Ledger::advance(Period periods) {
    if (periods < 1) throw SimError("advance requires periods >= 1");
    for (Period i = 0; i < periods; ++i) {
        settle_current_period();
        ++now_;
    }
}

void Ledger::reorder_within_period(const std::vector<uint32_t>& permutation) {
    std::vector<size_t> current;
    for (size_t i = 0; i < pending_.size(); ++i)
        if (pending_[i].submitted == now_) current.push_back(i);
    if (permutation.size() != current.size())
        throw SimError("InvalidPermutation: size mismatch");
    std::vector<bool> seen(permutation.size(), false);
    for (uint32_t v : permutation) {
        if (v >= permutation.size() || seen[v]) throw SimError("InvalidPermutation");
        seen[v] = true;
    }
    std::vector<uint32_t> ranks;
    ranks.reserve(current.size());
    for (size_t idx : current) ranks.push_back(pending_[idx].rank);
    std::sort(ranks.begin(), ranks.end());
    for (size_t i = 0; i < current.size(); ++i)
        pending_[current[i]].rank = ranks[permutation[i]];
}

uint64_t Ledger::trace_digest() const {
    Fnv1a h;
    for (const auto& r : trace_) {
        h.add_u64(static_cast<uint64_t>(r.period));
        h.add_u64(r.tx_id);
        h.add_u64(static_cast<uint64_t>(r.kind));
        h.add_u64(r.broadcaster);
    }
    return h.digest();
}

std::string Ledger::trace_jsonl() const {
    std::ostringstream os;
    for (const auto& r : trace_) {
        const auto& t = dag_->tpl(r.tpl);
        os << "{\"period\":" << r.period << ",\"tx_id\":\"" << std::hex << r.tx_id << std::dec
           << "\",\"kind\":\"" << to_string(r.kind);
        if (r.kind == TemplateKind::FlexInternal) os << ":" << to_string(t.step);
        os << "\",\"broadcaster\":" << r.broadcaster << ",\"inputs\":[";
        for (size_t i = 0; i < t.inputs.size(); ++i) {
            if (i) os << ",";
            const auto& in = t.inputs[i];
            os << "{\"tx\":\"";
            if (in.producer == kExternalFunding)
                os << "external";
            else
                os << std::hex << dag_->tpl(in.producer).txid << std::dec;
            os << "\",\"index\":" << in.out_index << "}";
        }
        os << "],\"outputs\":[";
        for (size_t i = 0; i < t.outputs.size(); ++i) {
            if (i) os << ",";
            os << "{\"role\":\"" << to_string(t.outputs[i].role)
               << "\",\"value\":" << t.outputs[i].value
               << ",\"timelock\":" << t.outputs[i].relative_timelock << "}";
        }
        os << "]}\n";
    }
    return os.str();
}

} // namespace tournsim
