#include "tournsim/tc.hpp"

#include <sstream>

namespace tournsim {

const char* to_string(TcEventKind k) {
    switch (k) {
        case TcEventKind::Advanced: return "Advanced";
        case TcEventKind::Opened: return "Opened";
        case TcEventKind::OaaSlashed: return "OaaSlashed";
        case TcEventKind::Migrated: return "Migrated";
    }
    return "?";
}

const char* to_string(TcStatus s) {
    switch (s) {
        case TcStatus::Ok: return "Ok";
        case TcStatus::SlotTaken: return "SlotTaken";
        case TcStatus::TimelockNotExpired: return "TimelockNotExpired";
        case TcStatus::NoSignatures: return "NoSignatures";
        case TcStatus::WindowNotElapsed: return "WindowNotElapsed";
        case TcStatus::AlreadyOpen: return "AlreadyOpen";
    }
    return "?";
}

void SideSystem::slash(CapitalBook& book, OperatorId opener, Period at, uint32_t link,
                       std::vector<TcEvent>& log) {
    book.slash_apsb(opener, at);
    removals_.push_back(PendingRemoval{opener, at, link, false});
    log.push_back(TcEvent{at, link, TcEventKind::OaaSlashed, opener});
}

void SideSystem::tick(Period now, std::vector<TcEvent>& log) {
    for (auto& r : removals_) {
        if (!r.done && now >= r.decided_at + latency_) {
            r.done = true;
            log.push_back(TcEvent{now, r.link, TcEventKind::Migrated, r.op});
        }
    }
}

bool SideSystem::removal_scheduled(OperatorId op) const {
    for (const auto& r : removals_)
        if (r.op == op) return true;
    return false;
}

bool SideSystem::migrated(OperatorId op) const {
    for (const auto& r : removals_)
        if (r.op == op && r.done) return true;
    return false;
}

uint64_t required_buffer_links(uint64_t active_bridge_utxos, Period decision_latency,
                               Period admission_interval) {
    if (admission_interval <= 0) throw SimError("admission interval must be positive");
    uint64_t latency_links =
        static_cast<uint64_t>((decision_latency + admission_interval - 1) / admission_interval);
    return active_bridge_utxos + latency_links;
}

TournamentChain::TournamentChain(const Dag& dag, uint32_t committee_size, Period t_z)
    : dag_(&dag), committee_size_(committee_size), t_z_(t_z) {
    slashed_.assign(dag.slots.size(), false);
}

uint32_t TournamentChain::remaining_links() const {
    return static_cast<uint32_t>(dag_->tc_links.size()) - links_published_;
}

TcStatus TournamentChain::advance_link(Ledger& ledger, OperatorId by, uint32_t signatures) {
    if (links_published_ >= dag_->tc_links.size()) throw SimError("tc chain exhausted");
    if (signatures < 1 || signatures > committee_size_) return TcStatus::NoSignatures;
    TemplateId prev = dag_->tc_links[links_published_ - 1];
    TemplateId next = dag_->tc_links[links_published_];
    if (!ledger.is_confirmed(prev)) return TcStatus::TimelockNotExpired;
    Period since = ledger.confirmed_period(prev);
    Period gate = since + dag_->tpl(next).inputs[0].required_timelock;
    if (t_z_ > 0 && links_published_ >= 2)
        gate = since + committee_delay(t_z_, signatures);
    if (ledger.now() < gate) return TcStatus::TimelockNotExpired;
    auto r = ledger.broadcast(next, by);
    if (!r.accepted()) return TcStatus::TimelockNotExpired;
    ++links_published_;
    events_.push_back(TcEvent{ledger.now(), links_published_ - 1, TcEventKind::Advanced, by});
    return TcStatus::Ok;
}

TcStatus TournamentChain::open_tournament(Ledger& ledger, uint32_t slot_index,
                                          OperatorId opener) {
    const SlotRefs& slot = dag_->slots.at(slot_index);
    if (ledger.is_confirmed(slot.anchor)) return TcStatus::AlreadyOpen;
    if (!ledger.is_confirmed(slot.link)) return TcStatus::TimelockNotExpired;
    Outpoint start{slot.link, static_cast<uint16_t>(1 + slot.start_output)};
    if (ledger.output_spent(start)) return TcStatus::SlotTaken;
    auto e = ledger.earliest_spendable(slot.anchor, 0);
    if (!e || *e > ledger.now()) return TcStatus::TimelockNotExpired;
    auto r = ledger.broadcast(slot.anchor, opener);
    if (r.status == BroadcastStatus::UnauthorizedBroadcaster) throw SimError("anchor covenant broken");
    if (!r.accepted()) return TcStatus::SlotTaken;
    events_.push_back(TcEvent{ledger.now(), slot.link_index, TcEventKind::Opened, opener});
    return TcStatus::Ok;
}

std::optional<Period> TournamentChain::window_end(const Ledger& ledger,
                                                  uint32_t slot_index) const {
    const SlotRefs& slot = dag_->slots.at(slot_index);
    if (!ledger.is_confirmed(slot.anchor)) return std::nullopt;
    return ledger.confirmed_period(slot.anchor) + dag_->params.registration_window;
}

uint32_t TournamentChain::assertions_in_window(const Ledger& ledger,
                                               uint32_t slot_index) const {
    const SlotRefs& slot = dag_->slots.at(slot_index);
    auto end = window_end(ledger, slot_index);
    if (!end) return 0;
    uint32_t count = 0;
    for (const auto& chain : slot.chains) {
        TemplateId reg = chain.enable[0];
        if (ledger.is_confirmed(reg) && ledger.confirmed_period(reg) < *end) ++count;
    }
    return count;
}

OaaVerdict TournamentChain::detect_and_slash_oaa(const Ledger& ledger, uint32_t slot_index,
                                                 CapitalBook& book, SideSystem& side) {
    const SlotRefs& slot = dag_->slots.at(slot_index);
    auto end = window_end(ledger, slot_index);
    if (!end) throw SimError("WindowNotElapsed: slot not anchored");
    if (ledger.now() < *end) throw SimError("WindowNotElapsed");
    OaaVerdict v;
    v.slot = slot_index;
    v.opener = ledger.confirmed_broadcaster(slot.anchor);
    v.window_end = *end;
    v.assertions_seen = assertions_in_window(ledger, slot_index);
    v.is_oaa = v.assertions_seen == 0;
    if (v.is_oaa && !slashed_[slot_index]) {
        slashed_[slot_index] = true;
        side.slash(book, v.opener, ledger.now(), slot.link_index, events_);
    }
    return v;
}

std::string TournamentChain::events_jsonl() const {
    std::ostringstream os;
    for (const auto& e : events_) {
        os << "{\"period\":" << e.period << ",\"link\":" << e.link_index << ",\"event\":\""
           << to_string(e.kind) << "\",\"oid\":" << e.oid << "}\n";
    }
    return os.str();
}

} // namespace tournsim
