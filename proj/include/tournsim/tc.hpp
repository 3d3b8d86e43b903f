#pragma once

#include <optional>
#include <vector>

#include "tournsim/dag.hpp"
#include "tournsim/economics.hpp"
#include "tournsim/ledger.hpp"

namespace tournsim {

enum class TcEventKind : uint8_t { Advanced, Opened, OaaSlashed, Migrated };

const char* to_string(TcEventKind k);

struct TcEvent {
    Period period = 0;
    uint32_t link_index = 0;
    TcEventKind kind = TcEventKind::Advanced;
    OperatorId oid = kNoOperator;
};

struct OaaVerdict {
    uint32_t slot = 0;
    OperatorId opener = kNoOperator;
    Period window_end = 0;
    uint32_t assertions_seen = 0;
    bool is_oaa = false;
};

enum class TcStatus : uint8_t {
    Ok,
    SlotTaken,          // non-punitive: another open confirmed first
    TimelockNotExpired,
    NoSignatures,
    WindowNotElapsed,
    AlreadyOpen,
};

const char* to_string(TcStatus s);

// Removal/migration decisions live off-chain; a slash schedules removal and
// the migration completes after the configured decision latency.
class SideSystem {
public:
    explicit SideSystem(Period decision_latency = 0) : latency_(decision_latency) {}

    void slash(CapitalBook& book, OperatorId opener, Period at, uint32_t link,
               std::vector<TcEvent>& log);
    void tick(Period now, std::vector<TcEvent>& log);
    bool removal_scheduled(OperatorId op) const;
    bool migrated(OperatorId op) const;
    Period decision_latency() const { return latency_; }

private:
    struct PendingRemoval {
        OperatorId op;
        Period decided_at;
        uint32_t link;
        bool done = false;
    };
    Period latency_ = 0;
    std::vector<PendingRemoval> removals_;
};

// Buffer sizing: links needed to keep operating through an O&A episode.
uint64_t required_buffer_links(uint64_t active_bridge_utxos, Period decision_latency,
                               Period admission_interval);

// Admission control over one chain instance in one ledger run.
class TournamentChain {
public:
    TournamentChain(const Dag& dag, uint32_t committee_size, Period t_z = 0);

    // Publishes OpenTournament_{i+1}. With t_z > 0 the committee mode applies:
    // i collected signatures allow issuance ceil(T_Z/i) periods after the
    // previous link. With t_z == 0 the fixed inter-link timelock from the
    // build governs (ledger-enforced).
    TcStatus advance_link(Ledger& ledger, OperatorId by, uint32_t signatures);

    // Spends a StartPhase1 output by broadcasting the slot's anchor.
    TcStatus open_tournament(Ledger& ledger, uint32_t slot_index, OperatorId opener);

    // After the registration window: O&A iff no registration confirmed.
    // Throws SimError("WindowNotElapsed") before the window closes.
    OaaVerdict detect_and_slash_oaa(const Ledger& ledger, uint32_t slot_index,
                                    CapitalBook& book, SideSystem& side);

    static Period committee_delay(Period t_z, uint32_t signatures) {
        return (t_z + signatures - 1) / signatures;
    }

    uint32_t links_published() const { return links_published_; }
    uint32_t remaining_links() const;
    const std::vector<TcEvent>& events() const { return events_; }
    std::string events_jsonl() const;

    // The slot's registration window; valid once the slot is anchored.
    std::optional<Period> window_end(const Ledger& ledger, uint32_t slot_index) const;
    uint32_t assertions_in_window(const Ledger& ledger, uint32_t slot_index) const;

private:
    const Dag* dag_;
    uint32_t committee_size_;
    Period t_z_;
    uint32_t links_published_ = 1; // TCStart counts as published
    std::vector<TcEvent> events_;
    std::vector<bool> slashed_;
};

} // namespace tournsim
