#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tournsim/tournament.hpp"

namespace tournsim {

// A scenario fully determines a run: same file + same seed => identical
// trace bytes. Unknown keys are configuration errors.
struct Scenario {
    uint64_t seed = 1;
    uint32_t n_ops = 2;
    uint32_t max_challengers = 0; // 0 = N-1
    uint32_t q = 1;
    Phase2Schedule schedule;
    BondParams bonds;
    std::vector<Strategy> strategies;
    std::vector<uint64_t> assertions; // per operator; odd ids are AVP-true
    bool phase1_only = false;
    bool skip_cancellations = false;
    bool lottery_mode = false;
    std::string contest_method = "none"; // none | A | B
    std::string disable_method = "none"; // none | direct | pairwise | threshold
    uint32_t disable_threshold = 2;
    uint32_t tc_links = 1;
    uint32_t tc_timelock_epochs = 0; // 0 = recommended for N
    uint32_t tc_starts_per_link = 1;
    Period tc_t_z = 0;
    Period extra_confirmation_periods = 0;
    uint32_t registration_window = 1;
    int64_t starting_balance = 1'000'000;
    Period horizon = 0;
    std::vector<OperatorId> phase2_challengers; // force-challenge list

    uint64_t digest() const;
    std::string canonical_json() const;

    static Scenario from_json_text(const std::string& text);
    static Scenario from_file(const std::string& path);
};

struct ScenarioReport {
    Scenario scenario;
    RunReport run;
    uint64_t scenario_digest = 0;
    bool invariants_held = true;
    std::string summary_text;
    std::string outcome_json;
    std::string capital_jsonl;
    std::string capital_table;
    std::string flex_jsonl;
    std::string tc_jsonl;
    std::string trace_jsonl;
};

ScenarioReport run_scenario(const Scenario& s);

// Writes trace/outcome/capital/summary files; returns the process exit code
// (0 = invariants held, 1 = violation, 2 = config/runtime error).
int run_scenario_to_dir(const Scenario& s, const std::string& out_dir);

// Bounded exhaustive exploration of a strategy/participation space.
struct EnumerationSpace {
    Scenario base;
    std::vector<OperatorId> vary_ops;      // default: all operators
    std::vector<Strategy> choices;         // strategies each varied op may take
    bool participation_subsets = false;    // enumerate Honest/Abstain subsets instead
    uint64_t cap = 2'000'000;              // SpaceTooLarge above this many points
};

struct EnumerationSummary {
    uint64_t points = 0;
    std::vector<std::string> violations; // one line per violating scenario
    std::map<ChainCase, uint64_t> case_coverage;
    uint64_t max_win_phase1 = 0;
};

EnumerationSummary enumerate_space(const EnumerationSpace& space, uint32_t jobs = 1);

EnumerationSpace space_from_json_text(const std::string& text);
EnumerationSpace space_from_file(const std::string& path);

} // namespace tournsim
