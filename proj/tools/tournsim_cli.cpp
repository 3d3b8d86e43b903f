#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "tournsim/costmodel.hpp"
#include "tournsim/dag.hpp"
#include "tournsim/scenario.hpp"

using namespace tournsim;

int main(int argc, char** argv) {
    CLI::App app{"deterministic dispute-tournament simulator"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "execute one scenario file");
    std::string run_file, out_dir = "out";
    uint64_t seed_override = 0;
    bool have_seed = false;
    run->add_option("scenario", run_file, "scenario JSON file")->required();
    run->add_option("--out-dir", out_dir, "report directory");
    run->add_option("--seed", seed_override, "override the scenario seed")
        ->each([&](const std::string&) { have_seed = true; });

    // enumerate
    auto* en = app.add_subcommand("enumerate", "exhaustively run a strategy space");
    std::string space_file;
    uint64_t cap = 0;
    uint32_t jobs = 1;
    en->add_option("space", space_file, "space JSON file")->required();
    en->add_option("--cap", cap, "maximum number of points");
    en->add_option("--jobs", jobs, "parallel workers");

    // dag-export
    auto* dx = app.add_subcommand("dag-export", "build a DAG and write its graph file");
    uint32_t dx_n = 4, dx_c = 0;
    bool dx_phase1_only = false, dx_contest = false;
    std::string dx_out = "dag.json";
    dx->add_option("--operators", dx_n, "operator count");
    dx->add_option("--challengers", dx_c, "max phase-2 challengers (0 = N-1)");
    dx->add_flag("--phase1-only", dx_phase1_only, "omit phase-2 templates");
    dx->add_flag("--contest", dx_contest, "include counter-proof input templates");
    dx->add_option("-o,--out", dx_out, "output file");

    // dag-diff
    auto* dd = app.add_subcommand("dag-diff", "structurally compare two DAG exports");
    std::string dd_a, dd_b;
    dd->add_option("a", dd_a)->required();
    dd->add_option("b", dd_b)->required();

    // cost
    auto* co = app.add_subcommand("cost", "closed-form cost calculators");
    CostParams cp;
    uint64_t gc_mb = 50;
    co->add_option("--input-bytes", cp.input_bytes, "circuit input size B");
    co->add_option("--operators", cp.operators, "operator count N");
    co->add_option("--gc-mb", gc_mb, "garbled circuit size, decimal MB");
    co->add_option("--pegins", cp.pegins, "bridge peg-in count U");
    co->add_option("--q", cp.concurrency, "concurrency factor Q");
    co->add_option("--lamport-overhead", cp.lamport_overhead, "witness bytes per signed byte");
    co->add_option("--period-days", cp.period_days, "wall-clock days per timelock period");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            Scenario s = Scenario::from_file(run_file);
            if (have_seed) s.seed = seed_override;
            int rc = run_scenario_to_dir(s, out_dir);
            std::ifstream sum(out_dir + "/summary.txt");
            std::cout << sum.rdbuf();
            return rc;
        }
        if (*en) {
            EnumerationSpace sp = space_from_file(space_file);
            if (cap) sp.cap = cap;
            auto sum = enumerate_space(sp, jobs);
            std::cout << "points: " << sum.points << "\n";
            std::cout << "max WinPhase1 confirmations in any run: " << sum.max_win_phase1
                      << "\n";
            std::cout << "case coverage:\n";
            for (const auto& [k, v] : sum.case_coverage)
                std::cout << "  " << to_string(k) << ": " << v << "\n";
            std::cout << "violations: " << sum.violations.size() << "\n";
            for (const auto& v : sum.violations) std::cout << "  " << v << "\n";
            return sum.violations.empty() ? 0 : 1;
        }
        if (*dx) {
            DagParams p;
            p.n_ops = dx_n;
            p.max_challengers = dx_c;
            p.include_phase2 = !dx_phase1_only;
            p.contest_inputs = dx_contest;
            DagBuilder b(p);
            b.build_tc();
            b.build_phase1(0, 0);
            if (!dx_phase1_only) b.build_phase2(0);
            Dag dag = b.take();
            std::ofstream out(dx_out);
            out << dag.export_json() << "\n";
            auto st = dag.stats();
            std::cout << "templates: " << st.template_count
                      << "  signatures: " << st.signature_count
                      << "  per-party bytes: " << st.per_party_storage_bytes << "\n";
            return 0;
        }
        if (*dd) {
            std::ifstream fa(dd_a), fb(dd_b);
            if (!fa || !fb) throw SimError("cannot open export files");
            std::stringstream sa, sb;
            sa << fa.rdbuf();
            sb << fb.rdbuf();
            std::string diff = dag_diff(sa.str(), sb.str());
            if (diff.empty()) {
                std::cout << "identical\n";
                return 0;
            }
            std::cout << diff;
            return 1;
        }
        if (*co) {
            cp.gc_bytes = gc_mb * 1'000'000;
            auto counts = count_slot_dag(static_cast<uint32_t>(cp.operators), 0, true);
            std::cout << cost_table(cp, counts.max_party_bytes);
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
