#include <doctest.h>

#include <algorithm>
#include <vector>

#include "tournsim/ledger.hpp"

using namespace tournsim;

namespace {

// Tiny hand-crafted graph:
//   [0] root (external)            -> out0 (lock 0), out1 (lock 6)
//   [1] spend_a: spends root.out0
//   [2] spend_b: spends root.out0   (conflicts with spend_a)
//   [3] delayed: spends root.out1   (six-period relative lock)
//   [4] child: spends spend_a.out0  (same-period chaining)
Dag tiny_dag() {
    Dag d;
    auto out = [](uint16_t lock) {
        TemplateOutput o;
        o.relative_timelock = lock;
        return o;
    };
    TxTemplate root;
    root.kind = TemplateKind::TCStart;
    root.inputs = {TemplateInput{kExternalFunding, 0, 0}};
    root.outputs = {out(0), out(6)};
    d.templates.push_back(root);

    TxTemplate a;
    a.kind = TemplateKind::EnableRound;
    a.alice = 1;
    a.inputs = {TemplateInput{0, 0, 0}};
    a.outputs = {out(0)};
    a.authorized = {1};
    d.templates.push_back(a);

    TxTemplate b = a;
    b.alice = 2;
    b.authorized = {2};
    d.templates.push_back(b);

    TxTemplate delayed;
    delayed.kind = TemplateKind::EnableRound;
    delayed.alice = 1;
    delayed.round = 2;
    delayed.inputs = {TemplateInput{0, 1, 0}};
    delayed.outputs = {out(0)};
    d.templates.push_back(delayed);

    TxTemplate child;
    child.kind = TemplateKind::WinPhase1;
    child.alice = 1;
    child.inputs = {TemplateInput{1, 0, 0}};
    d.templates.push_back(child);

    d.finalize();
    return d;
}

// Independent event-list oracle for relative-timelock arithmetic: confirm
// events at parent_period + max(output lock, input lock).
Period oracle_confirm_period(Period parent, uint16_t out_lock, uint16_t in_lock) {
    return parent + std::max(out_lock, in_lock);
}

} // namespace

TEST_CASE("broadcast confirms in the same period without censorship") {
    Dag d = tiny_dag();
    Ledger led(d);
    auto r = led.broadcast(0, 1);
    CHECK(r.accepted());
    led.advance(1);
    CHECK(led.is_confirmed(0));
    CHECK(led.confirmed_period(0) == 0);
}

TEST_CASE("censorship below one period reorders but never crosses the boundary") {
    Dag d = tiny_dag();
    Ledger led(d);
    led.broadcast(0, 1);
    led.advance(1);
    led.add_censorship(CensorDirective{1, 0.5});
    led.broadcast(1, 1); // delayed by the directive
    led.broadcast(2, 2); // not delayed; conflicts on the same output
    led.advance(1);
    // both raced within period 1; the uncensored one confirmed first
    CHECK(led.is_confirmed(2));
    CHECK_FALSE(led.is_confirmed(1));
    CHECK(led.confirmed_period(2) == 1);
    // the confirmed set did not slip into period 2
    CHECK(led.pending_count() == 0);

    SUBCASE("delays of a full period are rejected") {
        CHECK_THROWS_AS(led.add_censorship(CensorDirective{1, 1.0}), SimError);
    }
}

TEST_CASE("conflicting spends: exactly one confirms, the other fails without penalty") {
    Dag d = tiny_dag();
    Ledger led(d);
    led.broadcast(0, 1);
    led.advance(1);
    auto ra = led.broadcast(1, 1);
    auto rb = led.broadcast(2, 2);
    led.advance(1);
    CHECK(led.is_confirmed(1));
    CHECK_FALSE(led.is_confirmed(2));
    CHECK(led.status_of(ra.seq) == BroadcastStatus::Confirmed);
    CHECK(led.status_of(rb.seq) == BroadcastStatus::ConflictLost);
}

TEST_CASE("relative timelock 6 confirms at period 6, not 5") {
    Dag d = tiny_dag();
    Ledger led(d);
    led.broadcast(0, 1);
    led.advance(1); // root confirmed at 0
    led.broadcast(3, 1);
    led.advance(5); // periods 1..5 settle
    CHECK_FALSE(led.is_confirmed(3));
    led.advance(1); // period 6
    CHECK(led.is_confirmed(3));
    CHECK(led.confirmed_period(3) == oracle_confirm_period(0, 6, 0));
}

TEST_CASE("advance on an empty ledger just moves time") {
    Dag d = tiny_dag();
    Ledger led(d);
    led.advance(100);
    CHECK(led.now() == 100);
    CHECK(led.trace().empty());
}

TEST_CASE("epoch counter increments every five periods") {
    Dag d = tiny_dag();
    Ledger led(d);
    CHECK(led.time().epoch() == 0);
    led.advance(5);
    CHECK(led.time().epoch() == 1);
}

TEST_CASE("child-pays-unconfirmed-parent within one period") {
    Dag d = tiny_dag();
    Ledger led(d);
    led.broadcast(0, 1);
    auto ra = led.broadcast(1, 1); // parent still pending
    auto rc = led.broadcast(4, 1); // spends the pending parent's output
    CHECK(ra.accepted());
    CHECK(rc.accepted());
    led.advance(1);
    CHECK(led.is_confirmed(4));
    CHECK(led.confirmed_period(4) == 0);
}

TEST_CASE("broadcast error paths") {
    Dag d = tiny_dag();
    Ledger led(d);
    CHECK(led.broadcast(1, 2).status == BroadcastStatus::UnauthorizedBroadcaster);
    CHECK(led.broadcast(1, 1).status == BroadcastStatus::MissingInput); // root absent
    led.broadcast(0, 1);
    led.advance(1);
    led.broadcast(1, 1);
    CHECK(led.broadcast(1, 1).status == BroadcastStatus::AlreadyBroadcast);
    // timelock probe: template 3 waits on the 6-period output
    led.advance(1);
    auto e = led.earliest_spendable(3, 0);
    REQUIRE(e.has_value());
    CHECK(*e == 6);
    CHECK_FALSE(led.spendable_now(3));
}

TEST_CASE("reorder_within_period permutes only the current queue") {
    Dag d = tiny_dag();
    Ledger led(d);
    led.broadcast(0, 1);
    led.advance(1);
    led.broadcast(1, 1);
    led.broadcast(2, 2);

    SUBCASE("identity permutation keeps the first-come winner") {
        led.reorder_within_period({0, 1});
        led.advance(1);
        CHECK(led.is_confirmed(1));
    }
    SUBCASE("swapping the conflict changes the winner, still exactly one") {
        led.reorder_within_period({1, 0});
        led.advance(1);
        CHECK(led.is_confirmed(2));
        CHECK_FALSE(led.is_confirmed(1));
    }
    SUBCASE("non-bijections are rejected") {
        CHECK_THROWS_AS(led.reorder_within_period({0, 0}), SimError);
        CHECK_THROWS_AS(led.reorder_within_period({0}), SimError);
    }
}

TEST_CASE("independent spends are order-invariant") {
    Dag d = tiny_dag();
    // make template 2 spend output 1 instead so the two spends are disjoint
    d.templates[2].inputs = {TemplateInput{0, 1, 0}};
    d.finalize();
    auto run = [&](bool swap) {
        Ledger led(d);
        led.broadcast(0, 1);
        led.advance(7);
        led.broadcast(1, 1);
        led.broadcast(2, 2);
        if (swap) led.reorder_within_period({1, 0});
        led.advance(1);
        return std::make_pair(led.is_confirmed(1), led.is_confirmed(2));
    };
    CHECK(run(false) == run(true));
}

TEST_CASE("advance is deterministic: identical runs produce identical digests") {
    Dag d = tiny_dag();
    auto once = [&]() {
        Ledger led(d);
        led.broadcast(0, 1);
        led.advance(1);
        led.broadcast(1, 1);
        led.broadcast(3, 1);
        led.advance(7);
        return led.trace_digest();
    };
    CHECK(once() == once());
}

TEST_CASE("no outpoint is ever spent twice across a trace") {
    Dag d = tiny_dag();
    Ledger led(d);
    led.broadcast(0, 1);
    led.broadcast(1, 1);
    led.broadcast(2, 2);
    led.broadcast(4, 1);
    led.advance(8);
    led.broadcast(3, 1);
    led.advance(2);
    // count spends per outpoint over confirmed transactions
    std::vector<int> spend_count(d.output_count(), 0);
    for (const auto& rec : led.trace()) {
        for (const auto& in : d.tpl(rec.tpl).inputs) {
            if (in.producer == kExternalFunding) continue;
            ++spend_count[d.output_base(in.producer) + in.out_index];
        }
    }
    for (int c : spend_count) CHECK(c <= 1);
}
