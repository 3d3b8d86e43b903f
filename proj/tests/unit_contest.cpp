#include <doctest.h>

#include <vector>

#include "tournsim/contest.hpp"
#include "tournsim/prng.hpp"

using namespace tournsim;

namespace {

// canonical-looking chain: three blocks, the peg-out event in block 1, tx 0
SyntheticChain chain_with_event(uint64_t pegout_id, uint64_t tail_work = 2) {
    SyntheticChain c;
    c.blocks.push_back(ChainBlock{3, {}});
    c.blocks.push_back(ChainBlock{2, {{pegout_id, 0}}});
    for (uint64_t i = 0; i < tail_work; ++i) c.blocks.push_back(ChainBlock{1, {}});
    return c;
}

SyntheticChain chain_without_event(uint64_t score) {
    SyntheticChain c;
    c.blocks.push_back(ChainBlock{score, {}});
    return c;
}

} // namespace

TEST_CASE("validate_bob_input: strictly greater score, faithfully copied fields") {
    PegOutPos pos{1, 0};
    CHECK(validate_bob_input(5, 5, 9, pos, 9, pos) == ValidateResult::ScoreNotGreater);
    CHECK(validate_bob_input(5, 6, 9, pos, 9, pos) == ValidateResult::Accept);
    CHECK(validate_bob_input(5, 6, 9, PegOutPos{1, 1}, 9, pos) ==
          ValidateResult::FieldMismatch);
    CHECK(validate_bob_input(5, 6, 8, pos, 9, pos) == ValidateResult::FieldMismatch);
    // exhaustive grid: rejection iff S_B <= S_A
    for (uint64_t a = 0; a <= 32; ++a)
        for (uint64_t b = 0; b <= 32; ++b) {
            auto r = validate_bob_input(a, b, 9, pos, 9, pos);
            CHECK((r == ValidateResult::Accept) == (b > a));
        }
}

TEST_CASE("payout table: the four bullet branches") {
    TimeoutFlags no_timeouts;
    SUBCASE("CaFalse: Alice's deposit to Bob, Bob refunded") {
        RevealSet r;
        r.ca_false = true;
        auto p = resolve_payouts(r, no_timeouts);
        CHECK(p.alice_deposit == DepositFate::PaidToOpponent);
        CHECK(p.bob_deposit == DepositFate::RefundedToOwner);
        CHECK_FALSE(p.persistent_slash_required);
    }
    SUBCASE("CbFalse: Bob's deposit to Alice, Alice refunded") {
        RevealSet r;
        r.cb_false = true;
        auto p = resolve_payouts(r, no_timeouts);
        CHECK(p.bob_deposit == DepositFate::PaidToOpponent);
        CHECK(p.alice_deposit == DepositFate::RefundedToOwner);
    }
    SUBCASE("both circuits true: refunds only, persistent slash flagged") {
        RevealSet r;
        r.ca_true = r.cb_true = true;
        TimeoutFlags t{true, true};
        auto p = resolve_payouts(r, t);
        CHECK(p.alice_deposit == DepositFate::RefundedToOwner);
        CHECK(p.bob_deposit == DepositFate::RefundedToOwner);
        CHECK(p.persistent_slash_required);
    }
    SUBCASE("no reveals: deposits ride the timeout branches") {
        RevealSet r;
        auto p = resolve_payouts(r, TimeoutFlags{true, false});
        CHECK(p.alice_deposit == DepositFate::RefundedToOwner);
        CHECK(p.bob_deposit == DepositFate::Held);
    }
    SUBCASE("conflicting reveals violate the model") {
        RevealSet r;
        r.ca_true = r.ca_false = true;
        CHECK_THROWS_AS(resolve_payouts(r, no_timeouts), SimError);
    }
}

TEST_CASE("payout totality: every consistent reveal set resolves completely") {
    int persistent_flags = 0;
    for (int ca = 0; ca < 3; ++ca) {       // none, true, false
        for (int cb = 0; cb < 3; ++cb) {
            for (int ta = 0; ta < 2; ++ta) {
                for (int tb = 0; tb < 2; ++tb) {
                    RevealSet r;
                    r.ca_true = ca == 1;
                    r.ca_false = ca == 2;
                    r.cb_true = cb == 1;
                    r.cb_false = cb == 2;
                    auto p = resolve_payouts(r, TimeoutFlags{ta == 1, tb == 1});
                    // conservation: a deposit is in exactly one state
                    CHECK((p.alice_deposit == DepositFate::Held ||
                           p.alice_deposit == DepositFate::RefundedToOwner ||
                           p.alice_deposit == DepositFate::PaidToOpponent));
                    // decisive secrets always settle both deposits
                    if (r.ca_false || r.cb_false) {
                        CHECK(p.alice_deposit != DepositFate::Held);
                        CHECK(p.bob_deposit != DepositFate::Held);
                        CHECK_FALSE(p.persistent_slash_required);
                    }
                    if (p.persistent_slash_required) ++persistent_flags;
                    // the flag appears exactly on the both-true gap
                    CHECK(p.persistent_slash_required == (r.ca_true && r.cb_true));
                }
            }
        }
    }
    CHECK(persistent_flags == 4); // both-true against each timeout combination
}

TEST_CASE("proof oracles enforce each stated condition") {
    ProofOracle oracle;
    oracle.min_work_past_event = 2;
    ChainClaim a;
    a.pegout_id = 9;
    a.pegout_pos = {1, 0};
    SyntheticChain c = chain_with_event(9);
    a.score = c.score();
    a.work_past_event = 2;
    CHECK(oracle.verifies_a(a, c));
    SUBCASE("wrong position") {
        a.pegout_pos = {0, 0};
        CHECK_FALSE(oracle.verifies_a(a, c));
    }
    SUBCASE("wrong id") {
        a.pegout_id = 8;
        CHECK_FALSE(oracle.verifies_a(a, c));
    }
    SUBCASE("wrong score") {
        a.score += 1;
        CHECK_FALSE(oracle.verifies_a(a, c));
    }
    SUBCASE("not enough work past the event") {
        oracle.min_work_past_event = 5;
        CHECK_FALSE(oracle.verifies_a(a, c));
    }
    SUBCASE("counter-proof verifies iff the score matches and the event is absent") {
        ChainClaim b;
        b.pegout_id = 9;
        b.pegout_pos = {1, 0};
        SyntheticChain nc = chain_without_event(20);
        b.score = 20;
        CHECK(oracle.verifies_b(b, nc));
        b.score = 19;
        CHECK_FALSE(oracle.verifies_b(b, nc));
        b.score = c.score();
        CHECK_FALSE(oracle.verifies_b(b, c)); // the event is right there
    }
}

TEST_CASE("dual-proof resolution under the fork-choice rule") {
    ProofOracle oracle;
    ChainClaim a;
    a.pegout_id = 9;
    a.pegout_pos = {1, 0};
    SyntheticChain ca = chain_with_event(9);
    a.score = ca.score();

    ChainClaim b;
    b.pegout_id = 9;
    b.pegout_pos = {1, 0};

    SUBCASE("a heavier event-free chain defeats the assertion") {
        SyntheticChain cb = chain_without_event(a.score + 3);
        b.score = cb.score();
        CHECK(resolve_dual_proof(a, ca, b, cb, oracle) == DualProofWinner::Bob);
    }
    SUBCASE("no counter-proof before the deadline leaves Alice the winner") {
        SyntheticChain cb = chain_without_event(1);
        b.score = 99; // does not verify
        CHECK(resolve_dual_proof(a, ca, b, cb, oracle) == DualProofWinner::Alice);
    }
    SUBCASE("equal or lower scores lose: brute force over a score grid") {
        for (uint64_t sb = 1; sb <= 16; ++sb) {
            SyntheticChain cb = chain_without_event(sb);
            b.score = sb;
            auto expect = sb > a.score ? DualProofWinner::Bob : DualProofWinner::Alice;
            CHECK(resolve_dual_proof(a, ca, b, cb, oracle) == expect);
        }
    }
    SUBCASE("both proofs invalid") {
        SyntheticChain cb = chain_without_event(5);
        b.score = 4;
        a.score += 1;
        CHECK(resolve_dual_proof(a, ca, b, cb, oracle) == DualProofWinner::BothInvalid);
    }
    CHECK(verifier_cost_units(true) == 2 * verifier_cost_units(false));
}

TEST_CASE("screen and circuit agree over the enumerated chain universe") {
    // every chain shape with up to 3 blocks, one optional event per block
    int checked = 0;
    for (int blocks = 1; blocks <= 3; ++blocks) {
        for (int mask = 0; mask < (1 << blocks); ++mask) {
            for (uint32_t qb = 0; qb < static_cast<uint32_t>(blocks); ++qb) {
                for (uint32_t qt = 0; qt < 2; ++qt) {
                    Assertion as;
                    as.pegout_id = 9;
                    as.pos = {qb, qt};
                    for (int i = 0; i < blocks; ++i) {
                        ChainBlock blk{1, {}};
                        if (mask & (1 << i)) blk.events.push_back({9, 0});
                        as.chain.blocks.push_back(blk);
                    }
                    CHECK(avp_screen(as) == avp_circuit(as));
                    ++checked;
                }
            }
        }
    }
    CHECK(checked > 50);
    // plus randomized differential over a wider space
    Prng rng(42);
    for (int i = 0; i < 2000; ++i) {
        Assertion as;
        as.pegout_id = rng.below(4);
        as.pos = {static_cast<uint32_t>(rng.below(4)), static_cast<uint32_t>(rng.below(3))};
        int blocks = 1 + static_cast<int>(rng.below(4));
        for (int bIdx = 0; bIdx < blocks; ++bIdx) {
            ChainBlock blk{1 + rng.below(3), {}};
            if (rng.below(2)) blk.events.push_back({rng.below(4), static_cast<uint32_t>(rng.below(3))});
            as.chain.blocks.push_back(blk);
        }
        CHECK(avp_screen(as) == avp_circuit(as));
    }
    SUBCASE("true and forged events") {
        Assertion good;
        good.pegout_id = 9;
        good.pos = {1, 0};
        good.chain = chain_with_event(9);
        CHECK(avp_screen(good));
        Assertion forged = good;
        forged.chain = chain_without_event(10);
        CHECK_FALSE(avp_screen(forged));
    }
    SUBCASE("malformed assertions are rejected") {
        Assertion empty;
        CHECK_THROWS_AS(avp_screen(empty), SimError);
        CHECK_THROWS_AS(avp_circuit(empty), SimError);
    }
}

TEST_CASE("contestability soundness: the canonical event-free fork defeats both methods") {
    ProofOracle oracle;
    Prng rng(7);
    for (int i = 0; i < 64; ++i) {
        uint64_t id = 1 + rng.below(8);
        SyntheticChain with = chain_with_event(id, rng.below(3));
        SyntheticChain without = chain_without_event(with.score() + 1 + rng.below(5));
        ChainClaim a{id, {1, 0}, with.score(), true, 0};
        ChainClaim b{id, {1, 0}, without.score(), false, 0};
        // method A
        CHECK(resolve_dual_proof(a, with, b, without, oracle) == DualProofWinner::Bob);
        // method B: the script accepts Bob's strictly-greater score
        CHECK(validate_bob_input(a.score, b.score, b.pegout_id, b.pegout_pos, a.pegout_id,
                                 a.pegout_pos) == ValidateResult::Accept);
        CHECK(oracle.verifies_b(b, without));
    }
}

TEST_CASE("synthetic chain fixtures round-trip through their file format") {
    SyntheticChain c = chain_with_event(7, 3);
    SyntheticChain back = SyntheticChain::from_json(c.to_json());
    CHECK(back.score() == c.score());
    CHECK(back.blocks.size() == c.blocks.size());
    CHECK(back.has_event(7, PegOutPos{1, 0}));
    CHECK_FALSE(back.has_event(7, PegOutPos{0, 0}));
}
