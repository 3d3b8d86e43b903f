#include <doctest.h>

#include <vector>

#include "tournsim/disable.hpp"
#include "tournsim/ledger.hpp"

using namespace tournsim;

TEST_CASE("field arithmetic sanity") {
    CHECK(gf::mul(gf::inv(7), 7) == 1);
    CHECK(gf::add(gf::kPrime - 1, 1) == 0);
    CHECK(gf::sub(3, 5) == gf::kPrime - 2);
}

TEST_CASE("threshold exactness: every t-subset reconstructs, no (t-1)-subset does") {
    Prng rng(2024);
    for (uint32_t m = 1; m <= 6; ++m) {
        for (uint32_t t = 1; t <= m; ++t) {
            uint64_t secret = rng.next() % gf::kPrime;
            auto shares = shamir_share(secret, t, m, rng);
            // every t-subset succeeds
            for (uint32_t mask = 0; mask < (1u << m); ++mask) {
                uint32_t bits = __builtin_popcount(mask);
                if (bits != t && bits + 1 != t) continue;
                std::vector<std::pair<uint64_t, uint64_t>> subset;
                for (uint32_t i = 0; i < m; ++i)
                    if (mask & (1u << i)) subset.push_back(shares[i]);
                if (bits == t) {
                    CHECK(shamir_reconstruct(subset) == secret);
                } else if (t > 1 && bits == t - 1 && bits > 0) {
                    CHECK(shamir_reconstruct(subset) != secret);
                }
            }
        }
    }
}

TEST_CASE("stream cipher is a keyed involution") {
    Prng rng(5);
    for (int i = 0; i < 200; ++i) {
        uint64_t key = rng.next(), msg = rng.next();
        CHECK(stream_decrypt(key, stream_encrypt(key, msg)) == msg);
        CHECK(stream_encrypt(key, msg) != msg);
    }
    // a different key does not decrypt
    CHECK(stream_decrypt(1, stream_encrypt(2, 99)) != 99);
}

TEST_CASE("direct method: hash commitment opens on loss") {
    DisableRegistry reg(4, DisableMethod::Direct, 0, 11);
    CHECK_FALSE(reg.disabled(2));
    auto mat = reg.on_loss_reveal(2, 3);
    CHECK(mat.loser == 2);
    CHECK(reg.disabled(2));
    auto secret = reg.recovered_secret(2);
    REQUIRE(secret.has_value());
    CHECK(model_hash(*secret) == reg.commitment(2).h_secret);
}

TEST_CASE("pairwise method: the revealed preimage decrypts the global secret") {
    DisableRegistry reg(4, DisableMethod::Pairwise, 0, 12);
    auto mat = reg.on_loss_reveal(3, 1);
    CHECK(model_hash(mat.pair_preimage) == reg.commitment(3).pair_commitments.at(1));
    uint64_t recovered =
        stream_decrypt(mat.pair_preimage, reg.commitment(3).ciphertexts.at(1));
    CHECK(model_hash(recovered) == reg.commitment(3).h_secret);
    CHECK(reg.recovered_secret(3) == recovered);
}

TEST_CASE("threshold method: distinct losses gate reconstruction") {
    DisableRegistry reg(5, DisableMethod::Threshold, 2, 13);
    reg.on_loss_reveal(1, 2);
    CHECK_FALSE(reg.disabled(1)); // one loss is below the threshold
    reg.on_loss_reveal(1, 2);     // the same winner again does not count
    CHECK(reg.losses_to_distinct(1) == 1);
    CHECK_FALSE(reg.disabled(1));
    reg.on_loss_reveal(1, 4);
    CHECK(reg.disabled(1));
    auto secret = reg.recovered_secret(1);
    REQUIRE(secret.has_value());
    CHECK(model_hash(*secret) == reg.commitment(1).h_secret);
}

TEST_CASE("threshold bounds are validated") {
    CHECK_THROWS_AS(DisableRegistry(4, DisableMethod::Threshold, 4, 1), SimError);
    Prng rng(1);
    CHECK_THROWS_AS(shamir_share(5, 3, 2, rng), SimError);
}

TEST_CASE("loss reveals demand an actual pairing") {
    DisableRegistry reg(3, DisableMethod::Direct, 0, 14);
    CHECK_THROWS_AS(reg.on_loss_reveal(2, 2), SimError);
    CHECK_THROWS_AS(reg.on_loss_reveal(0, 1), SimError);
    CHECK_THROWS_AS(reg.on_loss_reveal(9, 1), SimError);
}

TEST_CASE("secrecy before trigger: no non-loss sequence reveals anything") {
    DisableRegistry reg(4, DisableMethod::Pairwise, 0, 15);
    for (OperatorId p = 1; p <= 4; ++p) {
        CHECK_FALSE(reg.disabled(p));
        CHECK_FALSE(reg.recovered_secret(p).has_value());
    }
}

TEST_CASE("enforce_disable gates every unbonded privilege after the reveal") {
    DisableRegistry reg(4, DisableMethod::Direct, 0, 16);
    CHECK_FALSE(enforce_disable(reg, 2, UnbondedAction::Assert));
    CHECK_FALSE(enforce_disable(reg, 2, UnbondedAction::CommitteeVote));
    reg.on_loss_reveal(2, 1);
    CHECK(enforce_disable(reg, 2, UnbondedAction::Assert));
    CHECK(enforce_disable(reg, 2, UnbondedAction::Challenge));
    CHECK(enforce_disable(reg, 2, UnbondedAction::CommitteeVote));
    CHECK_FALSE(enforce_disable(reg, 3, UnbondedAction::Assert));
}

TEST_CASE("reveal-then-block: the disable branch front-runs within the period") {
    // hand-built graph: an enabler output with two spenders, the disabled
    // party's challenge and the pre-signed disabled branch
    Dag d;
    TxTemplate root;
    root.kind = TemplateKind::TCStart;
    root.inputs = {TemplateInput{kExternalFunding, 0, 0}};
    root.outputs = {TemplateOutput{OutputRole::RoleEnabler, 0, 0, {2}}};
    d.templates.push_back(root);
    TxTemplate challenge;
    challenge.kind = TemplateKind::BobChallenge;
    challenge.bob = 2;
    challenge.inputs = {TemplateInput{0, 0, 0}};
    challenge.authorized = {2};
    d.templates.push_back(challenge);
    TxTemplate blockx;
    blockx.kind = TemplateKind::BobWasDisabled;
    blockx.bob = 2;
    blockx.inputs = {TemplateInput{0, 0, 0}};
    d.templates.push_back(blockx);
    d.finalize();

    Ledger led(d);
    led.broadcast(0, 1);
    led.advance(1);
    // the disabled party moves first in the period; the watchdog reacts in
    // the same period and still binds first
    auto rc = led.broadcast(1, 2);
    auto rb = led.broadcast(2, 1);
    led.advance(1);
    CHECK(led.is_confirmed(2));
    CHECK_FALSE(led.is_confirmed(1));
    CHECK(led.status_of(rc.seq) == BroadcastStatus::ConflictLost);
    CHECK(led.status_of(rb.seq) == BroadcastStatus::Confirmed);
}

TEST_CASE("registry export lists one entry per party") {
    DisableRegistry reg(3, DisableMethod::Threshold, 2, 17);
    auto json = reg.registry_json();
    CHECK(json.find("\"party\":1") != std::string::npos);
    CHECK(json.find("\"party\":3") != std::string::npos);
    CHECK(json.find("threshold") != std::string::npos);
}
