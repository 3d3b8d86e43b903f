#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tournsim/prng.hpp"
#include "tournsim/types.hpp"

namespace tournsim {

// Arithmetic for the threshold variant: Shamir shares over GF(p), p = 2^61-1.
namespace gf {
inline constexpr uint64_t kPrime = (1ULL << 61) - 1;
uint64_t add(uint64_t a, uint64_t b);
uint64_t sub(uint64_t a, uint64_t b);
uint64_t mul(uint64_t a, uint64_t b);
uint64_t pow(uint64_t a, uint64_t e);
uint64_t inv(uint64_t a);
} // namespace gf

std::vector<std::pair<uint64_t, uint64_t>> shamir_share(uint64_t secret, uint32_t threshold,
                                                        uint32_t shares, Prng& rng);
// Lagrange interpolation at zero; requires exactly distinct x coordinates.
uint64_t shamir_reconstruct(const std::vector<std::pair<uint64_t, uint64_t>>& shares);

// Model hash for commitments (not cryptographic; the simulator needs only
// determinism and collision-freeness over its tiny universes).
uint64_t model_hash(uint64_t v);
// Length-preserving keyed stream cipher over opaque words: Dec_K(Enc_K(M)) = M.
uint64_t stream_encrypt(uint64_t key, uint64_t message);
uint64_t stream_decrypt(uint64_t key, uint64_t ciphertext);

enum class DisableMethod : uint8_t { Direct, Pairwise, Threshold };

const char* to_string(DisableMethod m);

struct DisableCommitment {
    OperatorId party = kNoOperator;
    DisableMethod method = DisableMethod::Direct;
    uint64_t h_secret = 0; // H(G_X)
    // Pairwise: per counterparty Y, H(P_{X,Y}) and E_{X,Y} = Enc_{P_{X,Y}}(G_X).
    // Threshold: per designated counterparty j, E_{X,j} = Enc_{P_{X,Y_j}}(S_{X,j}).
    std::map<OperatorId, uint64_t> pair_commitments;
    std::map<OperatorId, uint64_t> ciphertexts;
    std::map<OperatorId, uint64_t> share_index; // threshold: x coordinate per counterparty
    uint32_t threshold = 0;
    uint32_t share_count = 0;
};

// Setup-time consistency check standing in for the zero-knowledge proofs:
// recomputes every committed relation in the clear.
bool verify_commitment_consistency(const DisableCommitment& c,
                                   const std::map<OperatorId, uint64_t>& pair_preimages,
                                   uint64_t secret);

struct RevealedMaterial {
    OperatorId loser = kNoOperator;
    OperatorId winner = kNoOperator;
    uint64_t pair_preimage = 0; // P_{X,Y}, released by the losing transcript
};

// Tracks commitments, loss-triggered reveals and reconstruction state for
// every party in one deployment.
class DisableRegistry {
public:
    DisableRegistry(uint32_t n_ops, DisableMethod method, uint32_t threshold, uint64_t seed);

    const DisableCommitment& commitment(OperatorId p) const {
        return parties_[p - 1].commitment;
    }

    // Called when a dispute resolves against `loser`; the winner learns the
    // pairwise preimage from the garbled circuit. Returns the material now
    // public. Throws SimError("NotLoser") if no such loss happened.
    RevealedMaterial on_loss_reveal(OperatorId loser, OperatorId winner);

    // True once G_X is public or reconstructible from revealed shares.
    bool disabled(OperatorId p) const;
    std::optional<uint64_t> recovered_secret(OperatorId p) const;

    uint32_t losses_to_distinct(OperatorId p) const;

    std::string registry_json() const;

private:
    struct PartyState {
        DisableCommitment commitment;
        uint64_t secret = 0; // G_X (known to the model, released per method)
        std::map<OperatorId, uint64_t> pair_preimages;
        std::vector<OperatorId> lost_to; // distinct winners
        bool revealed = false;
    };
    std::vector<PartyState> parties_;
    DisableMethod method_;
    uint32_t threshold_;
};

// Unbonded privileges the disable secret gates; bonded dispute paths stay
// governed by their bonds.
enum class UnbondedAction : uint8_t { Assert, Challenge, CommitteeVote };

bool enforce_disable(const DisableRegistry& registry, OperatorId actor, UnbondedAction action);

} // namespace tournsim
