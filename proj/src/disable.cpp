#include "tournsim/disable.hpp"

#include <sstream>

namespace tournsim {

namespace gf {

uint64_t add(uint64_t a, uint64_t b) {
    uint64_t s = a + b;
    if (s >= kPrime) s -= kPrime;
    return s;
}

uint64_t sub(uint64_t a, uint64_t b) { return add(a, kPrime - (b % kPrime)); }

uint64_t mul(uint64_t a, uint64_t b) {
    return static_cast<uint64_t>((static_cast<__uint128_t>(a) * b) % kPrime);
}

uint64_t pow(uint64_t a, uint64_t e) {
    uint64_t r = 1;
    a %= kPrime;
    while (e) {
        if (e & 1) r = mul(r, a);
        a = mul(a, a);
        e >>= 1;
    }
    return r;
}

uint64_t inv(uint64_t a) {
    if (a % kPrime == 0) throw SimError("no inverse of zero");
    return pow(a, kPrime - 2);
}

} // namespace gf

std::vector<std::pair<uint64_t, uint64_t>> shamir_share(uint64_t secret, uint32_t threshold,
                                                        uint32_t shares, Prng& rng) {
    if (threshold < 1 || threshold > shares) throw SimError("BadThreshold");
    std::vector<uint64_t> coeff(threshold);
    coeff[0] = secret % gf::kPrime;
    for (uint32_t i = 1; i < threshold; ++i) coeff[i] = rng.next() % gf::kPrime;
    std::vector<std::pair<uint64_t, uint64_t>> out;
    for (uint32_t x = 1; x <= shares; ++x) {
        uint64_t y = 0;
        for (uint32_t i = threshold; i-- > 0;) y = gf::add(gf::mul(y, x), coeff[i]);
        out.emplace_back(x, y);
    }
    return out;
}

uint64_t shamir_reconstruct(const std::vector<std::pair<uint64_t, uint64_t>>& shares) {
    if (shares.empty()) throw SimError("no shares");
    uint64_t secret = 0;
    for (size_t i = 0; i < shares.size(); ++i) {
        uint64_t num = 1, den = 1;
        for (size_t j = 0; j < shares.size(); ++j) {
            if (i == j) continue;
            num = gf::mul(num, shares[j].first % gf::kPrime);
            den = gf::mul(den, gf::sub(shares[j].first, shares[i].first));
        }
        secret = gf::add(secret, gf::mul(shares[i].second, gf::mul(num, gf::inv(den))));
    }
    return secret;
}

uint64_t model_hash(uint64_t v) {
    Fnv1a h;
    h.add_u64(0x6d6f64656c6861ULL);
    h.add_u64(v);
    return h.digest();
}

uint64_t stream_encrypt(uint64_t key, uint64_t message) {
    Prng ks(key ^ 0x73747265616dULL);
    return message ^ ks.next();
}

uint64_t stream_decrypt(uint64_t key, uint64_t ciphertext) {
    return stream_encrypt(key, ciphertext); // xor stream is an involution
}

const char* to_string(DisableMethod m) {
    switch (m) {
        case DisableMethod::Direct: return "direct";
        case DisableMethod::Pairwise: return "pairwise";
        case DisableMethod::Threshold: return "threshold";
    }
    return "?";
}

bool verify_commitment_consistency(const DisableCommitment& c,
                                   const std::map<OperatorId, uint64_t>& pair_preimages,
                                   uint64_t secret) {
    if (model_hash(secret) != c.h_secret) return false;
    for (const auto& [y, h] : c.pair_commitments) {
        auto it = pair_preimages.find(y);
        if (it == pair_preimages.end() || model_hash(it->second) != h) return false;
    }
    if (c.method == DisableMethod::Pairwise) {
        for (const auto& [y, ct] : c.ciphertexts) {
            auto it = pair_preimages.find(y);
            if (it == pair_preimages.end()) return false;
            if (stream_decrypt(it->second, ct) != secret) return false;
        }
    }
    if (c.method == DisableMethod::Threshold) {
        // any `threshold` decrypted shares must reconstruct the secret
        std::vector<std::pair<uint64_t, uint64_t>> shares;
        for (const auto& [y, ct] : c.ciphertexts) {
            auto it = pair_preimages.find(y);
            if (it == pair_preimages.end()) return false;
            shares.emplace_back(c.share_index.at(y), stream_decrypt(it->second, ct));
            if (shares.size() == c.threshold) break;
        }
        if (shares.size() < c.threshold) return false;
        if (shamir_reconstruct(shares) != secret % gf::kPrime) return false;
    }
    return true;
}

DisableRegistry::DisableRegistry(uint32_t n_ops, DisableMethod method, uint32_t threshold,
                                 uint64_t seed)
    : method_(method), threshold_(threshold) {
    if (method == DisableMethod::Threshold && (threshold < 1 || threshold > n_ops - 1))
        throw SimError("BadThreshold");
    Prng rng(seed);
    parties_.resize(n_ops);
    for (OperatorId x = 1; x <= n_ops; ++x) {
        auto& st = parties_[x - 1];
        st.secret = rng.next() % gf::kPrime;
        auto& c = st.commitment;
        c.party = x;
        c.method = method;
        c.h_secret = model_hash(st.secret);
        uint32_t m = n_ops - 1;
        std::vector<std::pair<uint64_t, uint64_t>> shares;
        if (method == DisableMethod::Threshold)
            shares = shamir_share(st.secret, threshold, m, rng);
        c.threshold = method == DisableMethod::Threshold ? threshold : 0;
        c.share_count = method == DisableMethod::Threshold ? m : 0;
        uint32_t j = 0;
        for (OperatorId y = 1; y <= n_ops; ++y) {
            if (y == x) continue;
            uint64_t p_xy = rng.next();
            st.pair_preimages[y] = p_xy;
            c.pair_commitments[y] = model_hash(p_xy);
            if (method == DisableMethod::Pairwise)
                c.ciphertexts[y] = stream_encrypt(p_xy, st.secret);
            if (method == DisableMethod::Threshold) {
                c.ciphertexts[y] = stream_encrypt(p_xy, shares[j].second);
                c.share_index[y] = shares[j].first;
            }
            ++j;
        }
        if (!verify_commitment_consistency(c, st.pair_preimages, st.secret))
            throw SimError("setup verification failed");
    }
}

RevealedMaterial DisableRegistry::on_loss_reveal(OperatorId loser, OperatorId winner) {
    if (loser == kNoOperator || loser > parties_.size() || winner == kNoOperator ||
        winner > parties_.size() || loser == winner)
        throw SimError("NotLoser");
    auto& st = parties_[loser - 1];
    auto it = st.pair_preimages.find(winner);
    if (it == st.pair_preimages.end()) throw SimError("NotLoser");
    if (std::find(st.lost_to.begin(), st.lost_to.end(), winner) == st.lost_to.end())
        st.lost_to.push_back(winner);
    if (method_ == DisableMethod::Direct) st.revealed = true;
    if (method_ == DisableMethod::Pairwise) st.revealed = true;
    if (method_ == DisableMethod::Threshold && st.lost_to.size() >= threshold_)
        st.revealed = true;
    return RevealedMaterial{loser, winner, it->second};
}

bool DisableRegistry::disabled(OperatorId p) const {
    return p >= 1 && p <= parties_.size() && parties_[p - 1].revealed;
}

std::optional<uint64_t> DisableRegistry::recovered_secret(OperatorId p) const {
    const auto& st = parties_[p - 1];
    if (!st.revealed) return std::nullopt;
    if (method_ == DisableMethod::Direct) return st.secret;
    if (method_ == DisableMethod::Pairwise) {
        OperatorId y = st.lost_to.front();
        return stream_decrypt(st.pair_preimages.at(y), st.commitment.ciphertexts.at(y));
    }
    std::vector<std::pair<uint64_t, uint64_t>> shares;
    for (OperatorId y : st.lost_to) {
        shares.emplace_back(st.commitment.share_index.at(y),
                            stream_decrypt(st.pair_preimages.at(y),
                                           st.commitment.ciphertexts.at(y)));
        if (shares.size() == threshold_) break;
    }
    return shamir_reconstruct(shares);
}

uint32_t DisableRegistry::losses_to_distinct(OperatorId p) const {
    return static_cast<uint32_t>(parties_[p - 1].lost_to.size());
}

std::string DisableRegistry::registry_json() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < parties_.size(); ++i) {
        const auto& c = parties_[i].commitment;
        if (i) os << ",";
        os << "{\"party\":" << c.party << ",\"method\":\"" << to_string(c.method)
           << "\",\"h_secret\":" << c.h_secret << ",\"threshold\":" << c.threshold
           << ",\"shares\":" << c.share_count << ",\"pair_commitments\":" << c.pair_commitments.size()
           << "}";
    }
    os << "]";
    return os.str();
}

bool enforce_disable(const DisableRegistry& registry, OperatorId actor, UnbondedAction action) {
    (void)action; // every unbonded privilege is gated the same way
    return registry.disabled(actor);
}

} // namespace tournsim
