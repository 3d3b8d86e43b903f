#pragma once

#include <cstdint>
#include <string>

#include "tournsim/types.hpp"

namespace tournsim {

struct CostParams {
    uint64_t gc_bytes = 50'000'000;      // S_gc
    uint64_t lamport_overhead = 400;     // witness bytes per signed byte
    uint64_t input_bytes = 128;          // B
    uint64_t operators = 1000;           // N
    uint64_t pegins = 1000;              // U
    uint64_t concurrency = 1;            // Q, power of two
    double period_days = 1.0;            // reporting only

    bool valid() const;
};

// All calculators are pure, total on their preconditions, and checked for
// overflow up to N = 10^6. Violations throw SimError.

// One-time signature schemes are modeled as size tags: values transferred to
// scripts and circuit inputs pay a per-byte witness overhead that depends on
// the scheme. The 400 figure is the script-verification cost of the bitwise
// scheme; the chunked scheme's constant is a model default.
enum class OtsScheme : uint8_t { Lamport, Winternitz };
uint64_t ots_witness_overhead(OtsScheme scheme);

// Witness bytes to publish a B-byte circuit input via one-time signatures.
uint64_t publication_bytes(uint64_t input_bytes, uint64_t lamport_overhead = 400);

// 2(N-1) * S_gc.
uint64_t gc_storage_per_operator(uint64_t operators, uint64_t gc_bytes);

// U * per-peg-in bytes (per-peg-in figure supplied by dag stats).
uint64_t dag_storage(uint64_t pegins, uint64_t per_pegin_bytes);

// Earliest phase-1 completion: 6 * (ceil(log2 N) - log2 Q). Throws
// SimError("QTooLarge") when Q > N/2.
uint64_t phase1_makespan(uint64_t operators, uint64_t concurrency);

// Conversion-key variant of single-input publication: per counterparty,
// U * 2B one-time public keys plus U conversion-key hashes.
struct KeyMaterialCounts {
    uint64_t lamport_public_keys = 0;
    uint64_t conversion_key_hashes = 0;
};
KeyMaterialCounts key_material_counts(uint64_t pegins, uint64_t input_bytes);

// Decimal-unit formatting (the worked figures are decimal: 51,200 ~ "51 KB").
std::string format_decimal_bytes(uint64_t bytes);

// Tabular report of every quantity for one parameter set.
std::string cost_table(const CostParams& p, uint64_t per_pegin_bytes);

} // namespace tournsim
