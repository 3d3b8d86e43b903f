#include "tournsim/costmodel.hpp"

#include <cmath>
#include <sstream>

namespace tournsim {

namespace {

uint64_t checked_mul(uint64_t a, uint64_t b) {
    uint64_t r;
    if (__builtin_mul_overflow(a, b, &r)) throw SimError("cost model overflow");
    return r;
}

void check_operators(uint64_t n) {
    if (n < 1 || n > 1'000'000) throw SimError("operator count out of range [1, 1e6]");
}

} // namespace

uint64_t ots_witness_overhead(OtsScheme scheme) {
    switch (scheme) {
        case OtsScheme::Lamport: return 400;
        case OtsScheme::Winternitz: return 100;
    }
    return 400;
}

bool CostParams::valid() const {
    return gc_bytes > 0 && lamport_overhead > 0 && operators > 0 && concurrency > 0 &&
           is_power_of_two(concurrency);
}

uint64_t publication_bytes(uint64_t input_bytes, uint64_t lamport_overhead) {
    return checked_mul(input_bytes, lamport_overhead);
}

uint64_t gc_storage_per_operator(uint64_t operators, uint64_t gc_bytes) {
    check_operators(operators);
    return checked_mul(checked_mul(2, operators - 1), gc_bytes);
}

uint64_t dag_storage(uint64_t pegins, uint64_t per_pegin_bytes) {
    return checked_mul(pegins, per_pegin_bytes);
}

uint64_t phase1_makespan(uint64_t operators, uint64_t concurrency) {
    if (operators < 2) throw SimError("need at least two operators");
    check_operators(operators);
    if (!is_power_of_two(concurrency)) throw SimError("Q must be a power of two");
    if (concurrency > operators / 2) throw SimError("QTooLarge");
    uint64_t rounds = ceil_log2(operators);
    uint64_t logq = ceil_log2(concurrency);
    return 6 * (rounds - logq);
}

KeyMaterialCounts key_material_counts(uint64_t pegins, uint64_t input_bytes) {
    KeyMaterialCounts k;
    k.lamport_public_keys = checked_mul(pegins, checked_mul(2, input_bytes));
    k.conversion_key_hashes = pegins;
    return k;
}

std::string format_decimal_bytes(uint64_t bytes) {
    static const char* units[] = {"B", "KB", "MB", "GB", "TB", "PB"};
    double v = static_cast<double>(bytes);
    int u = 0;
    while (v >= 1000.0 && u < 5) {
        v /= 1000.0;
        ++u;
    }
    std::ostringstream os;
    if (v >= 100 || v == std::floor(v))
        os << static_cast<uint64_t>(std::llround(v));
    else
        os.precision(v >= 10 ? 3 : 2), os << v;
    os << " " << units[u];
    return os.str();
}

std::string cost_table(const CostParams& p, uint64_t per_pegin_bytes) {
    if (!p.valid()) throw SimError("invalid cost parameters");
    std::ostringstream os;
    uint64_t pub = publication_bytes(p.input_bytes, p.lamport_overhead);
    uint64_t gc = gc_storage_per_operator(p.operators, p.gc_bytes);
    uint64_t dag = dag_storage(p.pegins, per_pegin_bytes);
    uint64_t mk1 = phase1_makespan(p.operators, 1);
    uint64_t mkq = phase1_makespan(p.operators, p.concurrency);
    auto keys = key_material_counts(p.pegins, p.input_bytes);
    os << "quantity,value,formatted\n";
    os << "publication_bytes_per_dispute," << pub << "," << format_decimal_bytes(pub) << "\n";
    os << "gc_storage_per_operator," << gc << "," << format_decimal_bytes(gc) << "\n";
    os << "per_pegin_dag_bytes," << per_pegin_bytes << ","
       << format_decimal_bytes(per_pegin_bytes) << "\n";
    os << "dag_storage_per_operator," << dag << "," << format_decimal_bytes(dag) << "\n";
    os << "phase1_makespan_q1_periods," << mk1 << "," << mk1 * p.period_days << " days\n";
    os << "phase1_makespan_q" << p.concurrency << "_periods," << mkq << ","
       << mkq * p.period_days << " days\n";
    os << "lamport_public_keys_per_counterparty," << keys.lamport_public_keys << ",\n";
    os << "conversion_key_hashes_per_counterparty," << keys.conversion_key_hashes << ",\n";
    return os.str();
}

} // namespace tournsim
