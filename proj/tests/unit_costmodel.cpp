#include <doctest.h>

#include "tournsim/costmodel.hpp"

using namespace tournsim;

TEST_CASE("publication bytes at the default overhead") {
    CHECK(publication_bytes(128) == 51'200);
    CHECK(publication_bytes(32) == 12'800);
    CHECK(publication_bytes(0) == 0);
    CHECK(publication_bytes(128, 350) == 44'800); // the constant is a parameter
}

TEST_CASE("garbled-circuit storage per operator") {
    CHECK(gc_storage_per_operator(1000, 50'000'000) == 99'900'000'000ULL);
    CHECK(gc_storage_per_operator(1000, 500'000'000) == 999'000'000'000ULL);
    CHECK(gc_storage_per_operator(1, 500'000'000) == 0); // no counterparties
    // the N=1000 band spans [0.1, 1.0] decimal terabytes
    CHECK(format_decimal_bytes(gc_storage_per_operator(1000, 50'000'000)) == "99.9 GB");
    CHECK(format_decimal_bytes(gc_storage_per_operator(1000, 500'000'000)) == "999 GB");
}

TEST_CASE("DAG storage scales with peg-ins") {
    CHECK(dag_storage(0, 1'000'000) == 0);
    uint64_t total = dag_storage(1000, 1'000'000);
    CHECK(total == 1'000'000'000ULL);
    // within a factor of two of the quoted ~2 GB figure
    CHECK(total * 2 >= 2'000'000'000ULL);
    CHECK(total <= 2 * 2'000'000'000ULL);
}

TEST_CASE("phase-1 makespan formula") {
    CHECK(phase1_makespan(1000, 1) == 60);
    CHECK(phase1_makespan(1000, 16) == 36);
    CHECK(phase1_makespan(2, 1) == 6);
    CHECK(phase1_makespan(1024, 16) == 36);
    CHECK_THROWS_AS(phase1_makespan(8, 8), SimError);  // QTooLarge
    CHECK_THROWS_AS(phase1_makespan(16, 3), SimError); // not a power of two
}

TEST_CASE("calculators stay exact up to a million operators") {
    CHECK(gc_storage_per_operator(1'000'000, 500'000'000) == 999'999'000'000'000ULL);
    CHECK(phase1_makespan(1'000'000, 1) == 6 * 20);
    CHECK_THROWS_AS(gc_storage_per_operator(2'000'000, 1), SimError);
    CHECK_THROWS_AS(publication_bytes(UINT64_MAX, 400), SimError);
}

TEST_CASE("conversion-key material counts") {
    auto k = key_material_counts(1000, 128);
    CHECK(k.lamport_public_keys == 1000ULL * 2 * 128);
    CHECK(k.conversion_key_hashes == 1000);
}

TEST_CASE("decimal formatting matches the worked arithmetic") {
    CHECK(format_decimal_bytes(51'200) == "51.2 KB");
    CHECK(format_decimal_bytes(12'800) == "12.8 KB");
    CHECK(format_decimal_bytes(999) == "999 B");
    CHECK(format_decimal_bytes(100'000'000'000) == "100 GB");
}

TEST_CASE("one-time signature schemes carry distinct size constants") {
    CHECK(ots_witness_overhead(OtsScheme::Lamport) == 400);
    CHECK(ots_witness_overhead(OtsScheme::Winternitz) < 400);
    CHECK(publication_bytes(128, ots_witness_overhead(OtsScheme::Lamport)) == 51'200);
}

TEST_CASE("the cost table emits every quantity") {
    CostParams p;
    p.concurrency = 16;
    auto table = cost_table(p, 1'000'000);
    CHECK(table.find("publication_bytes_per_dispute,51200") != std::string::npos);
    CHECK(table.find("gc_storage_per_operator,99900000000") != std::string::npos);
    CHECK(table.find("phase1_makespan_q1_periods,60") != std::string::npos);
    CHECK(table.find("phase1_makespan_q16_periods,36") != std::string::npos);
    CHECK(table.find("lamport_public_keys_per_counterparty,256000") != std::string::npos);
    CostParams bad;
    bad.concurrency = 3;
    CHECK_THROWS_AS(cost_table(bad, 1), SimError);
}
