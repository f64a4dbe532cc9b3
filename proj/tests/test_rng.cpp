#include <doctest.h>

#include <cmath>
#include <vector>

#include "diolab/rng.hpp"

using namespace diolab;

TEST_CASE("identical triples give identical streams") {
    CounterRng a(42, 7, 3), b(42, 7, 3);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct indices or tags give distinct streams") {
    CounterRng base(42, 0, 0), other_index(42, 1, 0), other_tag(42, 0, 1);
    int diff_index = 0, diff_tag = 0;
    for (int i = 0; i < 1000; ++i) {
        std::uint64_t x = base.next_u64();
        if (x != other_index.next_u64()) ++diff_index;
        if (x != other_tag.next_u64()) ++diff_tag;
    }
    CHECK(diff_index > 990);
    CHECK(diff_tag > 990);
}

TEST_CASE("uniform doubles pass a 64-bin chi-square at p > 0.001") {
    CounterRng rng(2024, 0, 0);
    const int bins = 64;
    const int draws = 1'000'000;
    std::vector<std::int64_t> count(bins, 0);
    double sum = 0.0;
    for (int i = 0; i < draws; ++i) {
        double u = rng.next_double();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        sum += u;
        ++count[static_cast<int>(u * bins)];
    }
    const double expected = static_cast<double>(draws) / bins;
    double chi2 = 0.0;
    for (auto c : count) chi2 += (c - expected) * (c - expected) / expected;
    // 63 degrees of freedom: the p = 0.001 critical value is ~103.4
    CHECK(chi2 < 103.4);
    CHECK(std::abs(sum / draws - 0.5) < 0.002);
}

TEST_CASE("normal variates have the right first moments") {
    CounterRng rng(7, 3, 9);
    const int draws = 200'000;
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    for (int i = 0; i < draws; ++i) {
        double x = rng.next_normal();
        s1 += x;
        s2 += x * x;
        s4 += x * x * x * x;
    }
    CHECK(std::abs(s1 / draws) < 0.01);
    CHECK(s2 / draws == doctest::Approx(1.0).epsilon(0.02));
    CHECK(s4 / draws == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("seed_stream helper matches direct construction") {
    CounterRng a = seed_stream(1, 2, 3);
    CounterRng b(1, 2, 3);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}
