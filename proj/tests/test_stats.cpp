#include <doctest.h>

#include <cmath>
#include <map>

#include "diolab/rng.hpp"
#include "diolab/stats.hpp"

using namespace diolab;

namespace {

// Bell numbers count set partitions
constexpr std::int64_t kBell[] = {1, 1, 2, 5, 15, 52, 203, 877, 4140};

double bell_number(int k) { return static_cast<double>(kBell[k]); }

// E[X^k] for X standard normal: (k-1)!! for even k
double normal_moment(int k) {
    if (k % 2 == 1) return 0.0;
    double v = 1.0;
    for (int j = k - 1; j > 1; j -= 2) v *= j;
    return v;
}

}  // namespace

TEST_CASE("set_partitions enumerates Bell-many blocks") {
    for (int r = 1; r <= 6; ++r) {
        auto parts = set_partitions(r);
        CHECK(static_cast<std::int64_t>(parts.size()) == kBell[r]);
        for (const auto& p : parts) {
            int count = 0;
            for (const auto& blk : p) {
                CHECK(!blk.empty());
                count += static_cast<int>(blk.size());
            }
            CHECK(count == r);
        }
    }
}

TEST_CASE("joint_cumulant of the normal kills orders three and up") {
    MomentOracle normal = [](const std::vector<int>& blk) {
        return normal_moment(static_cast<int>(blk.size()));
    };
    CHECK(joint_cumulant(1, normal) == 0.0);
    CHECK(joint_cumulant(2, normal) == doctest::Approx(1.0));
    for (int r = 3; r <= 8; ++r)
        CHECK(joint_cumulant(r, normal) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK_THROWS_AS(joint_cumulant(0, normal), ConfigError);
    CHECK_THROWS_AS(joint_cumulant(9, normal), ConfigError);
}

TEST_CASE("joint_cumulant of Poisson(1) is 1 at every order") {
    // E[X^k] = Bell(k) for Poisson with unit rate (Touchard)
    MomentOracle poisson = [](const std::vector<int>& blk) {
        return bell_number(static_cast<int>(blk.size()));
    };
    for (int r = 1; r <= 8; ++r)
        CHECK(joint_cumulant(r, poisson) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("joint_cumulant at r = 2 is the covariance formula") {
    MomentOracle mo = [](const std::vector<int>& blk) -> double {
        if (blk.size() == 2) return 7.0;          // E[xy]
        return blk[0] == 0 ? 2.0 : 3.0;           // E[x], E[y]
    };
    CHECK(joint_cumulant(2, mo) == doctest::Approx(7.0 - 6.0));
}

TEST_CASE("k-statistics on hand-checked samples") {
    SampleSet s;
    s.values = {1.0, 2.0, 3.0, 4.0};
    s.seed = 1;
    CHECK(k_statistic(s, 2, 0).value == doctest::Approx(5.0 / 3.0).epsilon(1e-12));
    CHECK(k_statistic(s, 3, 0).value == doctest::Approx(0.0).epsilon(1e-12));

    SampleSet t;
    t.values = {0.0, 1.0, 2.0, 9.0};
    t.seed = 1;
    // n^2 m3 / ((n-1)(n-2)) with central third moment m3 = 45
    CHECK(k_statistic(t, 3, 0).value == doctest::Approx(120.0).epsilon(1e-12));

    CHECK_THROWS_AS(k_statistic(t, 4, 0), ConfigError);  // needs n > r
    CHECK_THROWS_AS(k_statistic(s, 5, 0), ConfigError);
}

TEST_CASE("k-statistics are unbiased at simulation scale") {
    CounterRng rng(99, 0, 7);
    SampleSet s;
    s.seed = 99;
    for (int i = 0; i < 20000; ++i) s.values.push_back(2.0 * rng.next_normal() + 1.0);
    auto k2 = k_statistic(s, 2);
    auto k3 = k_statistic(s, 3);
    auto k4 = k_statistic(s, 4);
    CHECK(k2.value == doctest::Approx(4.0).epsilon(0.05));
    CHECK(std::abs(k3.value) < 4.0 * k3.stderr_boot + 0.3);
    CHECK(std::abs(k4.value) < 4.0 * k4.stderr_boot + 1.0);
    CHECK(k2.stderr_boot > 0.0);
    CHECK(k2.sample_count == 20000);
}

TEST_CASE("bootstrap stderr is deterministic in the sample seed") {
    SampleSet s;
    s.seed = 1234;
    CounterRng rng(5, 0, 1);
    for (int i = 0; i < 500; ++i) s.values.push_back(rng.next_normal());
    auto a = k_statistic(s, 2);
    auto b = k_statistic(s, 2);
    CHECK(a.stderr_boot == b.stderr_boot);
    s.seed = 1235;
    auto c = k_statistic(s, 2);
    CHECK(a.stderr_boot != c.stderr_boot);
}

TEST_CASE("normal_cdf values") {
    CHECK(normal_cdf(0.0, 1.0) == doctest::Approx(0.5));
    CHECK(normal_cdf(1.96, 1.0) == doctest::Approx(0.9750021).epsilon(1e-6));
    CHECK(normal_cdf(-1.0, 4.0) == doctest::Approx(normal_cdf(-0.5, 1.0)).epsilon(1e-12));
    CHECK_THROWS_AS(normal_cdf(0.0, 0.0), ConfigError);
}

TEST_CASE("ks_distance exact small cases and convergence") {
    SampleSet one;
    one.values = {0.0};
    CHECK(ks_distance(one, 1.0) == doctest::Approx(0.5));

    SampleSet sym;
    sym.values = {-1e9, 1e9};
    CHECK(ks_distance(sym, 1.0) == doctest::Approx(0.5).epsilon(1e-6));

    SampleSet big;
    big.seed = 4;
    CounterRng rng(4, 0, 2);
    for (int i = 0; i < 50000; ++i) big.values.push_back(3.0 * rng.next_normal());
    CHECK(ks_distance(big, 9.0) < 0.01);
    CHECK(ks_distance(big, 1.0) > 0.2);  // wrong variance is far
}
