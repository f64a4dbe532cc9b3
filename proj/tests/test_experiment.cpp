#include <doctest.h>

#include <cmath>
#include <random>

#include "diolab/config.hpp"
#include "diolab/experiment.hpp"

using namespace diolab;

namespace {

ExperimentConfig small_counting(ExperimentKind kind) {
    ExperimentConfig cfg;
    cfg.kind = kind;
    cfg.instance = DioInstance(2, 1, {1.0, 1.0}, Weights::clt(2, 1, {0.5, 0.5}),
                               {std::sqrt(2.0) - 1.0, std::sqrt(3.0) - 1.0});
    cfg.scales = {2, 4};
    cfg.samples = 200;
    cfg.master_seed = 77;
    return cfg;
}

}  // namespace

TEST_CASE("compute_D matches the definition") {
    CHECK(compute_D({3.0}) == 3.0);
    CHECK(compute_D({3.0, 5.0, 9.0}) == 2.0);
    CHECK_THROWS_AS(compute_D({1.0, 1.0}), ConfigError);
    CHECK_THROWS_AS(compute_D({}), ConfigError);
    CHECK_THROWS_AS(compute_D({-1.0}), ConfigError);

    std::mt19937_64 gen(13);
    std::uniform_real_distribution<double> uni(0.01, 10.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> t = {uni(gen), uni(gen), uni(gen)};
        double brute = std::min({t[0], t[1], t[2], std::abs(t[0] - t[1]),
                                 std::abs(t[0] - t[2]), std::abs(t[1] - t[2])});
        CHECK(compute_D(t) == doctest::Approx(brute));
    }
}

TEST_CASE("ols_fit recovers an exact line") {
    OlsFit fit = ols_fit({1.0, 2.0, 3.0, 4.0}, {3.0, 5.0, 7.0, 9.0});
    CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.rms_residual == doctest::Approx(0.0).epsilon(1e-10));
    CHECK_THROWS_AS(ols_fit({1.0}, {1.0}), ConfigError);
    CHECK_THROWS_AS(ols_fit({1.0, 1.0}, {1.0, 2.0}), ConfigError);
}

TEST_CASE("weakly_decreasing verdict logic") {
    CHECK(weakly_decreasing({3.0, 2.0, 1.0}, {0.0, 0.0, 0.0}));
    CHECK(weakly_decreasing({3.0, 3.0, 3.0}, {0.0, 0.0, 0.0}));
    // an inversion inside the joint stderr is tolerated
    CHECK(weakly_decreasing({3.0, 3.05, 1.0}, {0.1, 0.1, 0.1}));
    CHECK(!weakly_decreasing({3.0, 4.0, 1.0}, {0.1, 0.1, 0.1}));
    // a creeping increase fails even though each step is below noise
    CHECK(!weakly_decreasing({3.0, 3.05, 3.1, 3.15}, {0.1, 0.1, 0.1, 0.1}));
    // random ordering at the noise floor after convergence passes
    CHECK(weakly_decreasing({3.0, 0.50, 0.60, 0.55, 0.62}, {0.1, 0.1, 0.1, 0.1, 0.1}));
    // ...but a later value significantly above an earlier one does not
    CHECK(!weakly_decreasing({3.0, 0.50, 0.60, 0.55, 0.70}, {0.05, 0.05, 0.05, 0.05, 0.05}));
}

TEST_CASE("config validation rejects bad inputs") {
    ExperimentConfig cfg = small_counting(ExperimentKind::Clt);
    cfg.samples = 0;
    CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
    cfg = small_counting(ExperimentKind::Clt);
    cfg.scales = {4, 4};
    CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
    cfg = small_counting(ExperimentKind::Clt);
    cfg.scales.clear();
    CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
}

TEST_CASE("mean_growth means converge to the exact shell means") {
    ExperimentConfig cfg = small_counting(ExperimentKind::MeanGrowth);
    cfg.scales = {2, 3};
    cfg.samples = 4000;
    RunRecord rec = run_experiment(cfg);
    REQUIRE(rec.per_scale.size() == 2);
    for (const auto& st : rec.per_scale) {
        double target = 0.0;
        for (int s = 0; s < static_cast<int>(st.scale); ++s)
            target += mean_shell(cfg.instance, s);
        CHECK(std::abs(st.mean - target) <= 3.5 * st.stderr_mean);
    }
    REQUIRE(rec.verdicts.size() == 1);
    CHECK(rec.verdicts[0].name == "mean_slope_matches_C");
}

TEST_CASE("clt, variance and cumulant runs share the per-sample cache") {
    RunRecord clt = run_experiment(small_counting(ExperimentKind::Clt));
    RunRecord var = run_experiment(small_counting(ExperimentKind::Variance));
    REQUIRE(clt.per_scale.size() == var.per_scale.size());
    for (size_t j = 0; j < clt.per_scale.size(); ++j) {
        CHECK(clt.per_scale[j].mean == var.per_scale[j].mean);
        CHECK(clt.per_scale[j].k2.value == var.per_scale[j].k2.value);
    }
    CHECK(std::isnan(var.per_scale[0].ks));
    CHECK(!std::isnan(clt.per_scale[0].ks));
}

TEST_CASE("cumulant run uses the eta_L-truncated shell statistic") {
    // With a cutoff far beyond any reachable height the weights are all 1 and
    // the statistic differs from the centered clt form by a constant per N, so
    // the translation-invariant k-statistics must agree.
    ExperimentConfig loose = small_counting(ExperimentKind::CumulantDecay);
    loose.trunc = TruncationSpec(1e12, 2.0);
    RunRecord cum = run_experiment(loose);
    RunRecord clt = run_experiment(small_counting(ExperimentKind::Clt));
    REQUIRE(cum.per_scale.size() == clt.per_scale.size());
    for (size_t j = 0; j < cum.per_scale.size(); ++j) {
        CHECK(cum.per_scale[j].k3.order == 3);
        CHECK(cum.per_scale[j].k3.value ==
              doctest::Approx(clt.per_scale[j].k3.value).epsilon(1e-9));
        CHECK(cum.per_scale[j].k4.value ==
              doctest::Approx(clt.per_scale[j].k4.value).epsilon(1e-9));
        double shift = 0.0;
        for (int s = 0; s < static_cast<int>(cum.per_scale[j].scale); ++s)
            shift += mean_shell(loose.instance, s);
        shift /= std::sqrt(cum.per_scale[j].scale);
        CHECK(cum.per_scale[j].mean ==
              doctest::Approx(clt.per_scale[j].mean + shift).epsilon(1e-9));
    }

    // A binding cutoff can only shrink the (nonnegative) shell sums.
    ExperimentConfig tight = small_counting(ExperimentKind::CumulantDecay);
    tight.trunc = TruncationSpec(2.0, 2.0);
    RunRecord cut = run_experiment(tight);
    for (size_t j = 0; j < cut.per_scale.size(); ++j)
        CHECK(cut.per_scale[j].mean <= cum.per_scale[j].mean + 1e-12);
}

TEST_CASE("identical configs are bit-reproducible across thread counts") {
    ExperimentConfig cfg = small_counting(ExperimentKind::Clt);
    cfg.threads = 1;
    RunRecord r1 = run_experiment(cfg);
    cfg.threads = 4;
    RunRecord r4 = run_experiment(cfg);
    cfg.threads = 8;
    RunRecord r8 = run_experiment(cfg);
    CHECK(results_csv(r1) == results_csv(r4));
    CHECK(results_csv(r1) == results_csv(r8));
}

TEST_CASE("equidist reports finite errors and the liouville annotation") {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::Equidist;
    cfg.instance = DioInstance(1, 1, {1.0}, Weights::clt(1, 1, {1.0}), {0.0});
    cfg.scales = {1.0, 2.0};
    cfg.samples = 300;
    cfg.master_seed = 5;
    cfg.f_eps = 0.05;
    BasePoint bp;
    bp.g = Matrix::Identity(2, 2);
    bp.v = (Vector(2) << std::sqrt(2.0) - 1.0, std::sqrt(3.0) - 1.0).finished();
    cfg.base_point = bp;
    cfg.t_pairs = {{1.0, 2.0}};
    RunRecord rec = run_experiment(cfg);
    CHECK(rec.annotation.empty());
    REQUIRE(rec.per_scale.size() == 2);
    for (const auto& st : rec.per_scale) {
        CHECK(std::isfinite(st.equid_error));
        CHECK(st.equid_error >= 0.0);
    }
    REQUIRE(rec.pairs.size() == 1);
    CHECK(rec.pairs[0].D == 1.0);

    // rational shift draws the annotation
    bp.v = (Vector(2) << 0.5, 0.25).finished();
    cfg.base_point = bp;
    RunRecord flagged = run_experiment(cfg);
    CHECK(!flagged.annotation.empty());
}

TEST_CASE("alpha_tail fractions are probabilities and the verdict is recomputable") {
    ExperimentConfig cfg;
    cfg.kind = ExperimentKind::AlphaTail;
    cfg.instance = DioInstance(1, 1, {1.0}, Weights::clt(1, 1, {1.0}), {0.0});
    cfg.scales = {4.0, 8.0};
    cfg.samples = 500;
    cfg.master_seed = 9;
    RunRecord rec = run_experiment(cfg);
    REQUIRE(rec.per_scale.size() == 2);
    for (const auto& st : rec.per_scale) {
        CHECK(st.exceed_fraction >= 0.0);
        CHECK(st.exceed_fraction <= 1.0);
    }
    REQUIRE(rec.verdicts.size() == 1);
    CHECK(rec.verdicts[0].name == "loglog_slope_at_most_minus_1");
}
