#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "diolab/counting.hpp"
#include "diolab/stats.hpp"

namespace diolab {

enum class ExperimentKind { Clt, MeanGrowth, Variance, CumulantDecay, Equidist, AlphaTail };

const char* experiment_kind_name(ExperimentKind kind);
ExperimentKind experiment_kind_from_name(const std::string& name);

// Affine base point y = g Z^d + v for equidistribution runs.
struct BasePoint {
    Matrix g;
    Vector v;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Clt;
    DioInstance instance;
    std::vector<double> scales;  // N_list, t_list, or the L grid for AlphaTail
    std::int64_t samples = 1;
    std::uint64_t master_seed = 0;
    TruncationSpec trunc{64.0, 2.0};
    double f_eps = 0.05;  // smoothing width of the equidist test function
    std::optional<BasePoint> base_point;
    std::vector<std::pair<double, double>> t_pairs;  // multi-time equidist probes
    int threads = 1;
    double kappa_hat = 2.0;          // AlphaTail: s = ceil(kappa_hat * log L)
    double liouville_E = 3.0;        // certification scan exponent
    std::int64_t liouville_Qmax = 1000;
    std::int64_t budget = 100'000'000;

    void validate() const;  // throws ConfigError
};

// Per-scale summary; fields not produced by a kind stay NaN.
struct ScaleStats {
    double scale = 0.0;
    std::int64_t samples = 0;
    double mean = 0.0;
    double stderr_mean = 0.0;
    CumulantEstimate k2, k3, k4;
    double ks = std::numeric_limits<double>::quiet_NaN();
    double equid_error = std::numeric_limits<double>::quiet_NaN();
    double exceed_fraction = std::numeric_limits<double>::quiet_NaN();
};

// Multi-time equidistribution probe: product statistic vs the product of means.
struct PairStats {
    double t1 = 0.0;
    double t2 = 0.0;
    double D = 0.0;
    double error = 0.0;
    std::int64_t samples = 0;
};

struct TrendVerdict {
    std::string name;
    bool pass = false;
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // RMS residual of the fit, when one was made
    std::string note;
};

struct RunRecord {
    ExperimentConfig config;
    std::vector<ScaleStats> per_scale;
    std::vector<PairStats> pairs;
    std::vector<TrendVerdict> verdicts;
    std::string annotation;  // e.g. "shift not certified non-Liouville"
    double wall_seconds = 0.0;
    std::string version = "diolab 0.1.0";
};

// min over {t_i} and all pairwise gaps |t_i - t_j|.
double compute_D(const std::vector<double>& t_list);

// Ordinary least squares y = slope * x + intercept.
struct OlsFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms_residual = 0.0;
};
OlsFit ols_fit(const std::vector<double>& x, const std::vector<double>& y);

// Weakly decreasing up to one inversion within the joint stderr of the pair.
bool weakly_decreasing(const std::vector<double>& values, const std::vector<double>& stderrs);

RunRecord run_experiment(const ExperimentConfig& config);

}  // namespace diolab
