#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "diolab/common.hpp"

namespace diolab {

struct SampleSet {
    std::vector<double> values;
    std::string label;
    std::uint64_t seed = 0;  // provenance of the generating stream
};

struct CumulantEstimate {
    int order = 0;
    double value = 0.0;
    double stderr_boot = 0.0;
    std::int64_t sample_count = 0;
};

// Moment oracle: given a sorted subset I of {0..r-1}, returns E[prod_{i in I} phi_i].
using MomentOracle = std::function<double(const std::vector<int>&)>;

// Partition-formula joint cumulant of phi_0..phi_{r-1}; partitions are
// generated as restricted-growth strings in lexicographic order.
double joint_cumulant(int r, const MomentOracle& moments);

// All set partitions of {0..r-1} as block lists, deterministic order.
std::vector<std::vector<std::vector<int>>> set_partitions(int r);

// Unbiased k-statistics k2, k3, k4 with a 200-resample bootstrap stderr;
// resample seeds are derived from (samples.seed, order).
CumulantEstimate k_statistic(const SampleSet& samples, int r, int resamples = 200);

// N_sigma(eta) with variance parameter `variance`.
double normal_cdf(double eta, double variance);

// sup_x |empirical CDF - N_sigma| over the sample points (both one-sided gaps).
double ks_distance(const SampleSet& samples, double variance);

}  // namespace diolab
