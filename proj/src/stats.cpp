#include "diolab/stats.hpp"

#include <algorithm>
#include <cmath>

#include "diolab/rng.hpp"

namespace diolab {

namespace {

// Kahan-compensated power sums S_1..S_r.
std::vector<double> power_sums(const std::vector<double>& xs, int r) {
    std::vector<double> sums(r + 1, 0.0), comp(r + 1, 0.0);
    for (double x : xs) {
        double p = 1.0;
        for (int k = 1; k <= r; ++k) {
            p *= x;
            double y = p - comp[k];
            double t = sums[k] + y;
            comp[k] = (t - sums[k]) - y;
            sums[k] = t;
        }
    }
    return sums;
}

double k_stat_from_power_sums(const std::vector<double>& S, double n, int r) {
    const double S1 = S[1], S2 = S[2];
    switch (r) {
        case 2:
            return (n * S2 - S1 * S1) / (n * (n - 1));
        case 3: {
            const double S3 = S[3];
            return (2 * S1 * S1 * S1 - 3 * n * S1 * S2 + n * n * S3) / (n * (n - 1) * (n - 2));
        }
        case 4: {
            const double S3 = S[3], S4 = S[4];
            return (-6 * S1 * S1 * S1 * S1 + 12 * n * S1 * S1 * S2 - 3 * n * (n - 1) * S2 * S2 -
                    4 * n * (n + 1) * S1 * S3 + n * n * (n + 1) * S4) /
                   (n * (n - 1) * (n - 2) * (n - 3));
        }
        default:
            throw ConfigError("k_statistic: order must be 2, 3, or 4");
    }
}

}  // namespace

std::vector<std::vector<std::vector<int>>> set_partitions(int r) {
    std::vector<std::vector<std::vector<int>>> out;
    // restricted growth strings: a[0]=0, a[i] <= 1 + max(a[0..i-1])
    std::vector<int> a(r, 0);
    while (true) {
        int blocks = *std::max_element(a.begin(), a.end()) + 1;
        std::vector<std::vector<int>> part(blocks);
        for (int i = 0; i < r; ++i) part[a[i]].push_back(i);
        out.push_back(std::move(part));
        // next RGS in lexicographic order
        int i = r - 1;
        while (i > 0) {
            int mx = 0;
            for (int j = 0; j < i; ++j) mx = std::max(mx, a[j]);
            if (a[i] <= mx) break;
            --i;
        }
        if (i == 0) break;
        ++a[i];
        std::fill(a.begin() + i + 1, a.end(), 0);
    }
    return out;
}

double joint_cumulant(int r, const MomentOracle& moments) {
    if (r < 1 || r > 8) throw ConfigError("joint_cumulant: r must be in [1, 8]");
    double total = 0.0;
    for (const auto& part : set_partitions(r)) {
        double prod = 1.0;
        for (const auto& block : part) prod *= moments(block);
        double fact = 1.0;
        for (size_t k = 2; k < part.size(); ++k) fact *= static_cast<double>(k);
        total += (part.size() % 2 == 1 ? 1.0 : -1.0) * fact * prod;
    }
    return total;
}

CumulantEstimate k_statistic(const SampleSet& samples, int r, int resamples) {
    if (r < 2 || r > 4) throw ConfigError("k_statistic: order must be in {2,3,4}");
    const auto n = static_cast<std::int64_t>(samples.values.size());
    if (n <= r) throw ConfigError("k_statistic: need more than r samples");
    CumulantEstimate est;
    est.order = r;
    est.sample_count = n;
    est.value = k_stat_from_power_sums(power_sums(samples.values, r),
                                       static_cast<double>(n), r);
    if (resamples > 0) {
        double mean = 0.0, m2 = 0.0;
        std::vector<double> boot(n);
        for (int b = 0; b < resamples; ++b) {
            CounterRng rng(samples.seed, static_cast<std::uint64_t>(b),
                           static_cast<std::uint32_t>(1000 + r));
            for (std::int64_t i = 0; i < n; ++i) {
                auto idx = static_cast<std::int64_t>(rng.next_double() * n);
                boot[i] = samples.values[std::min(idx, n - 1)];
            }
            double kb = k_stat_from_power_sums(power_sums(boot, r), static_cast<double>(n), r);
            double delta = kb - mean;
            mean += delta / (b + 1);
            m2 += delta * (kb - mean);
        }
        est.stderr_boot = resamples > 1 ? std::sqrt(m2 / (resamples - 1)) : 0.0;
    }
    return est;
}

double normal_cdf(double eta, double variance) {
    if (!(variance > 0.0)) throw ConfigError("normal_cdf: variance must be positive");
    return 0.5 * std::erfc(-eta / std::sqrt(2.0 * variance));
}

double ks_distance(const SampleSet& samples, double variance) {
    if (samples.values.empty()) throw ConfigError("ks_distance: empty samples");
    std::vector<double> xs = samples.values;
    std::sort(xs.begin(), xs.end());
    const auto n = static_cast<double>(xs.size());
    double d = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        double cdf = normal_cdf(xs[i], variance);
        d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - cdf));
    }
    return d;
}

}  // namespace diolab
