#include "diolab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace diolab {

namespace {

std::int64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::int64_t r = 1;
    for (int j = 1; j <= k; ++j) r = r * (n - k + j) / j;
    return r;
}

// Lexicographically ordered k-subsets of {0..n-1}.
std::vector<std::vector<int>> subsets(int n, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    if (k == 0) {
        out.push_back({});
        return out;
    }
    if (k > n) return out;
    while (true) {
        out.push_back(idx);
        int i = k - 1;
        while (i >= 0 && idx[i] == n - k + i) --i;
        if (i < 0) break;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    return out;
}

double sup_norm(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double dist_to_integers(double x) { return std::abs(x - std::round(x)); }

}  // namespace

MonomialVector::MonomialVector(int ambient_, int degree_, std::vector<double> pure,
                               std::vector<double> wedge)
    : ambient(ambient_), degree(degree_), pure_part(std::move(pure)),
      wedge_part(std::move(wedge)) {
    const int d = ambient - 1;
    if (degree < 1 || degree > d) throw ConfigError("MonomialVector: degree out of range");
    if (static_cast<std::int64_t>(pure_part.size()) != binomial(d, degree))
        throw ConfigError("MonomialVector: pure_part size mismatch");
    if (static_cast<std::int64_t>(wedge_part.size()) != binomial(d, degree - 1))
        throw ConfigError("MonomialVector: wedge_part size mismatch");
}

ShiWeightData::ShiWeightData(const Weights& w, double eps0_) : d(w.dim()), weights(w), eps0(eps0_) {
    if (!(eps0 > 0.0 && eps0 < 1.0)) throw ConfigError("ShiWeightData: eps0 must be in (0,1)");
    delta_i.resize(d);
    for (int i = 1; i <= d; ++i) delta_i[i - 1] = static_cast<double>(d + 1 - i) * i;
    delta_eta.resize(d - 1);
    double acc = 0.0;
    for (int k = 1; k <= d - 1; ++k) {
        acc += k <= w.m ? w.w[k - 1] : -w.w[k - 1];
        delta_eta[k - 1] = acc;
        if (!(acc > 0.0))
            throw ConfigError("ShiWeightData: delta_eta[" + std::to_string(k) +
                              "] is not positive");
    }
}

std::int64_t zeta_kim(const Vector& v, double T) {
    if (!(T >= 1.0)) throw ConfigError("zeta_kim: T must be >= 1");
    // ||qv||_Z <= 1/2 always, and N^2/T >= 1 once N >= sqrt(T), so the scan
    // terminates by then.
    const auto nmax = static_cast<std::int64_t>(std::ceil(std::sqrt(T))) + 1;
    double running_min = std::numeric_limits<double>::infinity();
    for (std::int64_t N = 1; N <= nmax; ++N) {
        double dist = 0.0;
        for (int i = 0; i < v.size(); ++i) dist = std::max(dist, dist_to_integers(N * v[i]));
        running_min = std::min(running_min, dist);
        if (running_min <= static_cast<double>(N) * N / T) return N;
    }
    return nmax;  // unreachable by the Dirichlet bound
}

std::optional<LiouvilleWitness> liouville_witness(const Vector& v, double E, std::int64_t Qmax) {
    if (Qmax < 1) throw ConfigError("liouville_witness: Qmax must be >= 1");
    // q = 1 is skipped: its threshold is 1 regardless of E, so every vector
    // would qualify trivially.
    for (std::int64_t q = 2; q <= Qmax; ++q) {
        double dist = 0.0;
        for (int i = 0; i < v.size(); ++i) dist = std::max(dist, dist_to_integers(q * v[i]));
        dist /= static_cast<double>(q);  // ||v - p/q||_sup
        if (dist < std::pow(static_cast<double>(q), -E)) {
            LiouvilleWitness w;
            w.q = q;
            w.p = Eigen::VectorXi(v.size());
            for (int i = 0; i < v.size(); ++i)
                w.p[i] = static_cast<int>(std::llround(q * v[i]));
            w.distance = dist;
            return w;
        }
    }
    return std::nullopt;
}

std::optional<Vector> has_vector_in_cylinder(const Matrix& basis, double A, double B,
                                             std::int64_t budget) {
    const int dim = static_cast<int>(basis.cols());
    if (!(A > 0.0) || B < 0.0) throw ConfigError("has_vector_in_cylinder: need A > 0, B >= 0");
    const double tiny = 1e-12;
    Vector scale(dim);
    for (int i = 0; i < dim - 1; ++i) scale[i] = 1.0 / A;
    scale[dim - 1] = 1.0 / std::max(B, tiny);
    Matrix scaled = scale.asDiagonal() * basis;
    // sup <= 1 implies eucl <= sqrt(dim)
    auto candidates = enumerate_in_ball(scaled, std::sqrt(static_cast<double>(dim)), true, budget);
    std::optional<Vector> best;
    double best_sup = std::numeric_limits<double>::infinity();
    for (const auto& [z, sv] : candidates) {
        Vector orig = basis * z.cast<double>();
        bool ok = orig.head(dim - 1).lpNorm<Eigen::Infinity>() <= A * (1.0 + 1e-9) &&
                  std::abs(orig[dim - 1]) <= B + tiny;
        if (!ok) continue;
        double s = sv.lpNorm<Eigen::Infinity>();
        if (s < best_sup) {
            best_sup = s;
            best = orig;
        }
    }
    return best;
}

double phi_epsilon(const MonomialVector& v, const ShiWeightData& weights) {
    const int d = weights.d;
    const int i = v.degree;
    const double eps = weights.eps0;
    const double di = weights.delta_i[i - 1];

    // pi_0: trivial-weight component.  e_{d+1} coefficient at degree 1, the top
    // form of R^d at degree d, absent otherwise.
    double pi0 = 0.0;
    if (i == 1) pi0 = sup_norm(v.wedge_part);
    if (i == d) pi0 = std::max(pi0, sup_norm(v.pure_part));
    if (pi0 > std::pow(eps, di)) return 0.0;

    double best = std::numeric_limits<double>::infinity();
    auto consider = [&](int k, double norm) {  // component with highest weight eta_k
        if (k < 1 || k > d - 1 || norm <= 0.0) return;
        double de = weights.delta_eta[k - 1];
        best = std::min(best, std::pow(eps, di / de) * std::pow(norm, -1.0 / de));
    };
    if (i < d) consider(i, sup_norm(v.pure_part));
    if (i > 1) consider(i - 1, sup_norm(v.wedge_part));
    return best;  // +inf when every nontrivial component vanishes
}

AlphaEpsResult alpha_epsilon(const Matrix& basis, const ShiWeightData& weights, double radius,
                             std::int64_t budget) {
    const int dim = static_cast<int>(basis.cols());
    if (dim != weights.d + 1) throw ConfigError("alpha_epsilon: basis dimension mismatch");

    // Monomials are built from the K shortest vectors only; longer vectors give
    // larger covolumes and cannot raise the maximum.
    constexpr int kPoolCap = 24;

    auto value_at = [&](double r) -> double {
        // sup <= r implies eucl <= sqrt(dim) * r
        auto vecs = enumerate_in_ball(basis, std::sqrt(static_cast<double>(dim)) * r, true, budget);
        std::vector<Vector> pool;
        for (const auto& [z, v] : vecs)
            if (v.lpNorm<Eigen::Infinity>() <= r * (1.0 + 1e-12)) pool.push_back(v);
        std::sort(pool.begin(), pool.end(), [](const Vector& a, const Vector& b) {
            return a.lpNorm<Eigen::Infinity>() < b.lpNorm<Eigen::Infinity>();
        });
        if (static_cast<int>(pool.size()) > kPoolCap) pool.resize(kPoolCap);
        const int d = weights.d;
        const int nv = static_cast<int>(pool.size());
        double best = 0.0;
        std::int64_t work = 0;
        for (int deg = 1; deg <= std::min(d, nv); ++deg) {
            auto pure_sets = subsets(d, deg);          // subsets of {1..d} rows
            auto wedge_sets = subsets(d, deg - 1);     // rows joined with e_{d+1}
            for (const auto& pick : subsets(nv, deg)) {
                if (++work > budget) throw BudgetExceeded("alpha_epsilon: monomial budget");
                Matrix cols(dim, deg);
                for (int c = 0; c < deg; ++c) cols.col(c) = pool[pick[c]];
                // wedge coefficient over e_S = det of the rows S of cols
                std::vector<double> pure(pure_sets.size());
                bool nonzero = false;
                Matrix sub(deg, deg);
                for (size_t s = 0; s < pure_sets.size(); ++s) {
                    for (int a = 0; a < deg; ++a) sub.row(a) = cols.row(pure_sets[s][a]);
                    pure[s] = sub.determinant();
                    nonzero = nonzero || pure[s] != 0.0;
                }
                std::vector<double> wedge(wedge_sets.size());
                Matrix sub2(deg, deg);
                for (size_t s = 0; s < wedge_sets.size(); ++s) {
                    for (int a = 0; a + 1 < deg; ++a) sub2.row(a) = cols.row(wedge_sets[s][a]);
                    sub2.row(deg - 1) = cols.row(d);  // the e_{d+1} row
                    wedge[s] = sub2.determinant();
                    nonzero = nonzero || wedge[s] != 0.0;
                }
                if (!nonzero) continue;  // linearly dependent pick
                MonomialVector mono(dim, deg, std::move(pure), std::move(wedge));
                double phi = phi_epsilon(mono, weights);
                if (std::isfinite(phi)) best = std::max(best, phi);
            }
        }
        return best;
    };

    AlphaEpsResult res;
    res.value = value_at(radius);
    double doubled = value_at(2.0 * radius);
    res.certified = doubled <= res.value * (1.0 + 1e-9);
    res.value = std::max(res.value, doubled);
    return res;
}

}  // namespace diolab
