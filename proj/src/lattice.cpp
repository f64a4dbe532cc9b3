#include "diolab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "diolab/counting.hpp"

namespace diolab {

namespace {

bool nearly_integral(double x, double tol) { return std::abs(x - std::round(x)) <= tol; }

}  // namespace

Weights::Weights(int m_, int n_, std::vector<double> w_, bool clt_mode)
    : m(m_), n(n_), w(std::move(w_)) {
    if (m <= 0 || n <= 0) throw ConfigError("Weights: m and n must be positive");
    if (static_cast<int>(w.size()) != m + n)
        throw ConfigError("Weights: expected " + std::to_string(m + n) + " entries, got " +
                          std::to_string(w.size()));
    for (double wi : w)
        if (!(wi > 0.0)) throw ConfigError("Weights: all entries must be positive");
    if (std::abs(expansion_sum() - contraction_sum()) > 1e-12)
        throw ConfigError("Weights: flow not balanced, expansion sum " +
                          std::to_string(expansion_sum()) + " vs contraction sum " +
                          std::to_string(contraction_sum()));
    if (clt_mode) {
        for (int j = m; j < m + n; ++j)
            if (std::abs(w[j] - 1.0) > 1e-12)
                throw ConfigError("Weights: CLT mode requires contraction weights equal to 1");
        if (std::abs(expansion_sum() - n) > 1e-12)
            throw ConfigError("Weights: CLT mode requires expansion weights summing to n");
    }
}

double Weights::expansion_sum() const {
    double s = 0;
    for (int i = 0; i < m; ++i) s += w[i];
    return s;
}

double Weights::contraction_sum() const {
    double s = 0;
    for (int j = m; j < m + n; ++j) s += w[j];
    return s;
}

Weights Weights::clt(int m, int n, std::vector<double> expansion) {
    std::vector<double> w = std::move(expansion);
    w.resize(m + n, 1.0);
    return Weights(m, n, std::move(w), /*clt_mode=*/true);
}

Weights Weights::equal(int m, int n) {
    std::vector<double> w(m, static_cast<double>(n) / m);
    w.resize(m + n, 1.0);
    return Weights(m, n, std::move(w), /*clt_mode=*/true);
}

ShiftMatrix::ShiftMatrix(Matrix e) : entries(std::move(e)) {
    if (!entries.allFinite()) throw ConfigError("ShiftMatrix: entries must be finite");
}

AffineLattice::AffineLattice(Matrix basis_, Vector shift_)
    : dim(static_cast<int>(basis_.rows())), basis(std::move(basis_)), shift(std::move(shift_)) {
    if (basis.rows() != basis.cols()) throw ConfigError("AffineLattice: basis must be square");
    if (shift.size() != dim) throw ConfigError("AffineLattice: shift dimension mismatch");
    if (std::abs(basis.determinant() - 1.0) > kUnimodularTol)
        throw ConfigError("AffineLattice: basis is not unimodular");
}

AffineLattice AffineLattice::integer_lattice(int d) {
    return AffineLattice(Matrix::Identity(d, d), Vector::Zero(d));
}

bool AffineLattice::contains(const Vector& x, double tol) const {
    Vector z = basis.partialPivLu().solve(x - shift);
    for (int i = 0; i < dim; ++i)
        if (!nearly_integral(z[i], tol)) return false;
    return true;
}

FlowElement::FlowElement(Vector exponents_, FlowKind kind_)
    : exponents(std::move(exponents_)), kind(kind_) {
    if (std::abs(exponents.sum()) > kGroupLawTol)
        throw ConfigError("FlowElement: exponents must sum to 0");
}

FlowElement FlowElement::a(const Weights& w, double t) {
    Vector e(w.dim());
    for (int i = 0; i < w.m; ++i) e[i] = w.w[i] * t;
    for (int j = w.m; j < w.dim(); ++j) e[j] = -w.w[j] * t;
    return FlowElement(std::move(e), FlowKind::a_t);
}

FlowElement FlowElement::b_pow(const Weights& w, double s) {
    for (int j = w.m; j < w.dim(); ++j)
        if (std::abs(w.w[j] - 1.0) > 1e-12)
            throw ConfigError("FlowElement::b_pow requires unit contraction weights");
    FlowElement f = a(w, s);
    f.kind = FlowKind::b_power;
    return f;
}

AffineLattice make_affine_lattice(const DioInstance& instance, const ShiftMatrix& theta) {
    const int m = instance.m, n = instance.n, d = m + n;
    if (theta.m() != m || theta.n() != n)
        throw ConfigError("make_affine_lattice: theta dimension mismatch");
    Matrix basis = Matrix::Identity(d, d);
    basis.block(0, m, m, n) = theta.entries;
    Vector shift = Vector::Zero(d);
    for (int i = 0; i < m; ++i) shift[i] = instance.xi[i];
    return AffineLattice(std::move(basis), std::move(shift));
}

AffineLattice apply_flow(const AffineLattice& L, const FlowElement& f) {
    if (f.dim() != L.dim) throw ConfigError("apply_flow: dimension mismatch");
    Vector scale = f.exponents.array().exp();
    AffineLattice out;
    out.dim = L.dim;
    out.basis = scale.asDiagonal() * L.basis;
    out.shift = scale.asDiagonal() * L.shift;
    return out;
}

LLLResult lll_reduce(const Matrix& basis, double delta) {
    const int d = static_cast<int>(basis.cols());
    Matrix B = basis;
    Eigen::MatrixXi U = Eigen::MatrixXi::Identity(d, d);

    Matrix Bstar(B.rows(), d);
    Matrix mu = Matrix::Zero(d, d);
    std::vector<double> norm2(d);
    auto gram_schmidt = [&]() {
        for (int i = 0; i < d; ++i) {
            Bstar.col(i) = B.col(i);
            for (int j = 0; j < i; ++j) {
                mu(i, j) = B.col(i).dot(Bstar.col(j)) / norm2[j];
                Bstar.col(i) -= mu(i, j) * Bstar.col(j);
            }
            mu(i, i) = 1.0;  // the size-reduce update subtracts q * mu(j, j)
            norm2[i] = Bstar.col(i).squaredNorm();
        }
    };
    gram_schmidt();

    int k = 1;
    int iters = 0;
    while (k < d) {
        if (++iters > 1'000'000) throw BudgetExceeded("lll_reduce: iteration cap hit");
        // size-reduce column k against previous columns
        for (int j = k - 1; j >= 0; --j) {
            double q = std::round(mu(k, j));
            if (q != 0.0) {
                B.col(k) -= q * B.col(j);
                U.col(k) -= static_cast<int>(q) * U.col(j);
                for (int l = 0; l <= j; ++l) mu(k, l) -= q * mu(j, l);
            }
        }
        if (norm2[k] >= (delta - mu(k, k - 1) * mu(k, k - 1)) * norm2[k - 1]) {
            ++k;
        } else {
            B.col(k).swap(B.col(k - 1));
            U.col(k).swap(U.col(k - 1));
            gram_schmidt();
            k = std::max(k - 1, 1);
        }
    }
    return {B, U};
}

namespace {

// Fincke-Pohst: enumerate all nonzero c with ||B c||_2^2 <= radius2, tracking
// the best vector under `norm`.  The Euclidean radius is maintained large
// enough (d * best_sup^2 for the sup norm) to certify optimality.
ShortestVector enumerate_shortest(const Matrix& B, NormKind norm) {
    const int d = static_cast<int>(B.cols());
    Eigen::HouseholderQR<Matrix> qr(B);
    Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < d; ++i)
        if (R(i, i) < 0) R.row(i) = -R.row(i);

    auto norm_of = [&](const Vector& v) {
        return norm == NormKind::Sup ? v.lpNorm<Eigen::Infinity>() : v.norm();
    };

    ShortestVector best;
    best.length = std::numeric_limits<double>::infinity();
    for (int i = 0; i < d; ++i) {
        double len = norm_of(B.col(i));
        if (len < best.length) {
            best.length = len;
            best.vec = B.col(i);
            best.coeffs = Eigen::VectorXi::Zero(d);
            best.coeffs[i] = 1;
        }
    }

    auto radius2 = [&]() {
        double r = best.length;
        return norm == NormKind::Sup ? d * r * r : r * r;
    };

    Eigen::VectorXi c = Eigen::VectorXi::Zero(d);
    std::vector<double> partial(d + 1, 0.0);  // squared norm of levels > i
    std::vector<double> center(d, 0.0);

    std::function<void(int)> descend = [&](int i) {
        if (i < 0) {
            if (c.isZero()) return;
            Vector v = B * c.cast<double>();
            double len = norm_of(v);
            if (len < best.length - 1e-15) {
                best.length = len;
                best.vec = v;
                best.coeffs = c;
            }
            return;
        }
        double proj = 0.0;
        for (int j = i + 1; j < d; ++j) proj += R(i, j) * c[j];
        center[i] = -proj / R(i, i);
        double room = radius2() - partial[i + 1];
        if (room < 0) return;
        double halfw = std::sqrt(room) / R(i, i);
        int lo = static_cast<int>(std::ceil(center[i] - halfw - 1e-12));
        int hi = static_cast<int>(std::floor(center[i] + halfw + 1e-12));
        for (int ci = lo; ci <= hi; ++ci) {
            c[i] = ci;
            double term = R(i, i) * (ci - center[i]);
            partial[i] = partial[i + 1] + term * term;
            if (partial[i] <= radius2() + 1e-12) descend(i - 1);
        }
        c[i] = 0;
    };
    descend(d - 1);
    return best;
}

}  // namespace

ShortestVector shortest_vector(const Matrix& basis, NormKind norm) {
    const int d = static_cast<int>(basis.cols());
    if (d < 1) throw ConfigError("shortest_vector: empty basis");
    if (std::abs(basis.determinant()) < 1e-300)
        throw ConfigError("shortest_vector: singular basis");
    if (d == 1) {
        ShortestVector sv;
        sv.vec = basis.col(0);
        sv.coeffs = Eigen::VectorXi::Ones(1);
        sv.length = std::abs(basis(0, 0));
        return sv;
    }
    LLLResult lll = lll_reduce(basis);
    ShortestVector sv = enumerate_shortest(lll.reduced, norm);
    sv.coeffs = lll.transform * sv.coeffs;
    return sv;
}

std::vector<std::pair<Eigen::VectorXi, Vector>> enumerate_in_ball(const Matrix& basis,
                                                                  double radius, bool half,
                                                                  std::int64_t budget) {
    const int d = static_cast<int>(basis.cols());
    if (!(radius > 0)) throw ConfigError("enumerate_in_ball: radius must be positive");
    LLLResult lll = lll_reduce(basis);
    Eigen::HouseholderQR<Matrix> qr(lll.reduced);
    Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < d; ++i)
        if (R(i, i) < 0) R.row(i) = -R.row(i);

    const double radius2 = radius * radius * (1.0 + 1e-12);
    std::vector<std::pair<Eigen::VectorXi, Vector>> out;
    Eigen::VectorXi c = Eigen::VectorXi::Zero(d);
    std::vector<double> partial(d + 1, 0.0);
    std::int64_t used = 0;

    std::function<void(int)> descend = [&](int i) {
        if (i < 0) {
            if (c.isZero()) return;
            if (half) {
                // keep the representative whose first nonzero coefficient is positive
                for (int k = d - 1; k >= 0; --k) {
                    if (c[k] > 0) break;
                    if (c[k] < 0) return;
                }
            }
            Eigen::VectorXi z = lll.transform * c;
            out.emplace_back(z, basis * z.cast<double>());
            return;
        }
        double proj = 0.0;
        for (int j = i + 1; j < d; ++j) proj += R(i, j) * c[j];
        double center = -proj / R(i, i);
        double room = radius2 - partial[i + 1];
        if (room < 0) return;
        double halfw = std::sqrt(room) / R(i, i);
        int lo = static_cast<int>(std::ceil(center - halfw - 1e-12));
        int hi = static_cast<int>(std::floor(center + halfw + 1e-12));
        for (int ci = lo; ci <= hi; ++ci) {
            if (++used > budget) throw BudgetExceeded("enumerate_in_ball: budget exceeded");
            c[i] = ci;
            double term = R(i, i) * (ci - center);
            partial[i] = partial[i + 1] + term * term;
            if (partial[i] <= radius2) descend(i - 1);
        }
        c[i] = 0;
    };
    descend(d - 1);
    return out;
}

double height_ht(const AffineLattice& L) {
    return 1.0 / shortest_vector(L.basis, NormKind::Sup).length;
}

AlphaResult alpha_height(const Matrix& basis, bool allow_approximate) {
    const int d = static_cast<int>(basis.cols());
    if (std::abs(basis.determinant() - 1.0) > 1e-6)
        throw ConfigError("alpha_height: basis must be unimodular");
    AlphaResult res;
    if (d == 1) return res;
    if (d == 2) {
        double l1 = shortest_vector(basis, NormKind::Euclidean).length;
        res.value = std::max(1.0, 1.0 / l1);
        return res;
    }
    if (d == 3) {
        double l1 = shortest_vector(basis, NormKind::Euclidean).length;
        // Rank-2 covolumes are the norms of the cross-product (wedge) lattice.
        Eigen::Vector3d b0 = basis.col(0), b1 = basis.col(1), b2 = basis.col(2);
        Matrix W(3, 3);
        W.col(0) = b1.cross(b2);
        W.col(1) = b2.cross(b0);
        W.col(2) = b0.cross(b1);
        double l2 = shortest_vector(W, NormKind::Euclidean).length;
        res.value = std::max({1.0, 1.0 / l1, 1.0 / l2});
        return res;
    }
    if (!allow_approximate)
        throw ConfigError("alpha_height: exact mode requires d <= 3 (pass approximate flag)");
    // Lower bound from Gram-Schmidt norms of an LLL basis; off from the true
    // alpha by at most the LLL distortion 2^{d(d-1)/4} per rank.
    LLLResult lll = lll_reduce(basis);
    Eigen::HouseholderQR<Matrix> qr(lll.reduced);
    Vector gs = qr.matrixQR().diagonal().cwiseAbs();
    std::vector<double> g(gs.data(), gs.data() + d);
    std::sort(g.begin(), g.end());
    double prod = 1.0;
    res.value = 1.0;
    for (int i = 0; i < d - 1; ++i) {
        prod *= g[i];
        res.value = std::max(res.value, 1.0 / prod);
    }
    res.exact = false;
    return res;
}

namespace {

bool is_upper_triangular(const Matrix& B) {
    for (int i = 1; i < B.rows(); ++i)
        for (int j = 0; j < i; ++j)
            if (B(i, j) != 0.0) return false;
    return true;
}

struct BoxVisitor {
    const AffineLattice* L;
    const Vector* lo;
    const Vector* hi;
    Boundary boundary;
    std::int64_t budget;
    std::int64_t used = 0;
    const std::function<void(const Eigen::VectorXi&, const Vector&)>* emit;

    bool inside(double x, double a, double b) const {
        return boundary == Boundary::Strict ? (x > a && x < b) : (x >= a && x <= b);
    }

    void tick() {
        if (++used > budget) throw BudgetExceeded("enumerate_points_in_box: budget exceeded");
    }

    // Upper-triangular basis: coordinate i depends only on z_i..z_d, so each
    // level has an exact integer interval.
    void run_triangular() {
        const int d = L->dim;
        Eigen::VectorXi z = Eigen::VectorXi::Zero(d);
        Vector x = Vector::Zero(d);
        std::function<void(int)> level = [&](int i) {
            if (i < 0) {
                (*emit)(z, x);
                return;
            }
            double c = L->shift[i];
            for (int j = i + 1; j < d; ++j) c += L->basis(i, j) * z[j];
            double g = L->basis(i, i);
            double a = ((g > 0 ? (*lo)[i] : (*hi)[i]) - c) / g;
            double b = ((g > 0 ? (*hi)[i] : (*lo)[i]) - c) / g;
            std::int64_t zlo, zhi;
            if (boundary == Boundary::Strict) {
                zlo = static_cast<std::int64_t>(std::floor(a)) + 1;
                zhi = static_cast<std::int64_t>(std::ceil(b)) - 1;
            } else {
                zlo = static_cast<std::int64_t>(std::ceil(a - 1e-12));
                zhi = static_cast<std::int64_t>(std::floor(b + 1e-12));
            }
            for (std::int64_t zi = zlo; zi <= zhi; ++zi) {
                tick();
                z[i] = static_cast<int>(zi);
                x[i] = g * zi + c;
                if (!inside(x[i], (*lo)[i], (*hi)[i])) continue;
                level(i - 1);
            }
            z[i] = 0;
        };
        level(d - 1);
    }

    void run_generic() {
        const int d = L->dim;
        Matrix Ginv = L->basis.inverse();
        Vector mid = 0.5 * (*lo + *hi) - L->shift;
        Vector center = Ginv * mid;
        Vector width = 0.5 * (*hi - *lo);
        Vector halfw = Ginv.cwiseAbs() * width;
        std::vector<std::int64_t> zlo(d), zhi(d);
        double est = 1.0;
        for (int i = 0; i < d; ++i) {
            zlo[i] = static_cast<std::int64_t>(std::ceil(center[i] - halfw[i] - 1e-9));
            zhi[i] = static_cast<std::int64_t>(std::floor(center[i] + halfw[i] + 1e-9));
            est *= static_cast<double>(std::max<std::int64_t>(0, zhi[i] - zlo[i] + 1));
        }
        if (est > static_cast<double>(budget))
            throw BudgetExceeded("enumerate_points_in_box: estimated point count over budget");
        Eigen::VectorXi z = Eigen::VectorXi::Zero(d);
        std::function<void(int)> level = [&](int i) {
            if (i == d) {
                tick();
                Vector x = L->basis * z.cast<double>() + L->shift;
                for (int k = 0; k < d; ++k)
                    if (!inside(x[k], (*lo)[k], (*hi)[k])) return;
                (*emit)(z, x);
                return;
            }
            for (std::int64_t zi = zlo[i]; zi <= zhi[i]; ++zi) {
                z[i] = static_cast<int>(zi);
                level(i + 1);
            }
        };
        level(0);
    }

    void run() {
        if (is_upper_triangular(L->basis))
            run_triangular();
        else
            run_generic();
    }
};

}  // namespace

void visit_points_in_box(const AffineLattice& L, const Vector& lo, const Vector& hi,
                         Boundary boundary, std::int64_t budget,
                         const std::function<void(const Vector&)>& visit) {
    for (int i = 0; i < L.dim; ++i)
        if (!(lo[i] < hi[i])) throw ConfigError("visit_points_in_box: requires lo < hi");
    std::function<void(const Eigen::VectorXi&, const Vector&)> emit =
        [&](const Eigen::VectorXi&, const Vector& x) { visit(x); };
    BoxVisitor v{&L, &lo, &hi, boundary, budget, 0, &emit};
    v.run();
}

std::vector<Vector> enumerate_points_in_box(const AffineLattice& L, const Vector& lo,
                                            const Vector& hi, Boundary boundary,
                                            std::int64_t budget) {
    for (int i = 0; i < L.dim; ++i)
        if (!(lo[i] < hi[i])) throw ConfigError("enumerate_points_in_box: requires lo < hi");
    std::vector<std::pair<std::vector<int>, Vector>> pts;
    std::function<void(const Eigen::VectorXi&, const Vector&)> emit =
        [&](const Eigen::VectorXi& z, const Vector& x) {
            pts.emplace_back(std::vector<int>(z.data(), z.data() + z.size()), x);
        };
    BoxVisitor v{&L, &lo, &hi, boundary, budget, 0, &emit};
    v.run();
    std::sort(pts.begin(), pts.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Vector> out;
    out.reserve(pts.size());
    for (auto& p : pts) out.push_back(std::move(p.second));
    return out;
}

}  // namespace diolab
