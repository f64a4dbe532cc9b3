#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "diolab/counting.hpp"
#include "diolab/lattice.hpp"

using namespace diolab;

namespace {

// random unimodular integer matrix from elementary column operations
Eigen::MatrixXi random_unimodular(int d, std::mt19937_64& gen, int ops = 8) {
    Eigen::MatrixXi U = Eigen::MatrixXi::Identity(d, d);
    std::uniform_int_distribution<int> pick(0, d - 1), coef(-2, 2);
    for (int k = 0; k < ops; ++k) {
        int i = pick(gen), j = pick(gen);
        if (i == j) continue;
        U.col(i) += coef(gen) * U.col(j);
    }
    return U;
}

}  // namespace

TEST_CASE("Weights validation and factories") {
    Weights w = Weights::clt(2, 1, {0.5, 0.5});
    CHECK(w.dim() == 3);
    CHECK(w.expansion_sum() == doctest::Approx(1.0));
    CHECK(w.contraction_sum() == doctest::Approx(1.0));
    CHECK_THROWS_AS(Weights::clt(2, 1, {0.3, 0.3}), ConfigError);
    CHECK_THROWS_AS(Weights(1, 1, {1.0, -1.0}, false), ConfigError);
    CHECK_THROWS_AS(Weights(1, 1, {1.0}, false), ConfigError);
    Weights eq = Weights::equal(2, 2);
    CHECK(eq.w == std::vector<double>{1.0, 1.0, 1.0, 1.0});
}

TEST_CASE("flow elements preserve volume and compose via exponents") {
    Weights w = Weights::clt(2, 1, {0.25, 0.75});
    FlowElement at = FlowElement::a(w, 1.7);
    CHECK(std::abs(at.exponents.sum()) < 1e-12);
    CHECK(at.exponents[0] == doctest::Approx(0.25 * 1.7));
    CHECK(at.exponents[2] == doctest::Approx(-1.7));
    FlowElement inv = at.inverse();
    CHECK((at.exponents + inv.exponents).norm() == 0.0);
    FlowElement b2 = FlowElement::b_pow(w, 2.0);
    CHECK(b2.kind == FlowKind::b_power);
    Weights skew(1, 1, {1.0, 1.0}, false);
    CHECK_NOTHROW(FlowElement::b_pow(skew, 1.0));
}

TEST_CASE("make_affine_lattice membership") {
    DioInstance inst(1, 1, {1.0}, Weights::clt(1, 1, {1.0}), {0.2});
    ShiftMatrix theta{(Matrix(1, 1) << 0.3).finished()};
    AffineLattice L = make_affine_lattice(inst, theta);
    // points (z1 + 0.3 z2 + 0.2, z2)
    CHECK(L.contains((Vector(2) << 0.3 * 5.0 - 1.0 + 0.2, 5.0).finished()));
    CHECK(L.contains((Vector(2) << 0.2, 0.0).finished()));
    CHECK(!L.contains((Vector(2) << 0.25, 0.0).finished()));
    CHECK_THROWS_AS(AffineLattice((Matrix(2, 2) << 2, 0, 0, 1).finished(), Vector::Zero(2)),
                    ConfigError);
}

TEST_CASE("apply_flow rescales points of the lattice") {
    DioInstance inst(1, 1, {1.0}, Weights::clt(1, 1, {1.0}), {0.0});
    ShiftMatrix theta{(Matrix(1, 1) << 0.42).finished()};
    AffineLattice L = make_affine_lattice(inst, theta);
    FlowElement at = FlowElement::a(inst.weights, 2.0);
    AffineLattice Lt = apply_flow(L, at);
    Vector p = L.basis * (Vector(2) << 3.0, -2.0).finished() + L.shift;
    Vector q = at.exponents.array().exp().matrix().asDiagonal() * p;
    CHECK(Lt.contains(q));
    CHECK(std::abs(Lt.basis.determinant() - 1.0) < 1e-9);
}

TEST_CASE("lll_reduce returns an equivalent, shorter basis") {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> nrm(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 2 + static_cast<int>(gen() % 3);
        Matrix B(d, d);
        do {
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) B(i, j) = nrm(gen);
        } while (std::abs(B.determinant()) < 0.1);
        B *= random_unimodular(d, gen).cast<double>();
        LLLResult res = lll_reduce(B);
        CHECK((B * res.transform.cast<double>() - res.reduced).norm() < 1e-9);
        CHECK(std::abs(std::abs(res.transform.cast<double>().determinant()) - 1.0) < 1e-9);
        double min_orig = B.colwise().norm().minCoeff();
        double min_red = res.reduced.colwise().norm().minCoeff();
        CHECK(min_red <= min_orig * (1.0 + 1e-12));
    }
}

TEST_CASE("lll_reduce output satisfies size reduction and Lovasz") {
    // Includes a strongly anisotropic flow-image basis (condition ~1e7) that a
    // stale-mu bookkeeping bug used to leave unreduced, which made the
    // shortest-vector enumeration explode.
    std::vector<Matrix> cases;
    Matrix flow(3, 3);
    flow << 244.692, 0.0, 209.305,
            0.0, 244.692, 127.033,
            0.0, 0.0, 1.67017e-05;
    cases.push_back(flow);
    std::mt19937_64 gen(21);
    std::normal_distribution<double> nrm(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 2 + static_cast<int>(gen() % 3);
        Matrix B(d, d);
        do {
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) B(i, j) = nrm(gen);
        } while (std::abs(B.determinant()) < 0.1);
        cases.push_back(B);
    }
    for (const Matrix& B : cases) {
        const int d = static_cast<int>(B.cols());
        Matrix R = lll_reduce(B).reduced;
        Matrix Bs = R;
        Matrix mu = Matrix::Zero(d, d);
        std::vector<double> n2(d);
        for (int i = 0; i < d; ++i) {
            Bs.col(i) = R.col(i);
            for (int j = 0; j < i; ++j) {
                mu(i, j) = R.col(i).dot(Bs.col(j)) / n2[j];
                Bs.col(i) -= mu(i, j) * Bs.col(j);
            }
            n2[i] = Bs.col(i).squaredNorm();
        }
        for (int i = 1; i < d; ++i) {
            for (int j = 0; j < i; ++j) CHECK(std::abs(mu(i, j)) <= 0.5 + 1e-9);
            CHECK(n2[i] >= (0.99 - mu(i, i - 1) * mu(i, i - 1)) * n2[i - 1] * (1.0 - 1e-9));
        }
    }
}

TEST_CASE("shortest_vector on diagonal lattices hits the smallest entry") {
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> uni(0.2, 3.0);
    for (int trial = 0; trial < 25; ++trial) {
        const int d = 2 + static_cast<int>(gen() % 3);
        Vector diag(d);
        for (int i = 0; i < d; ++i) diag[i] = uni(gen);
        Matrix B = diag.asDiagonal() * random_unimodular(d, gen).cast<double>();
        ShortestVector sv_sup = shortest_vector(B, NormKind::Sup);
        ShortestVector sv_euc = shortest_vector(B, NormKind::Euclidean);
        // the lattice is diag * Z^d, so both minima equal min_i diag_i
        CHECK(sv_sup.length == doctest::Approx(diag.minCoeff()).epsilon(1e-12));
        CHECK(sv_euc.length == doctest::Approx(diag.minCoeff()).epsilon(1e-12));
        CHECK((B * sv_sup.coeffs.cast<double>() - sv_sup.vec).norm() < 1e-12);
    }
}

TEST_CASE("height_ht on reference lattices") {
    CHECK(height_ht(AffineLattice::integer_lattice(3)) == doctest::Approx(1.0));
    Matrix B = (Matrix(2, 2) << 0.25, 0.0, 0.0, 4.0).finished();
    AffineLattice L(B, Vector::Zero(2));
    CHECK(height_ht(L) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("alpha_height exact values in low dimension") {
    CHECK(alpha_height(Matrix::Identity(2, 2)).value == doctest::Approx(1.0));
    CHECK(alpha_height(Matrix::Identity(3, 3)).value == doctest::Approx(1.0));
    for (double a : {2.0, 5.0, 20.0}) {
        Matrix B = (Matrix(2, 2) << 1.0 / a, 0.0, 0.0, a).finished();
        AlphaResult r = alpha_height(B);
        CHECK(r.exact);
        CHECK(r.value == doctest::Approx(a).epsilon(1e-12));
    }
    // d = 3: the plane spanned by the two short vectors has covolume 1/4
    Matrix B3 = (Vector(3) << 0.5, 0.5, 4.0).finished().asDiagonal();
    AlphaResult r3 = alpha_height(B3);
    CHECK(r3.exact);
    CHECK(r3.value == doctest::Approx(4.0).epsilon(1e-12));
    CHECK_THROWS_AS(alpha_height(Matrix::Identity(4, 4), false), ConfigError);
    CHECK(!alpha_height(Matrix::Identity(4, 4), true).exact);
}

TEST_CASE("enumerate_points_in_box matches brute force and honors boundaries") {
    AffineLattice z2 = AffineLattice::integer_lattice(2);
    Vector lo(2), hi(2);
    lo << -2.0, -2.0;
    hi << 2.0, 2.0;
    CHECK(enumerate_points_in_box(z2, lo, hi, Boundary::Strict).size() == 9);
    CHECK(enumerate_points_in_box(z2, lo, hi, Boundary::Closed).size() == 25);

    std::mt19937_64 gen(17);
    std::normal_distribution<double> nrm(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.5, 2.5);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 2 + static_cast<int>(gen() % 2);
        Matrix B(d, d);
        do {
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) B(i, j) = nrm(gen);
        } while (std::abs(std::abs(B.determinant()) - 0.0) < 0.2);
        B /= std::pow(std::abs(B.determinant()), 1.0 / d);
        if (B.determinant() < 0) B.col(0) *= -1.0;
        Vector shift(d);
        for (int i = 0; i < d; ++i) shift[i] = nrm(gen) * 0.3;
        AffineLattice L(B, shift);
        Vector blo(d), bhi(d);
        for (int i = 0; i < d; ++i) {
            double c = nrm(gen) * 0.5, w = uni(gen);
            blo[i] = c - w;
            bhi[i] = c + w;
        }
        auto pts = enumerate_points_in_box(L, blo, bhi, Boundary::Strict);
        // oracle: scan integer coefficients in a generous window
        std::int64_t oracle = 0;
        Matrix Binv = B.inverse();
        double reach = Binv.cwiseAbs().rowwise().sum().maxCoeff() *
                           (bhi.cwiseAbs().maxCoeff() + blo.cwiseAbs().maxCoeff() +
                            shift.cwiseAbs().maxCoeff()) +
                       2.0;
        const auto R = static_cast<std::int64_t>(std::ceil(reach));
        std::vector<std::int64_t> c(d, -R);
        while (true) {
            Vector x = shift;
            for (int i = 0; i < d; ++i) x += static_cast<double>(c[i]) * B.col(i);
            bool inside = true;
            for (int i = 0; i < d; ++i) inside = inside && x[i] > blo[i] && x[i] < bhi[i];
            if (inside) ++oracle;
            int k = 0;
            while (k < d && ++c[k] > R) c[k++] = -R;
            if (k == d) break;
        }
        CHECK(static_cast<std::int64_t>(pts.size()) == oracle);
        for (const auto& p : pts) CHECK(L.contains(p));
    }
}

TEST_CASE("visit_points_in_box agrees with the materialized enumeration") {
    DioInstance inst(1, 1, {1.0}, Weights::clt(1, 1, {1.0}), {0.0});
    ShiftMatrix theta{(Matrix(1, 1) << 0.37).finished()};
    AffineLattice L = make_affine_lattice(inst, theta);
    AffineLattice Lt = apply_flow(L, FlowElement::a(inst.weights, 3.0));
    Vector lo(2), hi(2);
    lo << -1.5, -2.7;
    hi << 1.5, 2.7;
    auto pts = enumerate_points_in_box(Lt, lo, hi, Boundary::Closed);
    std::vector<Vector> streamed;
    visit_points_in_box(Lt, lo, hi, Boundary::Closed, 1'000'000,
                        [&](const Vector& x) { streamed.push_back(x); });
    REQUIRE(streamed.size() == pts.size());
    auto lex = [](const Vector& a, const Vector& b) {
        for (int i = 0; i < a.size(); ++i)
            if (a[i] != b[i]) return a[i] < b[i];
        return false;
    };
    std::sort(streamed.begin(), streamed.end(), lex);
    std::sort(pts.begin(), pts.end(), lex);
    for (size_t i = 0; i < pts.size(); ++i)
        CHECK((streamed[i] - pts[i]).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("enumerate_in_ball returns exactly the vectors inside the radius") {
    Matrix B = (Matrix(2, 2) << 1.0, 0.6, 0.0, 1.0).finished();
    auto all = enumerate_in_ball(B, 2.0, false);
    auto half = enumerate_in_ball(B, 2.0, true);
    CHECK(all.size() == 2 * half.size());
    for (const auto& [z, v] : all) {
        CHECK(v.norm() <= 2.0 + 1e-12);
        CHECK((B * z.cast<double>() - v).norm() < 1e-12);
        CHECK(z.cwiseAbs().sum() > 0);
    }
    // oracle count by direct scan
    std::int64_t oracle = 0;
    for (int a = -10; a <= 10; ++a)
        for (int b = -10; b <= 10; ++b) {
            if (a == 0 && b == 0) continue;
            if ((B * (Vector(2) << a, b).finished()).norm() <= 2.0) ++oracle;
        }
    CHECK(static_cast<std::int64_t>(all.size()) == oracle);
}
