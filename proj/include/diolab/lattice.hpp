#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "diolab/common.hpp"

namespace diolab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Expansion/contraction exponents of the diagonal flow a_t.  The first m
// entries expand, the last n contract; the two groups must balance so that
// the flow is volume preserving.
struct Weights {
    int m = 0;
    int n = 0;
    std::vector<double> w;  // size m + n, all positive

    Weights() = default;
    Weights(int m_, int n_, std::vector<double> w_, bool clt_mode = false);

    int dim() const { return m + n; }
    double expansion_sum() const;
    double contraction_sum() const;

    // Contraction weights all 1 and expansion weights summing to n.
    static Weights clt(int m, int n, std::vector<double> expansion);
    static Weights equal(int m, int n);
};

// The m x n matrix theta of the unipotent u(theta).
struct ShiftMatrix {
    Matrix entries;  // m x n

    ShiftMatrix() = default;
    explicit ShiftMatrix(Matrix e);
    int m() const { return static_cast<int>(entries.rows()); }
    int n() const { return static_cast<int>(entries.cols()); }
};

// Affine unimodular lattice basis * Z^d + shift.
struct AffineLattice {
    int dim = 0;
    Matrix basis;  // d x d, |det - 1| <= 1e-9
    Vector shift;  // d

    AffineLattice() = default;
    AffineLattice(Matrix basis_, Vector shift_);

    static AffineLattice integer_lattice(int d);

    // x is a member iff basis^-1 (x - shift) is integral within tolerance.
    bool contains(const Vector& x, double tol = kMembershipTol) const;
};

enum class FlowKind { a_t, b_power };

// Diagonal of log a_t (or log b^s): exponents sum to 0.
struct FlowElement {
    Vector exponents;
    FlowKind kind = FlowKind::a_t;

    FlowElement() = default;
    FlowElement(Vector exponents_, FlowKind kind_);

    int dim() const { return static_cast<int>(exponents.size()); }

    static FlowElement a(const Weights& w, double t);
    // b^s = diag(e^{w_1 s}, ..., e^{w_m s}, e^{-s}, ..., e^{-s}); requires
    // contraction weights equal to 1.
    static FlowElement b_pow(const Weights& w, double s);
    FlowElement inverse() const { return {Vector(-exponents), kind}; }
};

struct DioInstance;  // counting.hpp

AffineLattice make_affine_lattice(const DioInstance& instance, const ShiftMatrix& theta);
AffineLattice apply_flow(const AffineLattice& L, const FlowElement& f);

enum class NormKind { Sup, Euclidean };

struct ShortestVector {
    Vector vec;                   // lattice vector of minimal norm
    Eigen::VectorXi coeffs;       // its integer coordinates in the input basis
    double length = 0.0;
};

// Exact shortest nonzero lattice vector (LLL then bounded enumeration);
// exact-mode dimension cap 4.
ShortestVector shortest_vector(const Matrix& basis, NormKind norm = NormKind::Sup);

// ht = 1/lambda_1 (sup norm) of the linear part; the shift is ignored.
double height_ht(const AffineLattice& L);

struct AlphaResult {
    double value = 1.0;
    bool exact = true;
};

// alpha_0: sup over rational subspaces V of 1/covol(V cap Lambda), Gram
// (Euclidean) covolumes.  Exact for d <= 3; d >= 4 needs allow_approximate
// and returns a successive-minima product bound flagged inexact.
AlphaResult alpha_height(const Matrix& basis, bool allow_approximate = false);

// LLL reduction (delta = 0.99) of the columns of `basis`; returns the reduced
// basis and the unimodular transform U with reduced = basis * U.
struct LLLResult {
    Matrix reduced;
    Eigen::MatrixXi transform;
};
LLLResult lll_reduce(const Matrix& basis, double delta = 0.99);

// All nonzero lattice vectors B c with ||B c||_2 <= radius (one of each
// antipodal pair when half = true), with their integer coordinates.
std::vector<std::pair<Eigen::VectorXi, Vector>> enumerate_in_ball(const Matrix& basis,
                                                                  double radius, bool half = false,
                                                                  std::int64_t budget = 10'000'000);

enum class Boundary { Strict, Closed };

// All lattice points x with lo_i < x_i < hi_i (strict; Closed uses <=),
// returned sorted lexicographically by integer coordinates.
std::vector<Vector> enumerate_points_in_box(const AffineLattice& L, const Vector& lo,
                                            const Vector& hi,
                                            Boundary boundary = Boundary::Strict,
                                            std::int64_t budget = 50'000'000);

// Same enumeration but invokes `visit(point)` without materializing the list;
// used by the Siegel transform hot path.
void visit_points_in_box(const AffineLattice& L, const Vector& lo, const Vector& hi,
                         Boundary boundary, std::int64_t budget,
                         const std::function<void(const Vector&)>& visit);

}  // namespace diolab
