#pragma once

#include <cstdint>
#include <vector>

#include "diolab/lattice.hpp"

namespace diolab {

// The problem data of the weighted inhomogeneous approximation system.
struct DioInstance {
    int m = 1;
    int n = 1;
    std::vector<double> vartheta;  // m positive reals
    Weights weights;               // CLT-mode weights
    std::vector<double> xi;        // m-vector shift
    Boundary boundary = Boundary::Strict;

    DioInstance() = default;
    DioInstance(int m_, int n_, std::vector<double> vartheta_, Weights weights_,
                std::vector<double> xi_, Boundary boundary_ = Boundary::Strict);

    int dim() const { return m + n; }
};

enum class TestFunctionKind { BoxIndicatorChi, SmoothedBoxFeps, RadialOfLambda1 };

// Descriptor of the test function f on R^{m+n}: the indicator chi of the
// fundamental shell region, its smoothed majorant f_eps, or a radial probe of
// the shortest vector.
struct TestFunction {
    TestFunctionKind kind = TestFunctionKind::BoxIndicatorChi;
    DioInstance instance;   // carries vartheta / weights defining the region
    double eps = 0.0;       // smoothing width for SmoothedBoxFeps
    double radius_lo = 0.0; // RadialOfLambda1 support [radius_lo, radius_hi]
    double radius_hi = 0.0;

    static TestFunction chi(const DioInstance& inst);
    static TestFunction smoothed(const DioInstance& inst, double eps);

    double evaluate(const Vector& point) const;
    // Exact integral for chi; high-accuracy radial quadrature for f_eps.
    double integral() const;
    // Axis-aligned bounding box of the support.
    void support_box(Vector& lo, Vector& hi) const;
};

struct TruncationSpec {
    double L = 1.0;  // cutoff level, >= 1
    double c = 2.0;  // transition width constant, > 1

    TruncationSpec() = default;
    TruncationSpec(double L_, double c_);
};

// Per-shell counts S_s = chi^(b^s Lambda_{theta,xi}) and their total.
struct CountSeries {
    ShiftMatrix theta;
    std::vector<std::int64_t> per_shell;
    std::int64_t total = 0;
    int N = 0;
};

// C^infty monotone ramp: 0 on (-inf,0], 1 on [1,infty) (degree-7 spline).
double smooth_ramp(double t);
// Cutoff eta_L(alpha): 1 on {alpha <= L/c}, 0 on {alpha >= c L}.
double eta_cutoff(double alpha, const TruncationSpec& trunc);

// Number of solutions (p,q), 1 <= ||q|| <= T, with the x-inequalities taken
// per the instance's boundary flag; p counted by interval arithmetic.
std::int64_t count_solutions_bruteforce(const DioInstance& instance, const ShiftMatrix& theta,
                                        double T, std::int64_t budget = 100'000'000);

// Shell decomposition counts over s = 0..N-1 with half-open shells
// e^s <= ||q|| < e^{s+1} and strict x-inequalities.
CountSeries count_solutions_shells(const DioInstance& instance, const ShiftMatrix& theta, int N,
                                   std::int64_t budget = 100'000'000);

// Sum of f over the points of L.
double siegel_transform(const TestFunction& f, const AffineLattice& L,
                        std::int64_t budget = 50'000'000);

// f^(Lambda) * eta_L(alpha(Lambda)).
double truncated_siegel(const TestFunction& f, const AffineLattice& L,
                        const TruncationSpec& trunc, std::int64_t budget = 50'000'000);

// mu_{Y_xi}(chi^ o b^s) = 2^m prod(vartheta) * sum over the shell of ||q||^-n;
// independent of theta and xi.
double mean_shell(const DioInstance& instance, int s);

// omega_n under the sup norm; closed form n 2^n.
double omega_n(int n);

// C_{m,n} = sigma^2_{m,n} = 2^m prod(vartheta) omega_n.
double variance_sigma2(const DioInstance& instance);

// vol(Omega_e cap b^-s Omega_e): 0 for s >= 1; s = 0 computed by radial
// quadrature of the shell volume (independent route from variance_sigma2).
double theta_infty(const DioInstance& instance, int s);

struct NormalizedStatistic {
    double theorem_form = 0.0;   // (Delta - C N) / sqrt(N)
    double birkhoff_form = 0.0;  // (1/sqrt(N)) sum_s (S_s - mean_shell(s))
};

NormalizedStatistic normalized_statistic(const CountSeries& series, const DioInstance& instance);

}  // namespace diolab
