#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "diolab/lattice.hpp"

namespace diolab {

// Element of wedge^i R^{d+1} under the splitting
// wedge^i R^{d+1} = wedge^i R^d (+) (wedge^{i-1} R^d ^ e_{d+1}).
// Coefficients are stored over lexicographically ordered index subsets.
struct MonomialVector {
    int ambient = 0;  // d + 1
    int degree = 0;   // i in [1, d]
    std::vector<double> pure_part;   // C(d, i) coefficients
    std::vector<double> wedge_part;  // C(d, i-1) coefficients

    MonomialVector(int ambient_, int degree_, std::vector<double> pure,
                   std::vector<double> wedge);
};

// Weight bookkeeping for the Shi height: delta_i = (d+1-i)i and
// delta_{eta_k} = sum_{j<=k, j<=m} w_j - sum_{m<j<=k} w_j.
struct ShiWeightData {
    int d = 0;
    Weights weights;
    std::vector<double> delta_i;    // i = 1..d    (index i-1)
    std::vector<double> delta_eta;  // k = 1..d-1  (index k-1)
    double eps0 = 0.1;

    ShiWeightData(const Weights& w, double eps0_);
};

// Kim's Diophantine scale: first N with min_{1<=q<=N} ||q v||_Z <= N^2 / T.
std::int64_t zeta_kim(const Vector& v, double T);

struct LiouvilleWitness {
    Eigen::VectorXi p;
    std::int64_t q = 0;
    double distance = 0.0;
};

// A pair with ||v - p/q||_sup < q^{-E}, 2 <= q <= Qmax, if one exists in
// range (q = 1 is excluded as trivially admissible).  Absence proves nothing
// about non-Liouville status.
std::optional<LiouvilleWitness> liouville_witness(const Vector& v, double E, std::int64_t Qmax);

// Nonzero lattice vector (x, y) with ||x||_sup <= A and |y| <= B, if any.
std::optional<Vector> has_vector_in_cylinder(const Matrix& basis, double A, double B,
                                             std::int64_t budget = 10'000'000);

double phi_epsilon(const MonomialVector& v, const ShiWeightData& weights);

struct AlphaEpsResult {
    double value = 0.0;
    bool certified = false;  // doubling the radius left the value unchanged
};

// Max of phi_epsilon over monomials of lattice vectors of sup-norm <= radius.
// Always a lower bound for the true alpha_epsilon.
AlphaEpsResult alpha_epsilon(const Matrix& basis, const ShiWeightData& weights, double radius,
                             std::int64_t budget = 10'000'000);

}  // namespace diolab
