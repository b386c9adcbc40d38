#pragma once

#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "grunwald/boundary.hpp"
#include "grunwald/coeffs.hpp"
#include "grunwald/grid.hpp"

namespace grunwald {

struct RateMatrixViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Boundary weight bundle for one case: the modified first/last row and
// column entries of the finite-state rate matrix plus the interpolation
// factors. bl[i] and br[i] hold b_i^{l,r} for i = 0..n, with the index-0
// entries fixed by the zero-sum convention of the cumulative weights.
struct BoundaryWeights {
    BoundaryCase bc = BoundaryCase::DD;
    int n = 0;
    double h = 0;
    std::vector<double> bl, br;
    std::vector<double> gpsi;  // orders 0..n, the interior stencil
    double bn = 0;             // corner weight at entries (1,n) and (2,n+1)
    double dk = 0;             // gpsi_0 * gk0_1 = psi'(1/h)/(h psi(1/h))

    double Dl(double lambda) const;
    double Nl(double lambda) const;
    double Dr(double lambda) const;
    double Nr(double lambda) const;
    // Entry (i,j), 1-based, of the interpolated rate matrix at lambda.
    double entry(double lambda, int i, int j) const;
};

// Requires table.N >= n+1 and n >= 3 (below that the boundary rows overlap).
BoundaryWeights boundary_weights(BoundaryCase bc, const CoefficientTable& table, int n);

// Dense (n+1) x (n+1) interpolated rate matrix at a fixed intra-cell lambda.
// Row and column c correspond to grid cell c, counted from 1.
struct InterpolationMatrix {
    BoundaryCase bc = BoundaryCase::DD;
    int n = 0;
    double lambda = 0;
    std::vector<double> entries;  // row-major, (n+1)^2

    double at(int i, int j) const { return entries[(i - 1) * (n + 1) + (j - 1)]; }
};

// Assembles and validates the matrix: every off-diagonal entry must be
// >= -1e-12/h and every row sum <= 1e-12/h, else RateMatrixViolation names
// the offending entry or row.
InterpolationMatrix interpolation_matrix(BoundaryCase bc, const CoefficientTable& table, int n,
                                         double lambda);

// One metadata comment line, then n+1 rows of n+1 comma-separated entries.
void write_csv(const InterpolationMatrix& m, std::ostream& os);

// Backward generator: [G(lambda(x)) (project f)(lambda(x))]_{iota(x)}.
double apply_backward(BoundaryCase bc, const CoefficientTable& table, const Grid& grid,
                      const std::function<double(double)>& f, double x);

// Forward generator: the same contraction against the transposed matrix.
double apply_forward(BoundaryCase bc, const CoefficientTable& table, const Grid& grid,
                     const std::function<double(double)>& f, double x);

} // namespace grunwald
