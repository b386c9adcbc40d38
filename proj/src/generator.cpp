#include "grunwald/generator.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

namespace grunwald {

double BoundaryWeights::Dl(double lambda) const {
    if (!left_is_dirichlet(bc)) return 1.0;
    return lambda * dk / (lambda * dk + (1 - lambda));
}

double BoundaryWeights::Nl(double lambda) const {
    return left_is_dirichlet(bc) ? 1.0 : lambda;
}

double BoundaryWeights::Dr(double lambda) const {
    if (!right_is_dirichlet(bc)) return 1.0;
    return (1 - lambda) * dk / ((1 - lambda) * dk + lambda);
}

double BoundaryWeights::Nr(double lambda) const {
    return right_is_dirichlet(bc) ? 1.0 : 1 - lambda;
}

double BoundaryWeights::entry(double lambda, int i, int j) const {
    const double lb = 1 - lambda;
    if (i == 1) {
        if (j == 1) return bl[1];
        if (j <= n - 1) return Dl(lambda) * bl[j];
        if (j == n) return Dl(lambda) * bn;
        return 0.0;
    }
    if (i == 2) {
        if (j == 1) return Nl(lambda) * gpsi[0];
        if (j <= n - 1) return lambda * gpsi[j - 1] + lb * bl[j - 1];
        if (j == n) return lambda * br[n - 1] + lb * bl[n - 1];
        return Nr(lambda) * bn;
    }
    if (i <= n) {
        if (j < i - 1) return 0.0;
        if (j <= n - 1) return gpsi[j - i + 1];
        if (j == n) return lambda * br[n + 1 - i] + lb * gpsi[n + 1 - i];
        return Nr(lambda) * br[n + 2 - i];
    }
    if (j == n) return Dr(lambda) * gpsi[0];
    if (j == n + 1) return br[1];
    return 0.0;
}

BoundaryWeights boundary_weights(BoundaryCase bc, const CoefficientTable& table, int n) {
    if (n < 3) throw std::invalid_argument("boundary_weights: n must be >= 3");
    if (n + 1 > table.N)
        throw std::invalid_argument("boundary_weights: table truncated, need table.N >= n+1");
    BoundaryWeights w;
    w.bc = bc;
    w.n = n;
    w.h = table.h;
    const auto& gp = table.gpsi;
    w.gpsi.assign(gp.begin(), gp.begin() + n + 1);
    w.dk = gp[0] * table.gk.at(0)[1];
    w.bl.assign(n + 1, 0.0);
    if (left_is_dirichlet(bc)) {
        for (int i = 0; i <= n; ++i) w.bl[i] = gp[i];
    } else if (left_is_nstar(bc)) {
        w.bl[1] = gp[0] + gp[1];
        for (int i = 2; i <= n; ++i) w.bl[i] = gp[i];
    } else {
        long double acc = 0;
        for (int i = 1; i <= n; ++i) {
            acc += gp[i - 1];
            w.bl[i] = static_cast<double>(-acc);
        }
    }
    w.br.assign(n + 1, 0.0);
    if (right_is_dirichlet(bc)) {
        for (int i = 0; i <= n; ++i) w.br[i] = gp[i];
        w.bn = w.bl[n];
    } else {
        long double acc = 0;
        for (int i = 1; i <= n; ++i) {
            acc += gp[i - 1];
            w.br[i] = static_cast<double>(-acc);
        }
        long double s = 0;
        for (int i = 0; i <= n - 1; ++i) s += w.bl[i];
        w.bn = static_cast<double>(-s);
    }
    return w;
}

InterpolationMatrix interpolation_matrix(BoundaryCase bc, const CoefficientTable& table, int n,
                                         double lambda) {
    if (!(lambda >= 0 && lambda <= 1))
        throw std::domain_error("interpolation_matrix: lambda must lie in [0,1]");
    auto w = boundary_weights(bc, table, n);
    InterpolationMatrix m;
    m.bc = bc;
    m.n = n;
    m.lambda = lambda;
    m.entries.resize(static_cast<std::size_t>(n + 1) * (n + 1));
    for (int i = 1; i <= n + 1; ++i)
        for (int j = 1; j <= n + 1; ++j)
            m.entries[static_cast<std::size_t>(i - 1) * (n + 1) + (j - 1)] =
                w.entry(lambda, i, j);
    const double tol = 1e-12 / table.h;
    for (int i = 1; i <= n + 1; ++i) {
        long double row_sum = 0;
        for (int j = 1; j <= n + 1; ++j) {
            const double v = m.at(i, j);
            row_sum += v;
            if (j != i && v < -tol) {
                std::ostringstream os;
                os << "rate matrix violation for " << to_string(bc) << ": off-diagonal entry ("
                   << i << "," << j << ") = " << v << " at lambda=" << lambda;
                throw RateMatrixViolation(os.str());
            }
        }
        if (row_sum > tol) {
            std::ostringstream os;
            os << "rate matrix violation for " << to_string(bc) << ": row " << i
               << " sums to " << static_cast<double>(row_sum) << " at lambda=" << lambda;
            throw RateMatrixViolation(os.str());
        }
    }
    return m;
}

void write_csv(const InterpolationMatrix& m, std::ostream& os) {
    os.precision(17);
    os << "# case=" << to_string(m.bc) << ",n=" << m.n << ",lambda=" << m.lambda << "\n";
    for (int i = 1; i <= m.n + 1; ++i) {
        for (int j = 1; j <= m.n + 1; ++j) os << (j > 1 ? "," : "") << m.at(i, j);
        os << "\n";
    }
}

double apply_backward(BoundaryCase bc, const CoefficientTable& table, const Grid& grid,
                      const std::function<double(double)>& f, double x) {
    const auto gi = grid_index(grid, x);
    const auto w = boundary_weights(bc, table, grid.n);
    const auto v = project(grid, f, gi.lambda);
    const int j0 = gi.iota <= 2 ? 1 : gi.iota - 1;
    long double acc = 0;
    for (int j = j0; j <= grid.n + 1; ++j)
        acc += static_cast<long double>(w.entry(gi.lambda, gi.iota, j)) * v[j - 1];
    return static_cast<double>(acc);
}

double apply_forward(BoundaryCase bc, const CoefficientTable& table, const Grid& grid,
                     const std::function<double(double)>& f, double x) {
    const auto gi = grid_index(grid, x);
    const auto w = boundary_weights(bc, table, grid.n);
    const auto v = project(grid, f, gi.lambda);
    long double acc = 0;
    for (int i = 1; i <= grid.n + 1; ++i)
        acc += static_cast<long double>(w.entry(gi.lambda, i, gi.iota)) * v[i - 1];
    return static_cast<double>(acc);
}

} // namespace grunwald
