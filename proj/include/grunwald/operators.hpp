#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "grunwald/boundary.hpp"
#include "grunwald/coeffs.hpp"
#include "grunwald/symbol.hpp"

namespace grunwald {

// Uniformly sampled function with linear interpolation between samples and
// zero extension outside [a,b]. Derivative samples are optional and only
// present when the producer knows them exactly.
struct SampledFunction {
    double a = -1;
    double b = 1;
    double step = 0;
    std::vector<double> values;
    std::vector<double> derivs;

    static SampledFunction tabulate(const std::function<double(double)>& f, double a, double b,
                                    double step);
    static SampledFunction tabulate(const std::function<double(double)>& f,
                                    const std::function<double(double)>& df, double a, double b,
                                    double step);

    std::size_t size() const { return values.size(); }
    double x_at(std::size_t i) const { return a + static_cast<double>(i) * step; }
    bool has_derivative() const { return !derivs.empty(); }
    double operator()(double x) const;
    double derivative(double x) const;
    double sup_norm() const;
};

void write_csv(const SampledFunction& f, std::ostream& os);

// Lattice of k_0 and k_1 on [-1,1] at step h, built from one coefficient
// table (two with Richardson refinement, halving the step once). p0 is the
// fitted local exponent of k_0 at the left endpoint, used by quadratures to
// integrate the first cell analytically.
struct ScaleGrid {
    double h = 0;
    std::vector<double> k0;
    std::vector<double> k1;
    double p0 = 1;

    int n_cells() const { return static_cast<int>(k0.size()) - 1; }
    // k_i^+ at x in [-1,1]; linear interpolation, power law in the first cell.
    double at(int index, double x) const;
};

ScaleGrid scale_function_grid(const LevySymbol& sym, double fine_step, bool richardson = true);

// Post-Widder evaluation (m/(x+1)) * G^{k_i}_{m,(x+1)/m} of k_i^+(x).
// Converges O(1/m); i = -1 close to -1 is singular and appends a warning.
double post_widder_k(const LevySymbol& sym, int i, double x, int m,
                     std::vector<std::string>* warnings = nullptr);

// Pointwise scale function k_i^{side} evaluated through post_widder_k.
struct ScaleFunction {
    LevySymbol sym;
    int index;
    int order;
    Side side;

    double operator()(double x) const;
};

// I^psi_{side} g on [-1,1]: composite quadrature of the k_0 convolution on
// the grid lattice, exactly zero at the side's entry endpoint. study_h > 0
// enforces the resolution contract fine_step <= study_h/4.
SampledFunction nonlocal_integral(const SampledFunction& g, Side side, const ScaleGrid& grid,
                                  double study_h = 0);
SampledFunction nonlocal_integral(const SampledFunction& g, Side side, const LevySymbol& sym,
                                  double fine_step, double study_h = 0);

// Plain one-sided integral: side plus integrates from -1 to x, side minus
// from x to 1.
SampledFunction plain_integral(const SampledFunction& g, Side side);

enum class ConvVariant { psi, psi_m1 };

// Grunwald convolution quadrature with the table's step: variant psi is
// sum_j G^psi_j g(x -+ (j - [shifted])h), variant psi_m1 is
// sum_j G^{psi-1}_j g(x -+ jh) and rejects the shifted flag.
SampledFunction conv_quadrature(const SampledFunction& g, const CoefficientTable& table, Side side,
                                ConvVariant variant, bool shifted);

// F_{side}[g](x) = -(1/2)([y levy_tail(y)] * k_{-1} * g')(x): the inner
// convolution runs as a Stieltjes sum against dk_0 on a mesh graded toward
// the tail singularity, the outer one by trapezoid against g'; both refine
// until the requested tolerance is met.
double first_order_correction(const SampledFunction& g, const LevySymbol& sym, Side side, double x,
                              double tol = 1e-4);
double first_order_correction(const SampledFunction& g, const LevySymbol& sym,
                              const ScaleGrid& grid, Side side, double x, double tol = 1e-4);

struct MlDiagnostics {
    int terms = 0;
    double last_term_norm = 0;
    double tail_bound = 0;
};

// E^{psi,beta}_{side} g = sum_n beta^n (I^psi)^n g, stopping when a term's
// sup norm falls below 1e-14 of the accumulated norm; the factorial bound
// from k_0's sup certifies the dropped tail.
SampledFunction mittag_leffler_apply(const SampledFunction& g, double beta, Side side,
                                     const ScaleGrid& grid, int n_terms = 200,
                                     MlDiagnostics* diag = nullptr);
SampledFunction mittag_leffler_apply(const SampledFunction& g, double beta, Side side,
                                     const LevySymbol& sym, int n_terms = 200,
                                     MlDiagnostics* diag = nullptr);

// Backward-direction resolvent (beta - G)^{-1} g for the six boundary
// cases, assembled from Mittag-Leffler applies and the case's boundary
// constant. NN and N*N reject beta <= 1e-8 (singular small-beta constant).
SampledFunction resolvent_reference(const SampledFunction& g, double beta, BoundaryCase bc,
                                    const LevySymbol& sym, double fine_step = 2e-4);

// Same resolvent for the N*D case through the beta-scale function W^{(beta)}
// directly; kept as an independent assembly route for cross-checking.
SampledFunction resolvent_nstar_dual(const SampledFunction& g, double beta, const LevySymbol& sym,
                                     double fine_step = 2e-4);

} // namespace grunwald
