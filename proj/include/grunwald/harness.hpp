#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "grunwald/boundary.hpp"
#include "grunwald/coeffs.hpp"
#include "grunwald/grid.hpp"
#include "grunwald/operators.hpp"
#include "grunwald/symbol.hpp"

namespace grunwald {

// Interpolated discrete scale kernel of order index built from one
// coefficient table. The minus side evaluates the kernel at -x with the
// sup-norm interpolation weights, the plus side at x with the 1-norm
// weights; order -1 exists on the plus side only. With canonical set, the
// kernel argument may run one cell past 1 (zero beyond 1+h), which the
// difference identities across the top edge need; the table then must hold
// one extra order.
class ThetaFunction {
public:
    ThetaFunction(int index, Side side, const Grid& grid, const CoefficientTable& table,
                  bool canonical = false);

    int index() const { return index_; }
    Side side() const { return side_; }
    const Grid& grid() const { return grid_; }
    // Interpolation weight: identically 1 for order 1 on the plus side,
    // a [0,1]-valued rational in lambda for order -1, lambda otherwise.
    double theta(double lambda) const;
    int tau() const { return index_ == 1 ? 1 : 0; }
    double operator()(double x) const;

private:
    double kernel(double y) const;

    int index_;
    Side side_;
    Grid grid_;
    bool canonical_;
    std::vector<double> gk_;
    double g0_ = 0;   // gpsi_0
    double g1_ = 0;   // gpsi_1
    double rho_ = 0;  // h * gpsi_0 * gk^{(-1)}_1 > 0, order -1 weight denominator
};

// One-off kernel evaluation without the canonical extension.
double vartheta(int index, Side side, const Grid& grid, const CoefficientTable& table, double x);

// Flat plus-side kernel: 1 away from the first cell, lambda inside it,
// zero below -1.
double vartheta_zero(const Grid& grid, double x);

// Smooth test-function shapes: a compactly supported interior bump, the
// bump plus a smooth step up to a right plateau, and a ramp with nonzero
// left value cut off smoothly before the right endpoint.
enum class BumpKind { interior_bump, right_plateau, full_smooth };

// Geometry of the test functions. The exp bump occupies
// [center - radius, center + radius]; right_plateau adds plateau times a
// smooth step rising over [rise_start, rise_end]; full_smooth multiplies a
// linear ramp anchored at left_value by a smooth cutoff falling over
// [fall_start, fall_end] and keeps the bump.
struct BumpParams {
    double center = 0;
    double radius = 0.5;
    double height = 1;
    double plateau = 1;
    double left_value = 1;
    double rise_start = 0.55;
    double rise_end = 0.9;
    double fall_start = 0.2;
    double fall_end = 0.7;
    double step = 2.0 / 8192;
};

// Tabulates the requested shape on [-1,1] with exact derivative samples.
// Throws when the parameters push support outside what the kind promises
// (bump touching an endpoint, degenerate step or cutoff region).
SampledFunction bump_g(BumpKind kind, const BumpParams& p = {});

// Test-function class the approximation construction of the case demands.
BumpKind default_bump_kind(BoundaryCase bc, Side direction);

// Grid-independent ingredients of the f_h constructions: nonlocal integrals
// of g, the boundary constants, and the scale-function values they divide
// by. Computed once per study at a resolution serving the finest ladder
// step and shared across the ladder. tol is the sup accuracy floor of the
// cached quadratures; error measurements below it are noise.
struct ReferenceBundle {
    Side direction = Side::minus;
    ScaleGrid scale;
    SampledFunction Ig;       // I^psi_side g
    SampledFunction Ig_flat;  // I^psi_minus [g - g(1)]; equals Ig when g(1) = 0
    double plain = 0;         // integral of g over [-1,1]
    double foc = 0;           // F_minus[g](-1); invariant under constant shifts of g
    double dIg = 0;           // d/dx I^psi_minus g at -1; needs derivative samples
    double k0_top = 0;        // k_0^+(1) = k_0^-(-1)
    double k1_top = 0;        // k_1^+(1) = k_1^-(-1)
    double tol = 1e-6;
};

// min_h is the smallest grid step the bundle will serve; the internal
// lattice step is min_h/4, so every power-of-two refinement of min_h lands
// its fibers on lattice points.
ReferenceBundle make_reference_bundle(const SampledFunction& g, Side direction,
                                      const LevySymbol& sym, double min_h);

// f_h for one case and direction, its construction constants, and the
// limit G f it approximates as h -> 0. The closures keep their data alive
// except for an externally supplied ReferenceBundle, which must outlive
// them.
struct TestFunction {
    BoundaryCase bc = BoundaryCase::DD;
    Side direction = Side::minus;
    std::function<double(double)> fh;
    std::function<double(double)> limit;
    double b = 0;  // coefficient of the theta term
    double c = 0;  // additive constant of the conservative rows
    double d = 0;  // first-cell edge constant of the backward ND/NN rows
    std::vector<std::string> warnings;
};

// Assembles f_h for the case from the bundle (computed on the spot when
// refs is null) and returns it with the limit the construction converges
// to. free_constant feeds the rows that admit an arbitrary additive
// constant; it never changes the limit. Throws when g visibly leaves the
// class the case demands; a symbol without the extra smoothness hypothesis
// only degrades the cases that need it to a warning.
TestFunction build_fh(BoundaryCase bc, Side direction, const SampledFunction& g, const Grid& grid,
                      const CoefficientTable& table, const LevySymbol& sym,
                      const ReferenceBundle* refs = nullptr, double free_constant = 0.5);

enum class StudyNorm { sup, one };

struct StudyRow {
    int n = 0;
    double h = 0;
    double error = 0;
};

// Ladder must hold at least four strictly increasing n, each cell count
// n+1 a power-of-two multiple of the previous one.
struct StudyConfig {
    BoundaryCase bc = BoundaryCase::DD;
    Side direction = Side::minus;
    LevySymbol sym = LevySymbol::stable(1.5);
    std::vector<int> ladder;
    std::optional<StudyNorm> norm;  // default: sup backward, 1-norm forward
    std::optional<BumpKind> kind;   // default: default_bump_kind
    BumpParams bump;
    double free_constant = 0.5;
};

struct StudyResult {
    BoundaryCase bc = BoundaryCase::DD;
    Side direction = Side::minus;
    std::string symbol;
    StudyNorm norm = StudyNorm::sup;
    std::string rate;            // predicted rate formula, as printed
    double predicted_slope = 0;  // least-squares slope of the rate on the ladder
    double fitted_slope = 0;     // least-squares slope of the measured errors
    double reference_tol = 1e-6;
    bool monotone = true;
    std::vector<StudyRow> rows;
    std::vector<std::string> warnings;
};

// Predicted error rate w(h) of the case as a printable formula.
std::string predicted_rate(BoundaryCase bc, Side direction);

// Slope of log w(h) against log h fitted over the ladder steps; for the
// pure-power rates this is exact.
double predicted_slope(BoundaryCase bc, Side direction, const LevySymbol& sym,
                       const std::vector<int>& ladder);

// Measures ||G_h f_h - G f|| per ladder entry (parallel across entries):
// sup norm over ten offsets per cell, 1-norm by cell-midpoint quadrature.
// A non-monotone error sequence is reported as a warning, not a failure.
StudyResult convergence_study(const StudyConfig& cfg);

// One metadata comment line, a header row, then one row per ladder entry:
// case,direction,n,h,norm,error,predicted_rate,fitted_slope.
void write_csv(const StudyResult& r, std::ostream& os);

} // namespace grunwald
