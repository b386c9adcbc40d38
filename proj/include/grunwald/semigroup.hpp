#pragma once

#include "grunwald/coeffs.hpp"
#include "grunwald/generator.hpp"
#include "grunwald/grid.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace grunwald {

enum class Direction { backward, forward };

// Initial data is either an evaluable function, sampled per query fiber, or
// one pre-sampled fiber shared by all query points.
struct EvolutionRequest {
    BoundaryCase bc = BoundaryCase::DD;
    Direction direction = Direction::backward;
    Grid grid{3};
    std::function<double(double)> f;
    std::optional<GridFunction> fiber;
    double t = 0;
    std::vector<double> query;
};

// u(t, x) = [exp(t M(lambda(x))) Pi f]_{iota(x)} with M the interpolation
// matrix of the case (transposed for the forward direction). Query points
// sharing a fiber are grouped and each fiber pays one exponential, computed
// by uniformization: q = max |diagonal|, P = I + M/q, and
// sum_k Poisson(qt; k) P^k v accumulated until the Poisson tail is below
// 1e-14. Fibers run through parallel_for. Throws when q*t > 1e7; split the
// interval and evolve stepwise in that regime.
std::vector<double> evolve(const EvolutionRequest& req, const CoefficientTable& table);

// Solves (beta - M(0)) u = Pi g on the grid-point fiber by dense LU and
// verifies the solve residual. beta must be positive; the system is then
// strictly diagonally dominant up to the rate-matrix defect and a failed
// residual check reports a singular system.
GridFunction resolvent_solve(BoundaryCase bc, Direction direction, const CoefficientTable& table,
                             const Grid& g, const std::function<double(double)>& rhs, double beta);

// |<exp(tM)f, g> - <f, exp(tM^T)g>| on the lambda = 0 fiber: the discrete
// form of the backward/forward adjoint relation, zero up to rounding.
double duality_check(BoundaryCase bc, const CoefficientTable& table, const Grid& g,
                     const std::function<double(double)>& f,
                     const std::function<double(double)>& g2, double t);

} // namespace grunwald
