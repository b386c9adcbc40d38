#pragma once

#include <functional>
#include <vector>

namespace grunwald {

// Uniform grid on [-1,1] with n+1 cells of width h = 2/(n+1), indexed 1..n+1.
// The first n cells are half open to the right; the last one is closed.
struct Grid {
    int n;
    double h;

    explicit Grid(int n_);
    int size() const { return n + 1; }
};

// Cell number iota in 1..n+1 and intra-cell position lambda.
// lambda lies in [0,1) everywhere except lambda(1) = 1.
struct GridIndex {
    int iota;
    double lambda;
};

// Cell assignment with deterministic boundary handling: a point within
// 1e-12*h of a cell boundary is assigned lambda = 0 in the cell whose left
// edge it sits on, so -1 + (iota-1+lambda)h reproduces x up to the snap.
GridIndex grid_index(const Grid& g, double x);

// Component j (1-based) is f((lambda + j - 1)h - 1), j = 1..n+1.
std::vector<double> project(const Grid& g, const std::function<double(double)>& f, double lambda);

// Value of the piecewise-constant embedding of v at x, i.e. v[iota(x)].
double embed(const Grid& g, const std::vector<double>& v, double x);

// Samples of a function on one lambda fiber {(lambda + j - 1)h - 1 : j = 1..n+1}.
struct GridFunction {
    int n = 0;
    double h = 0;
    double lambda = 0;
    std::vector<double> values;

    double x_at(int j) const { return (lambda + j - 1) * h - 1; }  // 1-based
};

GridFunction sample(const Grid& g, const std::function<double(double)>& f, double lambda);

} // namespace grunwald
