#include "grunwald/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace grunwald {

Grid::Grid(int n_) : n(n_), h(2.0 / (n_ + 1)) {
    if (n_ < 3) throw std::invalid_argument("Grid: n must be >= 3");
}

GridIndex grid_index(const Grid& g, double x) {
    const double tol = 1e-12;
    double u = (x + 1) / g.h;
    if (u < -tol || u > g.n + 1 + tol)
        throw std::domain_error("grid_index: x outside [-1,1]");
    u = std::clamp(u, 0.0, static_cast<double>(g.n + 1));
    double m = std::round(u);
    if (std::fabs(u - m) <= tol) {
        int mi = static_cast<int>(m);
        if (mi >= g.n + 1) return {g.n + 1, 1.0};
        return {mi + 1, 0.0};
    }
    int iota = static_cast<int>(std::floor(u)) + 1;
    return {iota, u - (iota - 1)};
}

std::vector<double> project(const Grid& g, const std::function<double(double)>& f, double lambda) {
    std::vector<double> v(g.n + 1);
    for (int j = 1; j <= g.n + 1; ++j) {
        double x = std::clamp((lambda + j - 1) * g.h - 1, -1.0, 1.0);
        v[j - 1] = f(x);
    }
    return v;
}

double embed(const Grid& g, const std::vector<double>& v, double x) {
    if (static_cast<int>(v.size()) != g.n + 1)
        throw std::invalid_argument("embed: vector length must be n+1");
    return v[grid_index(g, x).iota - 1];
}

GridFunction sample(const Grid& g, const std::function<double(double)>& f, double lambda) {
    return {g.n, g.h, lambda, project(g, f, lambda)};
}

} // namespace grunwald
