#include "grunwald/semigroup.hpp"

#include "grunwald/threads.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace grunwald {

namespace {

Eigen::MatrixXd fiber_matrix(BoundaryCase bc, const CoefficientTable& table, int n, double lambda,
                             Direction direction) {
    const auto im = interpolation_matrix(bc, table, n, lambda);
    Eigen::MatrixXd m(n + 1, n + 1);
    for (int i = 1; i <= n + 1; ++i)
        for (int j = 1; j <= n + 1; ++j) m(i - 1, j - 1) = im.at(i, j);
    if (direction == Direction::forward) m.transposeInPlace();
    return m;
}

// exp(tA)v for a rate matrix A. Poisson weights are carried in log space so
// large qt never underflows the accumulation; the small-weight head and tail
// contribute nothing and cost one exp each.
Eigen::VectorXd uniformized_exp(const Eigen::MatrixXd& a, Eigen::VectorXd v, double t) {
    const int m = static_cast<int>(a.rows());
    double q = 0;
    for (int i = 0; i < m; ++i) q = std::max(q, std::fabs(a(i, i)));
    const double qt = q * t;
    if (qt > 1e7) {
        std::ostringstream os;
        os << "evolve: q*t = " << qt << " exceeds 1e7; split the horizon into sub-steps";
        throw std::runtime_error(os.str());
    }
    if (t == 0 || q == 0) return v;

    Eigen::MatrixXd p = a / q;
    p.diagonal().array() += 1.0;

    Eigen::VectorXd acc = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd term = std::move(v);
    const double log_qt = std::log(qt);
    double logw = -qt;
    for (long k = 0;; ++k) {
        if (k > 0) {
            term = p * term;
            logw += log_qt - std::log(static_cast<double>(k));
        }
        const double w = std::exp(logw);
        if (w > 0) acc += w * term;
        // past the mode the weights decay geometrically with ratio
        // qt/(k+1) < 1, so the remaining Poisson mass is bounded by
        // w * r/(1-r); this bound is exact arithmetic, not an accumulated
        // sum, and therefore reaches 1e-14 reliably
        if (k + 1 > qt) {
            const double r = qt / (k + 1);
            if (w * r / (1 - r) < 1e-14) break;
        }
        if (k > 30000000L) throw std::runtime_error("evolve: uniformization failed to converge");
    }
    return acc;
}

} // namespace

std::vector<double> evolve(const EvolutionRequest& req, const CoefficientTable& table) {
    if (!(req.t >= 0) || !std::isfinite(req.t))
        throw std::invalid_argument("evolve: t must be finite and nonnegative");
    if (!req.fiber && !req.f) throw std::invalid_argument("evolve: initial data missing");

    const Grid& g = req.grid;
    struct Point {
        int iota;
        double lambda;
        std::size_t slot;
    };
    std::vector<Point> pts;
    pts.reserve(req.query.size());
    for (std::size_t s = 0; s < req.query.size(); ++s) {
        const double x = req.query[s];
        if (!(x >= -1 && x <= 1)) throw std::domain_error("evolve: query point outside [-1,1]");
        const auto gi = grid_index(g, x);
        pts.push_back({gi.iota, gi.lambda, s});
    }

    if (req.fiber) {
        if (req.fiber->n != g.n || static_cast<int>(req.fiber->values.size()) != g.n + 1)
            throw std::invalid_argument("evolve: fiber data does not match the grid");
        for (const auto& p : pts)
            if (std::fabs(p.lambda - req.fiber->lambda) > 1e-9)
                throw std::invalid_argument("evolve: query point off the supplied fiber");
    }

    // fibers: contiguous lambda clusters after sorting
    std::sort(pts.begin(), pts.end(),
              [](const Point& l, const Point& r) { return l.lambda < r.lambda; });
    std::vector<std::pair<std::size_t, std::size_t>> groups;
    for (std::size_t i = 0; i < pts.size();) {
        std::size_t j = i + 1;
        while (j < pts.size() && pts[j].lambda - pts[j - 1].lambda < 1e-12) ++j;
        groups.emplace_back(i, j);
        i = j;
    }

    std::vector<double> out(req.query.size(), 0.0);
    parallel_for(groups.size(), [&](std::size_t gi) {
        const auto [lo, hi] = groups[gi];
        const double lambda = req.fiber ? req.fiber->lambda : pts[lo].lambda;
        const auto m = fiber_matrix(req.bc, table, g.n, lambda, req.direction);
        Eigen::VectorXd v(g.n + 1);
        if (req.fiber) {
            for (int j = 0; j <= g.n; ++j) v(j) = req.fiber->values[j];
        } else {
            const auto pv = project(g, req.f, lambda);
            for (int j = 0; j <= g.n; ++j) v(j) = pv[j];
        }
        const auto w = uniformized_exp(m, std::move(v), req.t);
        for (std::size_t k = lo; k < hi; ++k) out[pts[k].slot] = w(pts[k].iota - 1);
    });
    return out;
}

GridFunction resolvent_solve(BoundaryCase bc, Direction direction, const CoefficientTable& table,
                             const Grid& g, const std::function<double(double)>& rhs,
                             double beta) {
    if (!(beta > 0) || !std::isfinite(beta))
        throw std::invalid_argument("resolvent_solve: beta must be positive");
    if (!rhs) throw std::invalid_argument("resolvent_solve: rhs missing");

    Eigen::MatrixXd a = -fiber_matrix(bc, table, g.n, 0.0, direction);
    a.diagonal().array() += beta;
    const auto pb = project(g, rhs, 0.0);
    Eigen::VectorXd b(g.n + 1);
    for (int j = 0; j <= g.n; ++j) b(j) = pb[j];

    const Eigen::VectorXd u = a.partialPivLu().solve(b);
    const double scale =
        a.cwiseAbs().rowwise().sum().maxCoeff() * u.cwiseAbs().maxCoeff() + b.cwiseAbs().maxCoeff();
    const double resid = (a * u - b).cwiseAbs().maxCoeff();
    if (!(resid <= 1e-8 * scale))
        throw std::runtime_error("resolvent_solve: system is singular or ill-conditioned");

    GridFunction gf{g.n, g.h, 0.0, std::vector<double>(g.n + 1)};
    for (int j = 0; j <= g.n; ++j) gf.values[j] = u(j);
    return gf;
}

double duality_check(BoundaryCase bc, const CoefficientTable& table, const Grid& g,
                     const std::function<double(double)>& f,
                     const std::function<double(double)>& g2, double t) {
    if (!(t >= 0) || !std::isfinite(t))
        throw std::invalid_argument("duality_check: t must be finite and nonnegative");
    const auto m = fiber_matrix(bc, table, g.n, 0.0, Direction::backward);
    const auto pf = project(g, f, 0.0);
    const auto pg = project(g, g2, 0.0);
    Eigen::VectorXd vf(g.n + 1), vg(g.n + 1);
    for (int j = 0; j <= g.n; ++j) {
        vf(j) = pf[j];
        vg(j) = pg[j];
    }
    const double lhs = uniformized_exp(m, vf, t).dot(vg);
    const double rhs = uniformized_exp(m.transpose(), vg, t).dot(vf);
    return std::fabs(lhs - rhs);
}

} // namespace grunwald
