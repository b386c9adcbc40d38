#include "grunwald/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace grunwald {

namespace {

double lattice_value(const std::vector<double>& v, double a, double step, double x) {
    if (v.empty()) return 0;
    const double b = a + step * static_cast<double>(v.size() - 1);
    if (x < a - 1e-12 * step || x > b + 1e-12 * step) return 0;
    double u = (x - a) / step;
    long j = std::lround(std::floor(u));
    j = std::clamp(j, 0L, static_cast<long>(v.size()) - 2);
    double t = u - static_cast<double>(j);
    t = std::clamp(t, 0.0, 1.0);
    return (1 - t) * v[j] + t * v[j + 1];
}

std::vector<double> reversed(std::vector<double> v) {
    std::reverse(v.begin(), v.end());
    return v;
}

// out[i] = int_0^{ih} K(y) q(x_i - y) dy for lattice functions K, q sharing
// step h, by trapezoid away from zero plus an analytic first cell that
// treats K like K[1]*(y/h)^p there. K[0] is ignored (kernels vanish at 0).
std::vector<double> kernel_conv(const std::vector<double>& K, double p,
                                const std::vector<double>& q, double h) {
    const std::size_t n = q.size();
    std::vector<double> out(n, 0.0);
    if (n == 0) return out;
    double mass0, eta;
    if (K.size() > 1 && K[1] > 0 && p > 0) {
        mass0 = K[1] * h / (p + 1);
        eta = (p + 1) / (p + 2);
    } else {
        mass0 = 0.5 * h * (K.size() > 1 ? K[1] : 0.0);
        eta = 0.5;
    }
    for (std::size_t i = 1; i < n; ++i) {
        double s = 0;
        for (std::size_t j = 2; j < i; ++j) s += K[j] * q[i - j];
        s *= h;
        if (i >= 2) s += 0.5 * h * (K[1] * q[i - 1] + K[i] * q[0]);
        s += mass0 * ((1 - eta) * q[i] + eta * q[i - 1]);
        out[i] = s;
    }
    return out;
}

std::vector<double> resample(const SampledFunction& g, double h, int N) {
    std::vector<double> v(N + 1);
    for (int j = 0; j <= N; ++j) v[j] = g(std::min(1.0, -1 + j * h));
    return v;
}

double vec_sup(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

double local_exponent(const std::vector<double>& k) {
    if (k.size() < 3 || !(k[1] > 0) || !(k[2] > 0)) return 1.0;
    return std::clamp(std::log(k[2] / k[1]) / std::log(2.0), 0.05, 3.0);
}

SampledFunction on_lattice(std::vector<double> v, double h) {
    SampledFunction f;
    f.a = -1;
    f.b = 1;
    f.step = h;
    f.values = std::move(v);
    return f;
}

} // namespace

SampledFunction SampledFunction::tabulate(const std::function<double(double)>& f, double a,
                                          double b, double step) {
    if (!(step > 0) || !(b > a)) throw std::invalid_argument("SampledFunction: bad lattice");
    SampledFunction out;
    out.a = a;
    out.b = b;
    out.step = step;
    const int n = static_cast<int>(std::lround((b - a) / step));
    out.step = (b - a) / n;
    out.values.resize(n + 1);
    for (int i = 0; i <= n; ++i) out.values[i] = f(a + i * out.step);
    return out;
}

SampledFunction SampledFunction::tabulate(const std::function<double(double)>& f,
                                          const std::function<double(double)>& df, double a,
                                          double b, double step) {
    SampledFunction out = tabulate(f, a, b, step);
    out.derivs.resize(out.values.size());
    for (std::size_t i = 0; i < out.derivs.size(); ++i) out.derivs[i] = df(out.x_at(i));
    return out;
}

double SampledFunction::operator()(double x) const { return lattice_value(values, a, step, x); }

double SampledFunction::derivative(double x) const {
    if (!has_derivative()) throw std::logic_error("SampledFunction: no derivative samples");
    return lattice_value(derivs, a, step, x);
}

double SampledFunction::sup_norm() const { return vec_sup(values); }

void write_csv(const SampledFunction& f, std::ostream& os) {
    os.precision(17);
    os << "# a=" << f.a << ",b=" << f.b << ",step=" << f.step << ",n=" << f.values.size() << "\n";
    os << "x,value\n";
    for (std::size_t i = 0; i < f.values.size(); ++i) os << f.x_at(i) << "," << f.values[i] << "\n";
}

double ScaleGrid::at(int index, double x) const {
    if (index != 0 && index != 1) throw std::domain_error("ScaleGrid: index must be 0 or 1");
    const auto& k = index == 0 ? k0 : k1;
    const int N = n_cells();
    double u = (x + 1) / h;
    if (u < -1e-9 || u > N + 1e-9) throw std::domain_error("ScaleGrid: x outside [-1,1]");
    u = std::clamp(u, 0.0, static_cast<double>(N));
    if (u <= 1.0) {
        double p = index == 0 ? p0 : p0 + 1;
        return k[1] * std::pow(u, p);
    }
    int j = std::min(static_cast<int>(std::floor(u)), N - 1);
    double t = u - j;
    return (1 - t) * k[j] + t * k[j + 1];
}

ScaleGrid scale_function_grid(const LevySymbol& sym, double fine_step, bool richardson) {
    if (!(fine_step > 0) || fine_step > 0.25)
        throw std::invalid_argument("scale_function_grid: fine_step must be in (0, 0.25]");
    const int N = std::max<int>(16, static_cast<int>(std::llround(2.0 / fine_step)));
    ScaleGrid grid;
    grid.h = 2.0 / N;
    auto gp = grunwald_psi(sym, grid.h, N);
    auto fam = grunwald_k_all(gp, grid.h, N);
    grid.k0.assign(N + 1, 0.0);
    grid.k1.assign(N + 1, 0.0);
    for (int j = 1; j <= N; ++j) {
        grid.k0[j] = fam[0][j] / grid.h;
        grid.k1[j] = fam[1][j] / grid.h;
    }
    if (richardson) {
        const double h2 = grid.h / 2;
        auto gp2 = grunwald_psi(sym, h2, 2 * N);
        auto fam2 = grunwald_k_all(gp2, h2, 2 * N);
        for (int j = 1; j <= N; ++j) {
            grid.k0[j] = 2 * fam2[0][2 * j] / h2 - grid.k0[j];
            grid.k1[j] = 2 * fam2[1][2 * j] / h2 - grid.k1[j];
        }
    }
    grid.p0 = local_exponent(grid.k0);
    return grid;
}

double post_widder_k(const LevySymbol& sym, int i, double x, int m,
                     std::vector<std::string>* warnings) {
    if (i < -1 || i > 1) throw std::domain_error("post_widder_k: i must be in {-1,0,1}");
    if (m < 4) throw std::domain_error("post_widder_k: m must be >= 4");
    if (!(x > -1.0) || x > 1.0) throw std::domain_error("post_widder_k: x must be in (-1,1]");
    const double step = (x + 1) / m;
    auto gp = grunwald_psi(sym, step, m);
    auto fam = grunwald_k(gp, step, i, m);
    if (i == -1 && x + 1 < 0.1 && warnings)
        warnings->push_back("post_widder_k: k_{-1} is singular at -1, accuracy degrades for x+1 < 0.1");
    return fam[m] * m / (x + 1);
}

double ScaleFunction::operator()(double x) const {
    const double y = side == Side::plus ? x : -x;
    if (index >= 0 && y <= -1 + 1e-15) return 0;
    return post_widder_k(sym, index, y, order);
}

SampledFunction nonlocal_integral(const SampledFunction& g, Side side, const ScaleGrid& grid,
                                  double study_h) {
    if (study_h > 0 && grid.h > study_h / 4 + 1e-15)
        throw std::invalid_argument("nonlocal_integral: fine step must be <= study h/4");
    const int N = grid.n_cells();
    auto gv = resample(g, grid.h, N);
    if (side == Side::minus) gv = reversed(std::move(gv));
    auto out = kernel_conv(grid.k0, grid.p0, gv, grid.h);
    if (side == Side::minus) out = reversed(std::move(out));
    return on_lattice(std::move(out), grid.h);
}

SampledFunction nonlocal_integral(const SampledFunction& g, Side side, const LevySymbol& sym,
                                  double fine_step, double study_h) {
    return nonlocal_integral(g, side, scale_function_grid(sym, fine_step), study_h);
}

SampledFunction plain_integral(const SampledFunction& g, Side side) {
    SampledFunction out = g;
    out.derivs.clear();
    const std::size_t n = g.values.size();
    if (n == 0) return out;
    if (side == Side::plus) {
        out.values[0] = 0;
        for (std::size_t i = 1; i < n; ++i)
            out.values[i] = out.values[i - 1] + 0.5 * g.step * (g.values[i - 1] + g.values[i]);
    } else {
        out.values[n - 1] = 0;
        for (std::size_t i = n - 1; i-- > 0;)
            out.values[i] = out.values[i + 1] + 0.5 * g.step * (g.values[i] + g.values[i + 1]);
    }
    return out;
}

SampledFunction conv_quadrature(const SampledFunction& g, const CoefficientTable& table, Side side,
                                ConvVariant variant, bool shifted) {
    if (variant == ConvVariant::psi_m1 && shifted)
        throw std::invalid_argument("conv_quadrature: psi_m1 has no shifted form");
    const double h = table.h;
    const int needed = static_cast<int>(std::ceil((g.b - g.a) / h)) + 2;
    if (table.N < needed)
        throw std::invalid_argument("conv_quadrature: table shorter than the support sweep");
    const auto& coef = variant == ConvVariant::psi ? table.gpsi : table.gpsi_m1;
    const double s = shifted ? 1.0 : 0.0;
    SampledFunction out = g;
    out.derivs.clear();
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const double x = g.x_at(i);
        double acc = 0;
        for (int j = 0; j <= table.N; ++j) {
            const double off = (j - s) * h;
            const double arg = side == Side::plus ? x - off : x + off;
            if (side == Side::plus && arg < g.a - h) break;
            if (side == Side::minus && arg > g.b + h) break;
            acc += coef[j] * g(arg);
        }
        out.values[i] = acc;
    }
    return out;
}

namespace {

// Inner convolution C(z) = int_0^z A(z-v) dK(v) with A(y) = y levy_tail(y)
// and K(v) = k_0^+(v-1): Stieltjes masses from k_0 with evaluation at the
// measure centroid (computed through k_1), mesh graded quadratically toward
// the A-singularity at v = z.
double inner_tail_conv(const LevySymbol& sym, const ScaleGrid& grid, double z, int M) {
    auto A = [&](double y) { return y * levy_tail(sym, y); };
    double total = 0;
    double v_lo = 0, K_lo = 0, K1_lo = grid.at(1, -1.0);
    for (int i = 1; i <= M; ++i) {
        const double r = static_cast<double>(M - i) / M;
        const double v_hi = z * (1 - r * r);
        const double K_hi = grid.at(0, v_hi - 1);
        const double K1_hi = grid.at(1, v_hi - 1);
        const double mass = K_hi - K_lo;
        if (mass > 0) {
            if (i == M) {
                // last cell: integrate A's local power law against a flat density
                const double d = v_hi - v_lo;
                const double a1 = A(d), a2 = A(0.5 * d);
                if (a1 > 0 && a2 > 0) {
                    double pa = std::log(a1 / a2) / std::log(2.0);
                    pa = std::clamp(pa, -0.95, 3.0);
                    total += mass * a1 / (pa + 1);
                } else {
                    total += mass * a2;
                }
            } else {
                double cen = (v_hi * K_hi - v_lo * K_lo - (K1_hi - K1_lo)) / mass;
                cen = std::clamp(cen, v_lo, v_hi);
                total += mass * A(z - cen);
            }
        }
        v_lo = v_hi;
        K_lo = K_hi;
        K1_lo = K1_hi;
    }
    return total;
}

double first_order_plus(const std::function<double(double)>& gd, const LevySymbol& sym,
                        const ScaleGrid& grid, double x, double tol) {
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (int L = 256; L <= 16384; L *= 2) {
        const int M = L;
        const double dz = (x + 1) / L;
        double acc = 0;
        double c_first = inner_tail_conv(sym, grid, dz, M);
        for (int l = 0; l <= L; ++l) {
            const double z = l * dz;
            const double c = l == 0 ? c_first : inner_tail_conv(sym, grid, z, M);
            const double w = (l == 0 || l == L) ? 0.5 : 1.0;
            acc += w * c * gd(x - z);
        }
        const double F = -0.5 * acc * dz;
        if (std::isfinite(prev) && std::fabs(F - prev) <= tol * std::max(1.0, std::fabs(F)))
            return F;
        prev = F;
    }
    throw std::runtime_error("first_order_correction: graded refinement did not meet tolerance");
}

} // namespace

double first_order_correction(const SampledFunction& g, const LevySymbol& sym,
                              const ScaleGrid& grid, Side side, double x, double tol) {
    if (!g.has_derivative())
        throw std::invalid_argument("first_order_correction: g needs derivative samples");
    if (x < -1 - 1e-12 || x > 1 + 1e-12)
        throw std::domain_error("first_order_correction: x outside [-1,1]");
    if (side == Side::plus) {
        auto gd = [&](double u) { return g.derivative(u); };
        return first_order_plus(gd, sym, grid, x, tol);
    }
    auto gd = [&](double u) { return -g.derivative(-u); };
    return first_order_plus(gd, sym, grid, -x, tol);
}

double first_order_correction(const SampledFunction& g, const LevySymbol& sym, Side side, double x,
                              double tol) {
    return first_order_correction(g, sym, scale_function_grid(sym, 1e-3), side, x, tol);
}

namespace {

// E^{psi,beta} on a lattice already oriented for side plus.
std::vector<double> ml_plus(std::vector<double> gv, double beta, const ScaleGrid& grid,
                            int n_terms, MlDiagnostics* diag) {
    std::vector<double> acc = gv;
    if (beta == 0) {
        if (diag) *diag = {0, 0.0, 0.0};
        return acc;
    }
    const double g_norm = vec_sup(gv);
    double acc_norm = g_norm;
    std::vector<double> term = std::move(gv);
    for (int t = 1; t <= n_terms; ++t) {
        term = kernel_conv(grid.k0, grid.p0, term, grid.h);
        for (double& v : term) v *= beta;
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += term[i];
        const double tn = vec_sup(term);
        acc_norm = std::max(acc_norm, vec_sup(acc));
        if (tn < 1e-14 * std::max(acc_norm, 1e-300)) {
            if (diag) {
                // dropped tail <= sum_k (beta I)^k applied to the last term,
                // dominated through the factorial bound seeded at that term
                const double r = 2 * grid.k0.back() * beta;
                *diag = {t, tn, r * std::exp(r) * tn};
            }
            return acc;
        }
    }
    throw std::runtime_error("mittag_leffler_apply: series did not converge within term budget");
}

} // namespace

SampledFunction mittag_leffler_apply(const SampledFunction& g, double beta, Side side,
                                     const ScaleGrid& grid, int n_terms, MlDiagnostics* diag) {
    if (beta < 0) throw std::domain_error("mittag_leffler_apply: beta must be >= 0");
    const int N = grid.n_cells();
    auto gv = resample(g, grid.h, N);
    if (side == Side::minus) gv = reversed(std::move(gv));
    auto out = ml_plus(std::move(gv), beta, grid, n_terms, diag);
    if (side == Side::minus) out = reversed(std::move(out));
    return on_lattice(std::move(out), grid.h);
}

SampledFunction mittag_leffler_apply(const SampledFunction& g, double beta, Side side,
                                     const LevySymbol& sym, int n_terms, MlDiagnostics* diag) {
    return mittag_leffler_apply(g, beta, side, scale_function_grid(sym, 2e-4), n_terms, diag);
}

namespace {

struct ResolventMachinery {
    ScaleGrid grid;
    std::vector<double> km1_coef; // G^{k_{-1}} at the grid step, for N* derivative sums
    std::vector<double> km1_half; // the same family at half the step
    double km1_at_1 = 0;          // k_{-1}^+(1), Richardson pair of the two tables
    int N = 0;

    std::vector<double> mirrored(const std::vector<double>& plus_lattice) const {
        return reversed(plus_lattice);
    }
    // sum_j G^{k_{-1}}_j F(-1 + j h) over the side-minus lattice; the first
    // order step error cancels against the half-step sum with F read at
    // half-points by interpolation.
    double dsum(const std::vector<double>& F) const {
        double full = 0;
        for (int j = 0; j <= N; ++j) full += km1_coef[j] * F[j];
        double half = 0;
        for (int m = 0; m <= 2 * N; ++m) {
            const double f = m % 2 == 0 ? F[m / 2] : 0.5 * (F[(m - 1) / 2] + F[(m + 1) / 2]);
            half += km1_half[m] * f;
        }
        return 2 * half - full;
    }
};

ResolventMachinery build_machinery(const LevySymbol& sym, double fine_step, bool need_km1) {
    ResolventMachinery m;
    m.grid = scale_function_grid(sym, fine_step, true);
    m.N = m.grid.n_cells();
    if (need_km1) {
        const double h = m.grid.h;
        auto gp = grunwald_psi(sym, h, m.N);
        m.km1_coef = grunwald_k(gp, h, -1, m.N);
        auto gp2 = grunwald_psi(sym, h / 2, 2 * m.N);
        m.km1_half = grunwald_k(gp2, h / 2, -1, 2 * m.N);
        m.km1_at_1 = 2 * m.km1_half[2 * m.N] / (h / 2) - m.km1_coef[m.N] / h;
    }
    return m;
}

std::vector<double> ml_minus_lattice(const std::vector<double>& lat, double beta,
                                     const ScaleGrid& grid) {
    auto v = reversed(lat);
    v = ml_plus(std::move(v), beta, grid, 200, nullptr);
    return reversed(std::move(v));
}

std::vector<double> cum_trapezoid_minus(const std::vector<double>& v, double h) {
    std::vector<double> out(v.size(), 0.0);
    for (std::size_t i = v.size() - 1; i-- > 0;)
        out[i] = out[i + 1] + 0.5 * h * (v[i] + v[i + 1]);
    return out;
}

} // namespace

SampledFunction resolvent_reference(const SampledFunction& g, double beta, BoundaryCase bc,
                                    const LevySymbol& sym, double fine_step) {
    if (!(beta > 0)) throw std::domain_error("resolvent_reference: beta must be positive");
    const bool needs_deriv = left_is_nstar(bc);
    const bool small_beta_singular = bc == BoundaryCase::NN || bc == BoundaryCase::NstarN;
    if (small_beta_singular && beta <= 1e-8)
        throw std::domain_error("resolvent_reference: beta <= 1e-8 is singular for NN and N*N");
    auto m = build_machinery(sym, fine_step, needs_deriv);
    const auto& grid = m.grid;
    const int N = grid.n_cells();
    const double h = grid.h;

    auto gl = resample(g, h, N);
    auto base = kernel_conv(grid.k0, grid.p0, reversed(gl), h); // I^psi_- g, plus-oriented
    auto E_Ig = reversed(ml_plus(std::move(base), beta, grid, 200, nullptr));

    const auto k0m = m.mirrored(grid.k0); // k_0^-(x) lattice
    const auto k1m = m.mirrored(grid.k1);

    std::vector<double> phi(N + 1);
    switch (bc) {
        case BoundaryCase::DD: {
            auto E_w = ml_minus_lattice(k0m, beta, grid);
            const double d = E_Ig[0] / E_w[0];
            for (int j = 0; j <= N; ++j) phi[j] = E_Ig[j] - d * E_w[j];
            break;
        }
        case BoundaryCase::DN: {
            auto E_one = ml_minus_lattice(std::vector<double>(N + 1, 1.0), beta, grid);
            const double d = E_Ig[0] / E_one[0];
            for (int j = 0; j <= N; ++j) phi[j] = E_Ig[j] - d * E_one[j];
            break;
        }
        case BoundaryCase::ND: {
            auto P = cum_trapezoid_minus(gl, h);
            auto E_P = ml_minus_lattice(P, beta, grid);
            auto E_k1m = ml_minus_lattice(k1m, beta, grid);
            auto E_w = ml_minus_lattice(k0m, beta, grid);
            const double d = E_P[0] / (1 + beta * E_k1m[0]);
            for (int j = 0; j <= N; ++j) phi[j] = E_Ig[j] - d * E_w[j];
            break;
        }
        case BoundaryCase::NN: {
            auto P = cum_trapezoid_minus(gl, h);
            auto E_P = ml_minus_lattice(P, beta, grid);
            auto Pk1 = cum_trapezoid_minus(k1m, h);
            auto E_Pk1 = ml_minus_lattice(Pk1, beta, grid);
            auto E_k1m = ml_minus_lattice(k1m, beta, grid);
            const double d = E_P[0] / (beta * (2 + beta * E_Pk1[0]));
            for (int j = 0; j <= N; ++j) phi[j] = E_Ig[j] - beta * d * E_k1m[j] - d;
            break;
        }
        case BoundaryCase::NstarD: {
            auto E_w = ml_minus_lattice(k0m, beta, grid);
            auto E_g = ml_minus_lattice(gl, beta, grid);
            const double num = m.dsum(E_g);                          // -[E I^psi g]'(-1)
            const double den = m.km1_at_1 + beta * m.dsum(E_w);      // -[E k_0^-]'(-1)
            const double d = num / den;
            for (int j = 0; j <= N; ++j) phi[j] = E_Ig[j] - d * E_w[j];
            break;
        }
        case BoundaryCase::NstarN: {
            auto E_k1m = ml_minus_lattice(k1m, beta, grid);
            auto E_g = ml_minus_lattice(gl, beta, grid);
            const double num = m.dsum(E_g);
            const double den = grid.k0.back() + beta * m.dsum(E_k1m); // -[E k_1^-]'(-1)
            const double d = num / (beta * den);
            for (int j = 0; j <= N; ++j) phi[j] = E_Ig[j] - beta * d * E_k1m[j] - d;
            break;
        }
    }
    std::vector<double> u(N + 1);
    for (int j = 0; j <= N; ++j) u[j] = -phi[j];
    return on_lattice(std::move(u), h);
}

SampledFunction resolvent_nstar_dual(const SampledFunction& g, double beta, const LevySymbol& sym,
                                     double fine_step) {
    if (!(beta > 0)) throw std::domain_error("resolvent_nstar_dual: beta must be positive");
    if (!g.has_derivative())
        throw std::invalid_argument("resolvent_nstar_dual: g needs derivative samples");
    auto m = build_machinery(sym, fine_step, true);
    const auto& grid = m.grid;
    const int N = grid.n_cells();
    const double h = grid.h;

    const auto k0m = m.mirrored(grid.k0);
    auto E_w = ml_minus_lattice(k0m, beta, grid); // E_- k_0^-(x) = W^beta(1-x)
    auto Wb = reversed(E_w);                      // W^beta(y) on y = j h
    const double wprime2 = m.km1_at_1 + beta * m.dsum(E_w); // [W^beta]'(2)

    // J = int [W^beta]'(y+1) g(y) dy = W^beta(2) g(1) - int W^beta(y+1) g'(y) dy
    std::vector<double> gd_rev(N + 1);
    for (int j = 0; j <= N; ++j) gd_rev[j] = g.derivative(1 - j * h);
    const double pW = local_exponent(Wb);
    auto tail_int = kernel_conv(Wb, pW, gd_rev, h);
    const double J = Wb[N] * g(1.0) - tail_int[N];

    // S(x) = int_x^1 W^beta(y-x) g(y) dy
    auto gl = resample(g, h, N);
    auto S = reversed(kernel_conv(Wb, pW, reversed(gl), h));

    std::vector<double> u(N + 1);
    for (int j = 0; j <= N; ++j) u[j] = E_w[j] * J / wprime2 - S[j];
    return on_lattice(std::move(u), h);
}

} // namespace grunwald
