#include "grunwald/symbol.hpp"

#include <cfloat>
#include <climits>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace grunwald {

namespace {

using gk15 = boost::math::quadrature::gauss_kronrod<double, 15>;

void require_positive(double x, const char* what) {
    if (!(x > 0)) throw std::domain_error(std::string(what) + " must be positive");
}

// Gamma(-alpha) > 0 for alpha in (1,2); the recurrence keeps tgamma on
// positive arguments.
double gamma_neg_alpha(double alpha) {
    return std::tgamma(2 - alpha) / (alpha * (alpha - 1));
}

// Modified Lentz continued fraction for Gamma(a, x), any real a, x > ~1.
double upper_gamma_cf(double a, double x) {
    constexpr double tiny = 1e-300;
    constexpr int itmax = 500;
    double b = x + 1 - a;
    double c = 1 / tiny;
    double d = 1 / b;
    double h = d;
    for (int i = 1; i <= itmax; ++i) {
        double an = -i * (i - a);
        b += 2;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x)) * h;
}

// ---- truncated family quadratures --------------------------------------
// Density y^(-1-alpha) on (0,K]. Integrals against the singular endpoint are
// evaluated after the substitution u = y^(2-alpha), which makes the
// integrands bounded at 0.

double truncated_psi_quad(double alpha, double K, double x) {
    const double p = 1 / (2 - alpha);
    const double ubound = std::pow(K, 2 - alpha);
    const double Kma = std::pow(K, -alpha);
    auto f = [&](double u) {
        double y = std::pow(u, p);
        double tail = (std::pow(y, -alpha) - Kma) / alpha;
        return -std::expm1(-x * y) * tail * p * std::pow(u, p - 1);
    };
    double integral = gk15::integrate(f, 0.0, ubound, 14, 1e-10);
    return x * integral;
}

double truncated_psi_prime_quad(double alpha, double K, double x) {
    const double p = 1 / (2 - alpha);
    const double ubound = std::pow(K, 2 - alpha);
    auto f = [&](double u) {
        double y = std::pow(u, p);
        return -std::expm1(-x * y) * std::pow(y, -alpha) * p * std::pow(u, p - 1);
    };
    return gk15::integrate(f, 0.0, ubound, 14, 1e-10);
}

double truncated_tail_moment_quad(double alpha, double K, int j, double s) {
    if (j == 2) {
        const double p = 1 / (2 - alpha);
        const double ubound = std::pow(K, 2 - alpha);
        auto f = [&](double u) { return p * std::exp(-s * std::pow(u, p)); };
        return gk15::integrate(f, 0.0, ubound, 14, 1e-10);
    }
    // j >= 3: integrand y^(j-1-alpha) e^{-sy} is smooth; scale by its peak
    // value so huge orders stay in range, and split at the peak so the
    // adaptive rule cannot miss a narrow interior spike.
    const double expo = j - 1 - alpha;
    auto logf = [&](double y) { return expo * std::log(y) - s * y; };
    double ystar = std::min(std::max(expo / s, K * 1e-12), K);
    double logscale = logf(ystar);
    if (logscale > 650.0) throw std::overflow_error("tail_moment: value exceeds double range");
    auto f = [&](double y) { return std::exp(logf(y) - logscale); };
    double integral = gk15::integrate(f, 0.0, ystar, 14, 1e-10);
    if (ystar < K) integral += gk15::integrate(f, ystar, K, 14, 1e-10);
    return std::exp(logscale) * integral;
}

} // namespace

namespace detail {

double upper_gamma(double a, double x) {
    require_positive(x, "upper_gamma argument");
    if (a <= -3) throw std::domain_error("upper_gamma: a <= -3 unsupported");
    if (x > 1.5) return upper_gamma_cf(a, x);
    // climb to a positive parameter, then recurse back down:
    // Gamma(a, x) = (Gamma(a+1, x) - x^a e^{-x}) / a
    int k = 0;
    double atop = a;
    while (atop <= 0) {
        atop += 1;
        ++k;
    }
    double g = boost::math::tgamma(atop, x);
    for (int i = 1; i <= k; ++i) {
        double ai = atop - i;
        g = (g - std::pow(x, ai) * std::exp(-x)) / ai;
    }
    return g;
}

} // namespace detail

LevySymbol LevySymbol::stable(double alpha) {
    if (!(alpha > 1 && alpha < 2)) throw std::invalid_argument("stable: alpha must be in (1,2)");
    LevySymbol s;
    s.family_ = Family::stable;
    s.alpha_ = alpha;
    s.h1_ = true;
    return s;
}

LevySymbol LevySymbol::tempered(double alpha, double beta, double c) {
    if (!(alpha > 1 && alpha < 2)) throw std::invalid_argument("tempered: alpha must be in (1,2)");
    if (!(beta > 0)) throw std::invalid_argument("tempered: beta must be positive");
    if (!(c > 0)) throw std::invalid_argument("tempered: c must be positive");
    LevySymbol s;
    s.family_ = Family::tempered;
    s.alpha_ = alpha;
    s.beta_ = beta;
    s.c_ = c;
    s.h1_ = true;
    return s;
}

LevySymbol LevySymbol::truncated(double alpha, double K) {
    if (!(alpha > 1 && alpha < 2)) throw std::invalid_argument("truncated: alpha must be in (1,2)");
    if (!(K > 0)) throw std::invalid_argument("truncated: K must be positive");
    LevySymbol s;
    s.family_ = Family::truncated;
    s.alpha_ = alpha;
    s.K_ = K;
    s.h1_ = true;
    return s;
}

LevySymbol LevySymbol::custom(CustomEvaluators ev) {
    if (!ev.psi_fn || !ev.psi_prime_fn || !ev.tail_moment_fn || !ev.big_phi_fn || !ev.levy_tail_fn)
        throw std::invalid_argument("custom: all evaluators must be supplied");
    if (ev.j_max < 2) throw std::invalid_argument("custom: j_max must be >= 2");
    LevySymbol s;
    s.family_ = Family::custom;
    s.alpha_ = 0;
    s.h1_ = ev.h1;
    s.custom_ = std::move(ev);
    return s;
}

LevySymbol LevySymbol::from_config(const nlohmann::json& cfg) {
    if (!cfg.contains("family")) throw std::invalid_argument("config: missing \"family\"");
    std::string fam = cfg.at("family").get<std::string>();
    if (!cfg.contains("alpha")) throw std::invalid_argument("config: missing \"alpha\"");
    double alpha = cfg.at("alpha").get<double>();
    if (fam == "stable") return stable(alpha);
    if (fam == "tempered") {
        if (!cfg.contains("beta")) throw std::invalid_argument("config: tempered needs \"beta\"");
        double beta = cfg.at("beta").get<double>();
        double c = cfg.contains("c") ? cfg.at("c").get<double>()
                                     : 1 / gamma_neg_alpha(alpha);
        return tempered(alpha, beta, c);
    }
    if (fam == "truncated") {
        if (!cfg.contains("K")) throw std::invalid_argument("config: truncated needs \"K\"");
        return truncated(alpha, cfg.at("K").get<double>());
    }
    throw std::invalid_argument("config: unknown family \"" + fam + "\"");
}

int LevySymbol::j_max() const {
    return family_ == Family::custom ? custom_.j_max : INT_MAX;
}

std::string LevySymbol::describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (family_) {
        case Family::stable: os << "stable(alpha=" << alpha_ << ")"; break;
        case Family::tempered:
            os << "tempered(alpha=" << alpha_ << ",beta=" << beta_ << ",c=" << c_ << ")";
            break;
        case Family::truncated: os << "truncated(alpha=" << alpha_ << ",K=" << K_ << ")"; break;
        case Family::custom: os << "custom(j_max=" << custom_.j_max << ")"; break;
    }
    return os.str();
}

double psi(const LevySymbol& sym, double x) {
    require_positive(x, "psi argument");
    switch (sym.family()) {
        case Family::stable:
            return std::pow(x, sym.alpha());
        case Family::tempered: {
            double a = sym.alpha(), b = sym.beta();
            double core = std::pow(b + x, a) - std::pow(b, a) - a * std::pow(b, a - 1) * x;
            return sym.c() * gamma_neg_alpha(a) * core;
        }
        case Family::truncated:
            return truncated_psi_quad(sym.alpha(), sym.K(), x);
        case Family::custom:
            return sym.evaluators().psi_fn(x);
    }
    throw std::logic_error("unreachable");
}

double psi_prime(const LevySymbol& sym, double x) {
    require_positive(x, "psi_prime argument");
    switch (sym.family()) {
        case Family::stable:
            return sym.alpha() * std::pow(x, sym.alpha() - 1);
        case Family::tempered: {
            double a = sym.alpha(), b = sym.beta();
            return sym.c() * gamma_neg_alpha(a) * a *
                   (std::pow(b + x, a - 1) - std::pow(b, a - 1));
        }
        case Family::truncated:
            return truncated_psi_prime_quad(sym.alpha(), sym.K(), x);
        case Family::custom:
            return sym.evaluators().psi_prime_fn(x);
    }
    throw std::logic_error("unreachable");
}

double tail_moment(const LevySymbol& sym, int j, double s) {
    if (j < 2) throw std::domain_error("tail_moment: j must be >= 2");
    require_positive(s, "tail_moment argument");
    switch (sym.family()) {
        case Family::stable: {
            double a = sym.alpha();
            // s^(alpha-j) Gamma(j-alpha)/Gamma(-alpha); both gammas positive.
            return std::exp(std::lgamma(j - a) - std::lgamma(-a) + (a - j) * std::log(s));
        }
        case Family::tempered: {
            double a = sym.alpha();
            return sym.c() * std::exp(std::lgamma(j - a) + (a - j) * std::log(s + sym.beta()));
        }
        case Family::truncated:
            return truncated_tail_moment_quad(sym.alpha(), sym.K(), j, s);
        case Family::custom:
            if (j > sym.j_max()) throw std::domain_error("tail_moment: j exceeds custom j_max");
            return sym.evaluators().tail_moment_fn(j, s);
    }
    throw std::logic_error("unreachable");
}

double big_phi(const LevySymbol& sym, double x) {
    if (x <= 0) return 0;
    switch (sym.family()) {
        case Family::stable:
            return std::pow(x, 1 - sym.alpha()) / std::tgamma(2 - sym.alpha());
        case Family::tempered: {
            double a = sym.alpha(), b = sym.beta();
            return sym.c() * std::pow(b, a - 1) *
                   (detail::upper_gamma(1 - a, b * x) - b * x * detail::upper_gamma(-a, b * x));
        }
        case Family::truncated: {
            double a = sym.alpha(), K = sym.K();
            if (x >= K) return 0;
            return (std::pow(x, 1 - a) - std::pow(K, 1 - a)) / (a * (a - 1)) -
                   std::pow(K, -a) * (K - x) / a;
        }
        case Family::custom:
            return sym.evaluators().big_phi_fn(x);
    }
    throw std::logic_error("unreachable");
}

double levy_tail(const LevySymbol& sym, double x) {
    require_positive(x, "levy_tail argument");
    switch (sym.family()) {
        case Family::stable:
            return std::pow(x, -sym.alpha()) / (sym.alpha() * gamma_neg_alpha(sym.alpha()));
        case Family::tempered:
            return sym.c() * std::pow(sym.beta(), sym.alpha()) *
                   detail::upper_gamma(-sym.alpha(), sym.beta() * x);
        case Family::truncated: {
            double a = sym.alpha(), K = sym.K();
            if (x >= K) return 0;
            return (std::pow(x, -a) - std::pow(K, -a)) / a;
        }
        case Family::custom:
            return sym.evaluators().levy_tail_fn(x);
    }
    throw std::logic_error("unreachable");
}

} // namespace grunwald
