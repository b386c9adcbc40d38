#pragma once

#include <functional>
#include <string>

#include <json.hpp>

namespace grunwald {

// Laplace exponent psi(xi) = int_0^inf (e^{-xi y} - 1 + xi y) phi(dy) of a
// spectrally positive Levy process in the recurrent, unbounded-variation
// regime: psi'(0+) = 0 and int_(0,1) y phi(dy) = inf. Built-in families keep
// alpha in (1,2).
enum class Family { stable, tempered, truncated, custom };

// Evaluator pack for custom symbols. tail_moment_fn(j, s) must return
// M_j(s) = int y^j e^{-s y} phi(dy); orders above j_max are refused by the
// free functions rather than extrapolated.
struct CustomEvaluators {
    std::function<double(double)> psi_fn;
    std::function<double(double)> psi_prime_fn;
    std::function<double(int, double)> tail_moment_fn;
    std::function<double(double)> big_phi_fn;
    std::function<double(double)> levy_tail_fn;
    int j_max = 0;
    bool h1 = false;
};

class LevySymbol {
public:
    static LevySymbol stable(double alpha);
    // Levy density c * exp(-beta y) * y^(-1-alpha).
    static LevySymbol tempered(double alpha, double beta, double c);
    // Levy density y^(-1-alpha) on (0, K].
    static LevySymbol truncated(double alpha, double K);
    static LevySymbol custom(CustomEvaluators ev);
    // {"family": "stable"|"tempered"|"truncated", "alpha":..., "beta":..., "c":..., "K":...}
    static LevySymbol from_config(const nlohmann::json& cfg);

    Family family() const { return family_; }
    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    double c() const { return c_; }
    double K() const { return K_; }
    // The complete-monotonicity / regularity hypothesis the N* theory needs.
    bool satisfies_h1() const { return h1_; }
    // Maximum tail-moment order; unbounded (INT_MAX) for built-in families.
    int j_max() const;
    std::string describe() const;

    const CustomEvaluators& evaluators() const { return custom_; }

private:
    LevySymbol() = default;
    Family family_ = Family::stable;
    double alpha_ = 1.5, beta_ = 0, c_ = 0, K_ = 0;
    bool h1_ = true;
    CustomEvaluators custom_;
};

double psi(const LevySymbol& sym, double x);
double psi_prime(const LevySymbol& sym, double x);
// M_j(s) = int y^j e^{-s y} phi(dy) = (-1)^j psi^(j)(s), j >= 2.
double tail_moment(const LevySymbol& sym, int j, double s);
// Phi(x) = int_x^inf phi(y,inf) dy for x > 0, zero-extended to x <= 0.
double big_phi(const LevySymbol& sym, double x);
double levy_tail(const LevySymbol& sym, double x);

namespace detail {
// Upper incomplete gamma Gamma(a, x) for any real a > -3 and x > 0;
// continued fraction for x > 1.5, downward recursion from a+2 otherwise.
double upper_gamma(double a, double x);
} // namespace detail

} // namespace grunwald
