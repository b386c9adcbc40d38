#pragma once

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "grunwald/symbol.hpp"

namespace grunwald {

// Grunwald-type coefficient families for one symbol at one step h:
// gpsi[j] are the Taylor coefficients of psi((1-xi)/h), gpsi_m1 those of
// psi((1-xi)/h)/((1-xi)/h) i.e. the integrated stencil, and gk[i] those of
// the reciprocal-family generating functions (1-xi)^(-i) h^... / psi.
struct CoefficientTable {
    double h = 0;
    int N = 0;
    std::string symbol_desc;
    std::vector<double> gpsi;
    std::vector<double> gpsi_m1;
    std::map<int, std::vector<double>> gk;  // keys 1, 0, -1, -2
    std::vector<std::string> warnings;
};

// gpsi_0 = psi(1/h), gpsi_1 = -psi'(1/h)/h, gpsi_j = M_j(1/h)/(j! h^j).
std::vector<double> grunwald_psi(const LevySymbol& sym, double h, int N);

// gpsi_m1_j = h * (prefix sum of gpsi through j).
std::vector<double> grunwald_psi_minus1(const std::vector<double>& gpsi, double h);

// Reciprocal-series recursion for i = 0, prefix/difference transforms for
// i = 1, -1, -2. Entries are >= 0 for i >= -1 when the symbol satisfies H0.
std::vector<double> grunwald_k(const std::vector<double>& gpsi, double h, int i, int N);

// All four k-families from a single reciprocal-series pass; the expensive
// O(N^2) recursion runs once and the others derive from it in O(N).
std::map<int, std::vector<double>> grunwald_k_all(const std::vector<double>& gpsi, double h, int N);

CoefficientTable build_table(const LevySymbol& sym, double h, int N);

struct IdentityViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IdentityReport {
    std::map<std::string, double> max_residual;  // absolute, per identity
    double threshold = 0;                        // tol * (1/h)
    int sign_violations = 0;
    bool pass = false;
};

// Checks the discrete convolution identities and the sign structure.
IdentityReport check_identities(const CoefficientTable& table, double tol);
// check_identities + throw IdentityViolation when any residual fails.
IdentityReport verify_identities(const CoefficientTable& table, double tol);

// One comment line with symbol/h/N metadata, then a column-header row
// (j,gpsi,gpsi_m1,gk1,gk0,gkm1,gkm2), then the data.
void write_csv(const CoefficientTable& table, std::ostream& os);

} // namespace grunwald
