#pragma once

#include <stdexcept>
#include <string>

namespace grunwald {

// Direction of the one-sided operator: plus acts by left translations
// (forward), minus by right translations (backward).
enum class Side { plus, minus };

// Left/right boundary condition pairs. D kills, N reflects by fast-forward,
// Nstar reflects by subtracting the running minimum (left boundary only).
enum class BoundaryCase { DD, DN, ND, NN, NstarD, NstarN };

inline const char* to_string(BoundaryCase c) {
    switch (c) {
        case BoundaryCase::DD: return "DD";
        case BoundaryCase::DN: return "DN";
        case BoundaryCase::ND: return "ND";
        case BoundaryCase::NN: return "NN";
        case BoundaryCase::NstarD: return "N*D";
        case BoundaryCase::NstarN: return "N*N";
    }
    return "??";
}

inline BoundaryCase parse_boundary_case(const std::string& s) {
    if (s == "DD") return BoundaryCase::DD;
    if (s == "DN") return BoundaryCase::DN;
    if (s == "ND") return BoundaryCase::ND;
    if (s == "NN") return BoundaryCase::NN;
    if (s == "N*D" || s == "NsD") return BoundaryCase::NstarD;
    if (s == "N*N" || s == "NsN") return BoundaryCase::NstarN;
    throw std::invalid_argument("unknown boundary case: " + s);
}

inline bool left_is_dirichlet(BoundaryCase c) {
    return c == BoundaryCase::DD || c == BoundaryCase::DN;
}
inline bool left_is_neumann(BoundaryCase c) {
    return c == BoundaryCase::ND || c == BoundaryCase::NN;
}
inline bool left_is_nstar(BoundaryCase c) {
    return c == BoundaryCase::NstarD || c == BoundaryCase::NstarN;
}
inline bool right_is_dirichlet(BoundaryCase c) {
    return c == BoundaryCase::DD || c == BoundaryCase::ND || c == BoundaryCase::NstarD;
}

} // namespace grunwald
