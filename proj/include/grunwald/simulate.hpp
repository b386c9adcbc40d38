#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "grunwald/boundary.hpp"
#include "grunwald/coeffs.hpp"
#include "grunwald/symbol.hpp"

namespace grunwald {

// Jump law of the free chain: total rate q = -gpsi[1], displacement (j-1)h
// with probability gpsi[j]/q for j in {0, 2, 3, ..., j_cut}. The discarded
// tail mass beyond j_cut is below 1e-12. The only negative displacement is
// -h (j = 0); the cdf entry for j = 1 repeats cdf[0] so index 1 is never
// drawn by upper_bound.
struct ChainSpec {
    CoefficientTable table;
    double h = 0;
    double q = 0;
    std::vector<double> cdf;     // cumulative law over j = 0..cdf.size()-1
    long j_cut = 0;              // largest displacement index kept
    double tail_discarded = 0;   // law mass beyond j_cut
    Family family = Family::stable;
    double alpha = 0;
    double ratio_damp = 1;       // gpsi ratio damping: 1 + beta*h for tempered
    double head_last = 0;        // gpsi at index cdf.size()-1, continues the walk
};

// Tabulates the jump law. The cdf head covers up to 4096 indices; symbols
// whose tail mass has not dropped below 1e-12 by then (stable, and tempered
// with small beta*h) continue analytically through the one-step coefficient
// ratio until the cutoff, which a single long-double sweep locates up front.
// Throws std::runtime_error for custom symbols whose tabulated range cannot
// absorb the tail.
ChainSpec make_chain_spec(const LevySymbol& sym, const CoefficientTable& table);

struct PathEvent {
    double time = 0;
    double state = 0;  // state immediately after the jump at `time`
};

// Free-chain trajectory on one lattice fiber: events[0] = {0, x0}, times
// non-decreasing, and the state persists from each event to the next.
struct Path {
    double h = 0;
    double horizon = 0;
    std::vector<PathEvent> events;
};

// Compound Poisson path: exponential(q) holding times, displacements from
// the chain law. Reproducible: the per-path generator is seeded from `seed`
// alone and all variates are derived from explicit 53-bit uniforms, so the
// sequence does not depend on the standard library's distribution choices.
Path simulate_free(const ChainSpec& spec, double x0, double horizon, std::uint64_t seed);

// Boundary-modified trajectory. Times are on the observed clock: fast-forward
// sides delete the time spent beyond their boundary, so observed_end can fall
// short of the free horizon. A killed path carries the observed kill instant
// and its events end at the pre-kill state.
struct ModifiedPath {
    double h = 0;
    double observed_end = 0;
    bool killed = false;
    double kill_time = 0;
    std::vector<PathEvent> events;
};

// Applies the boundary semantics of `bc` on [-1, 1]:
//   D left:  landing strictly below -1 kills instantly; landing exactly at -1
//            is observed and the next jump kills wherever it leads (this is
//            the lattice convention: the lowest cell's only matrix entry is
//            its diagonal).
//   D right: landing at or beyond 1 kills instantly.
//   N side:  time with state beyond the boundary (including the boundary
//            itself on the left, from 1 on the right) is deleted; the path
//            resumes at the first state back inside, without interpolation.
//   N* left: running-reflection transform X = Y - min(0, inf(Y+1)), applied
//            before the right-side rule.
// Boundary comparisons carry a 1e-9*h tolerance; lattice states hit the
// boundaries exactly up to rounding.
ModifiedPath modify_path(const Path& path, BoundaryCase bc);

// State on the observed clock: nullopt once killed (t >= kill_time).
// Pre: t <= observed_end unless the path was killed earlier.
std::optional<double> state_at(const ModifiedPath& path, double t);

// One modified-chain state at observed time t, started from x0 on the
// lambda = 0 lattice; nullopt when the path is dead by then. Runs on the
// observed clock, so deletion excursions cost no simulated time: a landing
// beyond a fast-forward right boundary re-enters at the first lattice level
// below it (descents are single steps, so that level is certain), and a
// landing on a fast-forward left boundary re-enters at the overshoot of the
// excursion's embedded walk, continued jump by jump with the clock frozen.
// The law is exactly that of the lambda = 0 rate matrix for the same case.
// For kill and fast-forward sides that coincides with modify_path over
// simulate_free with the deleted stretches never materialized; a reflected
// left side follows two matrix conventions the literal path rules only
// approach as h -> 0: the fold sits one level above the floor (the floor
// itself is occupied only when started there), and floor landings at or
// past 1-h are treated by the right-boundary rule one level early.
std::optional<double> observed_state(const ChainSpec& spec, BoundaryCase bc, double x0, double t,
                                     std::uint64_t seed);

struct McResult {
    double mean = 0;
    double std_error = 0;
    std::size_t n_paths = 0;
    double killed_fraction = 0;
};

// Monte Carlo estimate of E[f(X_t)] for the modified chain started at x0 on
// the lambda = 0 fiber; killed paths contribute f := 0. Paths run in
// parallel with per-path seeds mixed from (seed, index) and are reduced in
// index order, so the estimate is deterministic under any scheduling.
McResult mc_expectation(const ChainSpec& spec, BoundaryCase bc,
                        const std::function<double(double)>& f, double x0, double t,
                        std::size_t n_paths, std::uint64_t seed);

// CSV dump, one row per observed event: path_id,time,state,alive. A killed
// path closes with an alive = 0 row at its kill instant.
void write_csv(const std::vector<ModifiedPath>& paths, std::ostream& os);

} // namespace grunwald
