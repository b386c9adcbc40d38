#include "grunwald/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include "grunwald/threads.hpp"

namespace grunwald {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// 53-bit uniform in [0, 1); explicit so sequences do not depend on the
// standard library's distribution implementations.
double uniform53(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// gpsi_{j+1}/gpsi_j for the closed-form families beyond the tabulated head.
long double tail_ratio(const ChainSpec& spec, long j) {
    return (j - static_cast<long double>(spec.alpha)) /
           ((j + 1) * static_cast<long double>(spec.ratio_damp));
}

// Law mass strictly beyond index j for the stable symbol: -S_j/q where S_j
// is the prefix sum of gpsi, which telescopes to a single binomial term.
double stable_tail_mass(double alpha, double s, double q, long j) {
    const double log_binom = std::log(alpha - 1) + std::lgamma(j + 1 - alpha) -
                             std::lgamma(2 - alpha) - std::lgamma(static_cast<double>(j) + 1);
    return std::exp(alpha * std::log(s) + log_binom) / q;
}

long sample_jump(const ChainSpec& spec, double u) {
    const auto& cdf = spec.cdf;
    if (u < cdf.back()) {
        auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        return static_cast<long>(it - cdf.begin());
    }
    long j = static_cast<long>(cdf.size()) - 1;
    long double g = spec.head_last;
    long double cum = cdf.back();
    while (j < spec.j_cut) {
        g *= tail_ratio(spec, j);
        ++j;
        cum += g / spec.q;
        if (u < static_cast<double>(cum)) return j;
    }
    return spec.j_cut;  // clamp; the mass out here is below 1e-12
}

}  // namespace

ChainSpec make_chain_spec(const LevySymbol& sym, const CoefficientTable& table) {
    if (!(table.h > 0)) throw std::invalid_argument("make_chain_spec: table has no step size");
    ChainSpec spec;
    spec.table = table;
    spec.h = table.h;
    spec.family = sym.family();
    spec.alpha = sym.alpha();
    spec.ratio_damp = sym.family() == Family::tempered ? 1 + sym.beta() * table.h : 1;

    const int head = std::min(4096, sym.j_max());
    const std::vector<double> gp = grunwald_psi(sym, table.h, head);
    if (!(gp[1] < 0)) throw std::invalid_argument("make_chain_spec: gpsi[1] must be negative");
    spec.q = -gp[1];

    spec.cdf.reserve(head + 1);
    long double cum = 0;
    long cut = -1;
    for (int j = 0; j <= head; ++j) {
        long double p = j == 1 ? 0.0L : static_cast<long double>(gp[j]) / spec.q;
        if (p < 0) {
            if (p < -1e-12L) throw std::invalid_argument("make_chain_spec: negative jump mass");
            p = 0;
        }
        cum += p;
        spec.cdf.push_back(static_cast<double>(cum));
        if (1 - cum < 1e-12L) {
            cut = j;
            break;
        }
    }
    if (cut >= 0) {
        spec.j_cut = cut;
        spec.tail_discarded = static_cast<double>(1 - cum);
        spec.head_last = gp[cut];
        return spec;
    }

    // Tail mass is still above 1e-12 after the head; only the closed-form
    // heavy-tail families can be continued analytically.
    spec.head_last = gp[head];
    const long double rem_head = 1 - cum;
    if (sym.family() == Family::stable) {
        const double s = 1 / table.h;
        long lo = head, hi = head;
        while (stable_tail_mass(spec.alpha, s, spec.q, hi) >= 1e-12) {
            if (hi > (1L << 60)) throw std::runtime_error("make_chain_spec: tail cutoff out of range");
            lo = hi;
            hi *= 2;
        }
        while (lo + 1 < hi) {
            const long mid = lo + (hi - lo) / 2;
            (stable_tail_mass(spec.alpha, s, spec.q, mid) < 1e-12 ? hi : lo) = mid;
        }
        spec.j_cut = stable_tail_mass(spec.alpha, s, spec.q, lo) < 1e-12 ? lo : hi;
        spec.tail_discarded = stable_tail_mass(spec.alpha, s, spec.q, spec.j_cut);
        return spec;
    }
    if (sym.family() == Family::tempered) {
        long double g = gp[head];
        long double rem = rem_head;
        long j = head;
        while (rem >= 1e-12L) {
            g *= tail_ratio(spec, j);
            ++j;
            rem -= g / spec.q;
            if (j > 1000000000L)
                throw std::runtime_error("make_chain_spec: tail cutoff search exceeded 1e9 terms");
        }
        spec.j_cut = j;
        spec.tail_discarded = static_cast<double>(std::max(rem, 0.0L));
        return spec;
    }
    throw std::runtime_error("make_chain_spec: jump-law tail of " + sym.describe() +
                             " has mass " + std::to_string(static_cast<double>(rem_head)) +
                             " beyond the tabulated head and no analytic continuation");
}

Path simulate_free(const ChainSpec& spec, double x0, double horizon, std::uint64_t seed) {
    if (!(horizon > 0) || !std::isfinite(horizon))
        throw std::invalid_argument("simulate_free: horizon must be positive and finite");
    if (!std::isfinite(x0)) throw std::invalid_argument("simulate_free: x0 must be finite");
    if (spec.cdf.empty() || !(spec.q > 0))
        throw std::invalid_argument("simulate_free: chain spec is not tabulated");

    Path path;
    path.h = spec.h;
    path.horizon = horizon;
    path.events.push_back({0.0, x0});

    std::mt19937_64 rng(splitmix64(seed));
    double t = 0;
    double x = x0;
    for (;;) {
        t += -std::log(1 - uniform53(rng)) / spec.q;
        if (t > horizon) break;
        const long j = sample_jump(spec, uniform53(rng));
        x += (j - 1) * spec.h;
        path.events.push_back({t, x});
    }
    return path;
}

ModifiedPath modify_path(const Path& path, BoundaryCase bc) {
    if (path.events.empty() || !(path.h > 0))
        throw std::invalid_argument("modify_path: path is empty or has no step size");
    const double tol = 1e-9 * path.h;
    const bool dl = left_is_dirichlet(bc);
    const bool nl = left_is_neumann(bc);
    const bool sl = left_is_nstar(bc);
    const bool dr = right_is_dirichlet(bc);

    ModifiedPath out;
    out.h = path.h;
    out.events.reserve(path.events.size());

    double deleted = 0;
    bool in_deletion = false;
    double del_entry = 0;
    bool at_left_cell = false;  // D left: state sits exactly at -1
    double reflect_off = 0;     // N* running min of (y + 1), capped at 0

    for (const PathEvent& ev : path.events) {
        const double tfree = ev.time;
        double x = ev.state;
        if (sl) {
            if (x + 1 < reflect_off) reflect_off = x + 1;
            x -= reflect_off;
        }

        // The lowest Dirichlet cell only holds: its next jump kills wherever
        // it lands, before any fast-forward rule sees the landing state.
        if (at_left_cell) {
            out.killed = true;
            out.kill_time = tfree - deleted;
            out.observed_end = out.kill_time;
            return out;
        }

        const bool beyond_left = nl && x <= -1 + tol;
        const bool beyond_right = !dr && x >= 1 - tol;
        if (in_deletion) {
            if (beyond_left || beyond_right) continue;
            deleted += tfree - del_entry;
            in_deletion = false;
        }

        if (dl && x < -1 - tol) {
            out.killed = true;
            out.kill_time = tfree - deleted;
            out.observed_end = out.kill_time;
            return out;
        }
        if (dr && x >= 1 - tol) {
            out.killed = true;
            out.kill_time = tfree - deleted;
            out.observed_end = out.kill_time;
            return out;
        }
        if (beyond_left || beyond_right) {
            in_deletion = true;
            del_entry = tfree;
            continue;
        }

        at_left_cell = dl && std::fabs(x + 1) <= tol;
        out.events.push_back({tfree - deleted, x});
    }

    out.observed_end = in_deletion ? del_entry - deleted : path.horizon - deleted;
    return out;
}

std::optional<double> state_at(const ModifiedPath& path, double t) {
    if (path.killed && t >= path.kill_time) return std::nullopt;
    if (path.events.empty()) return std::nullopt;
    if (t > path.observed_end)
        throw std::out_of_range("state_at: t is beyond the observed span");
    auto it = std::upper_bound(path.events.begin(), path.events.end(), t,
                               [](double v, const PathEvent& e) { return v < e.time; });
    if (it == path.events.begin())
        throw std::out_of_range("state_at: t precedes the first event");
    return std::prev(it)->state;
}

namespace {

// Re-entry overshoot of a left excursion: the embedded free walk from lattice
// level m0 <= 0 (the boundary itself is level 0), run with the clock frozen
// until it first exceeds 0. The tabulated law discards under 1e-12 of mass
// but a few 1e-5 of mean, all of it far to the right, so a walk can carry a
// drift deficit that strands it below the boundary; one that outlives the
// step budget is resolved the way the full law would resolve it, swept past
// the whole interval by a far-tail jump.
long ascend(const ChainSpec& spec, std::mt19937_64& rng, long m0) {
    const long sweep = std::lround(4 / spec.h);
    long m = m0;
    for (long steps = 0; m <= 0; ++steps) {
        if (steps > 20000000L) return sweep;
        m += sample_jump(spec, uniform53(rng)) - 1;
    }
    return m;
}

}  // namespace

std::optional<double> observed_state(const ChainSpec& spec, BoundaryCase bc, double x0, double t,
                                     std::uint64_t seed) {
    if (!(t >= 0) || !std::isfinite(t))
        throw std::invalid_argument("observed_state: t must be finite and nonnegative");
    if (!(x0 >= -1 && x0 <= 1))
        throw std::invalid_argument("observed_state: x0 must lie in [-1, 1]");
    const double cells = (x0 + 1) / spec.h;
    if (std::fabs(cells - std::round(cells)) > 1e-9)
        throw std::invalid_argument("observed_state: x0 must sit on the lambda = 0 grid");
    if (spec.cdf.empty() || !(spec.q > 0))
        throw std::invalid_argument("observed_state: chain spec is not tabulated");

    const bool dl = left_is_dirichlet(bc);
    const bool nl = left_is_neumann(bc);
    const bool sl = left_is_nstar(bc);
    const bool dr = right_is_dirichlet(bc);
    // States are tracked as lattice levels above -1, so every comparison is
    // exact. The right boundary sits at level lim; a fast-forward right
    // excursion creeps down one level at a time, so it must re-enter exactly
    // at lim - 1.
    const long lim = std::lround(2 / spec.h);

    std::mt19937_64 rng(splitmix64(seed));
    long m = std::lround((x0 + 1) / spec.h);
    bool killed = false;

    // Applies the boundary rules to a landing level until it rests inside;
    // a left re-entry can overshoot into the right rule, never the reverse.
    const auto resolve = [&](long k) {
        if (nl && k <= 0) k = ascend(spec, rng, k);
        if (dl && k < 0) {
            killed = true;
            return k;
        }
        if (k >= lim) {
            if (dr) killed = true;
            else k = lim - 1;
        }
        return k;
    };

    m = resolve(m);
    if (killed) return std::nullopt;
    for (double clock = 0;;) {
        clock += -std::log(1 - uniform53(rng)) / spec.q;
        if (clock > t) return m * spec.h - 1;
        if (dl && m == 0) return std::nullopt;  // lowest cell is moribund: any event kills
        const long j = sample_jump(spec, uniform53(rng));
        if (sl && m <= 1) {
            // The interpolated matrix pins the reflection fold one level
            // above the floor, so -h is a no-op on both lowest cells. Its
            // floor row (start states only) applies the right rule already
            // at level lim - 1 and, when that side fast-forwards, re-enters
            // one level lower still.
            if (j == 0) continue;
            if (m == 0) {
                const long k = j - 1;
                if (k >= lim - 1) {
                    if (dr) return std::nullopt;
                    m = lim - 2;
                } else {
                    m = k;
                }
                continue;
            }
        }
        m = resolve(m + j - 1);
        if (killed) return std::nullopt;
    }
}

McResult mc_expectation(const ChainSpec& spec, BoundaryCase bc,
                        const std::function<double(double)>& f, double x0, double t,
                        std::size_t n_paths, std::uint64_t seed) {
    if (!f) throw std::invalid_argument("mc_expectation: f must be callable");
    if (n_paths < 1) throw std::invalid_argument("mc_expectation: n_paths must be >= 1");

    std::vector<double> values(n_paths, 0.0);
    std::vector<unsigned char> dead(n_paths, 0);
    parallel_for(n_paths, [&](std::size_t i) {
        const std::uint64_t path_seed = seed + 0x9E3779B97F4A7C15ULL * (i + 1);
        if (const auto sv = observed_state(spec, bc, x0, t, path_seed))
            values[i] = f(*sv);
        else
            dead[i] = 1;
    });

    McResult res;
    res.n_paths = n_paths;
    long double sum = 0;
    std::size_t killed = 0;
    for (std::size_t i = 0; i < n_paths; ++i) {
        sum += values[i];
        killed += dead[i];
    }
    res.mean = static_cast<double>(sum / n_paths);
    res.killed_fraction = static_cast<double>(killed) / static_cast<double>(n_paths);
    if (n_paths > 1) {
        long double ss = 0;
        for (double v : values) {
            const long double d = v - res.mean;
            ss += d * d;
        }
        res.std_error = static_cast<double>(std::sqrt(ss / (n_paths - 1) / n_paths));
    }
    return res;
}

void write_csv(const std::vector<ModifiedPath>& paths, std::ostream& os) {
    os.precision(17);
    os << "path_id,time,state,alive\n";
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const ModifiedPath& p = paths[i];
        for (const PathEvent& ev : p.events)
            os << i << ',' << ev.time << ',' << ev.state << ",1\n";
        if (p.killed) {
            const double last = p.events.empty() ? std::numeric_limits<double>::quiet_NaN()
                                                 : p.events.back().state;
            os << i << ',' << p.kill_time << ',' << last << ",0\n";
        }
    }
}

} // namespace grunwald
