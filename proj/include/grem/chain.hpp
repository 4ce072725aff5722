#pragma once

// Chain optimization: the rho recursion that yields the hidden hierarchical
// chain and phase temperatures, critical subsets, coarse-grained level data,
// GREM free energies, the exhaustive all-chains oracle, and phase-diagram
// times.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "grem/errors.hpp"
#include "grem/model.hpp"
#include "grem/subset.hpp"

namespace grem {

constexpr double ln2 = 0.6931471805599453;
constexpr double default_tol = 1e-9;

/// rho(B, A) = sqrt(2 ln2 (gamma(A)-gamma(B)) / (alpha(A)-alpha(B))),
/// +infinity when the alpha increment vanishes. Natural logs throughout.
inline double rho(const model_t& m, subset_t b, subset_t a) {
    if (!b.subset_of(a) || b == a || !a.subset_of(m.full_set()))
        fail(errc::bad_pair, "need B strictly inside A inside I, got B=" + b.str() + " A=" + a.str());
    const double da = m.alpha(a) - m.alpha(b);
    const double dg = m.gamma(a) - m.gamma(b);
    if (da <= 0.0) return std::numeric_limits<double>::infinity();
    return std::sqrt(2.0 * ln2 * dg / da);
}

/// Per-level increments of a chain. beta is filled by the solver (and left
/// empty by coarse_grain, where no temperatures are implied).
struct level_data {
    std::vector<double> delta;  // alpha increments, sum to 1 for full chains
    std::vector<double> g;      // gamma increments, sum to 1
    std::vector<double> beta;   // strictly increasing for solver chains

    int levels() const { return static_cast<int>(delta.size()); }
};

struct solved_chain {
    chain_t chain;
    level_data levels;
};

/// The recursion: beta_j = min over A strictly above A_{j-1} of rho(A_{j-1}, A);
/// A_j is the union of all minimizers within relative tolerance, asserted to
/// attain the same rho (the maximal-minimizer property made checkable).
inline solved_chain build_chain(const model_t& m, double tol = default_tol) {
    if (!(tol > 0.0)) fail(errc::bad_pair, "tolerance must be > 0");
    solved_chain out;
    out.chain.sets.push_back(subset_t::empty());
    const subset_t full = m.full_set();
    double prev_beta = 0.0;

    while (out.chain.sets.back() != full) {
        const subset_t cur = out.chain.sets.back();
        const subset_t rest = full - cur;
        double best = std::numeric_limits<double>::infinity();
        for_each_subset_of(rest, [&](subset_t add) {
            if (add.is_empty()) return;
            best = std::min(best, rho(m, cur, cur | add));
        });
        if (!std::isfinite(best))
            fail(errc::no_finite_rho, "no finite rho above " + cur.str() +
                                          " (uncovered coordinates should have been rejected)");
        subset_t next = cur;
        for_each_subset_of(rest, [&](subset_t add) {
            if (add.is_empty()) return;
            if (rho(m, cur, cur | add) <= best * (1.0 + tol)) next = next | add;
        });
        const double attained = rho(m, cur, next);
        if (!(std::fabs(attained - best) <= tol * best))
            fail(errc::nonmonotone_beta,
                 "union of minimizers above " + cur.str() + " has rho " + std::to_string(attained) +
                     " != " + std::to_string(best) + "; tolerance pathology");
        if (!(best > prev_beta * (1.0 + tol) || out.chain.sets.size() == 1))
            fail(errc::nonmonotone_beta, "beta not strictly increasing at " + next.str());

        out.levels.delta.push_back(m.alpha(next) - m.alpha(cur));
        out.levels.g.push_back(m.gamma(next) - m.gamma(cur));
        out.levels.beta.push_back(best);
        out.chain.sets.push_back(next);
        prev_beta = best;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Critical subsets
// ---------------------------------------------------------------------------

struct critical_subset {
    subset_t a;
    double alpha_hat;
    double alpha_hat_c;
    std::vector<subset_t> family;    // P-hat_{A,j}
    std::vector<subset_t> family_c;  // P-hat^c_{A,j}
};

struct critical_report {
    std::vector<std::vector<critical_subset>> per_level;  // index j-1

    bool any() const {
        for (const auto& v : per_level)
            if (!v.empty()) return true;
        return false;
    }
};

/// Strict A inside A_j \ A_{j-1} with positive new weight whose rho ties the
/// level temperature beta_j.
inline critical_report find_critical_subsets(const model_t& m, const chain_t& chain,
                                             const level_data& levels,
                                             double tol = default_tol) {
    critical_report rep;
    rep.per_level.resize(static_cast<std::size_t>(chain.levels()));
    for (int j = 1; j <= chain.levels(); ++j) {
        const subset_t prev = chain.level_set(j - 1);
        const subset_t inc = chain.level_increment(j);
        const double beta_j = levels.beta[static_cast<std::size_t>(j - 1)];
        for_each_subset_of(inc, [&](subset_t a) {
            if (a == inc || a.is_empty()) return;
            const subset_t ext = a | prev;
            const double ahat = m.alpha(ext) - m.alpha(prev);
            if (ahat <= 0.0) return;
            const double r = rho(m, prev, ext);
            if (std::fabs(r - beta_j) <= tol * beta_j) {
                critical_subset c;
                c.a = a;
                c.alpha_hat = ahat;
                c.alpha_hat_c = levels.delta[static_cast<std::size_t>(j - 1)] - ahat;
                c.family = m.family_between(ext, prev);
                c.family_c = m.family_between(chain.level_set(j), ext);
                rep.per_level[static_cast<std::size_t>(j - 1)].push_back(c);
            }
        });
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Coarse graining and free energies
// ---------------------------------------------------------------------------

/// Level data of the GREM obtained by coarse-graining along an arbitrary
/// chain: a-hat_j = alpha(A_j) - alpha(A_{j-1}).
inline level_data coarse_grain(const model_t& m, const chain_t& chain) {
    require_valid_chain(chain, m.n());
    level_data out;
    for (int j = 1; j <= chain.levels(); ++j) {
        const double d = m.alpha(chain.level_set(j)) - m.alpha(chain.level_set(j - 1));
        if (d <= 0.0)
            fail(errc::zero_level_weight,
                 "alpha-flat step into " + chain.level_set(j).str() +
                     "; such chains are evaluated through free_energy_chain, which merges the level");
        out.delta.push_back(d);
        out.g.push_back(m.gamma(chain.level_set(j)) - m.gamma(chain.level_set(j - 1)));
    }
    return out;
}

namespace detail {

struct merged_level {
    double delta;
    double g;
    double beta;
};

/// Concavification of arbitrary level data by the restricted recursion: only
/// the chain's own prefixes are candidates, so the merged betas come out
/// strictly increasing. Zero-weight levels are absorbed into the block that
/// follows them.
inline std::vector<merged_level> concavify(const level_data& raw, double tol = default_tol) {
    const int k = raw.levels();
    std::vector<double> ca(k + 1, 0.0), cg(k + 1, 0.0);
    for (int j = 0; j < k; ++j) {
        ca[j + 1] = ca[j] + raw.delta[static_cast<std::size_t>(j)];
        cg[j + 1] = cg[j] + raw.g[static_cast<std::size_t>(j)];
    }
    std::vector<merged_level> out;
    int pos = 0;
    double prev_beta = 0.0;
    while (pos < k) {
        double best = std::numeric_limits<double>::infinity();
        for (int r = pos + 1; r <= k; ++r) {
            const double da = ca[r] - ca[pos];
            if (da <= 0.0) continue;
            best = std::min(best, std::sqrt(2.0 * ln2 * (cg[r] - cg[pos]) / da));
        }
        if (!std::isfinite(best))
            fail(errc::zero_level_weight, "chain suffix carries no weight; model invalid");
        int take = pos;
        for (int r = pos + 1; r <= k; ++r) {
            const double da = ca[r] - ca[pos];
            if (da <= 0.0) continue;
            if (std::sqrt(2.0 * ln2 * (cg[r] - cg[pos]) / da) <= best * (1.0 + tol)) take = r;
        }
        if (!(best > prev_beta))
            fail(errc::nonmonotone_beta, "merged betas not increasing; tolerance pathology");
        out.push_back({ca[take] - ca[pos], cg[take] - cg[pos], best});
        prev_beta = best;
        pos = take;
    }
    return out;
}

} // namespace detail

/// GREM free energy of the given level data at inverse temperature beta, in
/// the averaged-trace convention (f(0) = 0). The levels are first merged to
/// their own concave envelope, then each merged block contributes
/// beta^2 delta/2 below its transition and beta beta_l delta - g ln2 above.
inline double free_energy_chain(const level_data& levels, double beta, double tol = default_tol) {
    if (!(beta >= 0.0)) fail(errc::bad_pair, "beta must be nonnegative");
    const auto merged = detail::concavify(levels, tol);
    double f = 0.0;
    for (const auto& lv : merged) {
        if (beta <= lv.beta)
            f += 0.5 * beta * beta * lv.delta;
        else
            f += beta * lv.beta * lv.delta - lv.g * ln2;
    }
    return f;
}

// ---------------------------------------------------------------------------
// Exhaustive oracle over all chains
// ---------------------------------------------------------------------------

/// All chains on {1..n}: ordered set partitions, built by peeling nonempty
/// subsets off the remaining coordinates.
inline std::vector<chain_t> enumerate_chains(int n) {
    if (n > 8) fail(errc::too_many_chains, "chain enumeration is guarded to n <= 8");
    std::vector<chain_t> out;
    chain_t cur;
    cur.sets.push_back(subset_t::empty());
    const subset_t full = subset_t::full(n);
    auto rec = [&](auto&& self) -> void {
        const subset_t have = cur.sets.back();
        if (have == full) {
            out.push_back(cur);
            return;
        }
        const subset_t rest = full - have;
        for_each_subset_of(rest, [&](subset_t add) {
            if (add.is_empty()) return;
            cur.sets.push_back(have | add);
            self(self);
            cur.sets.pop_back();
        });
    };
    rec(rec);
    std::sort(out.begin(), out.end(), [](const chain_t& a, const chain_t& b) {
        return std::lexicographical_compare(
            a.sets.begin(), a.sets.end(), b.sets.begin(), b.sets.end(),
            [](subset_t x, subset_t y) { return x.bits < y.bits; });
    });
    return out;
}

struct exhaustive_result {
    chain_t chain;                 // a chain attaining the minimum on the whole grid
    std::vector<double> minima;    // pointwise minima over all chains
};

/// Evaluates f(beta, S) for every chain S on the grid and returns the
/// pointwise minimum; the reported chain is the lexicographically first one
/// attaining the minimum at every grid point within 1e-12 relative slack.
inline exhaustive_result exhaustive_min_chain(const model_t& m,
                                              const std::vector<double>& beta_grid) {
    const auto chains = enumerate_chains(m.n());
    std::vector<std::vector<double>> values(chains.size());
    exhaustive_result res;
    res.minima.assign(beta_grid.size(), std::numeric_limits<double>::infinity());
    for (std::size_t c = 0; c < chains.size(); ++c) {
        level_data lv;
        for (int j = 1; j <= chains[c].levels(); ++j) {
            lv.delta.push_back(m.alpha(chains[c].level_set(j)) -
                               m.alpha(chains[c].level_set(j - 1)));
            lv.g.push_back(m.gamma(chains[c].level_set(j)) - m.gamma(chains[c].level_set(j - 1)));
        }
        values[c].resize(beta_grid.size());
        for (std::size_t b = 0; b < beta_grid.size(); ++b) {
            values[c][b] = free_energy_chain(lv, beta_grid[b]);
            res.minima[b] = std::min(res.minima[b], values[c][b]);
        }
    }
    for (std::size_t c = 0; c < chains.size(); ++c) {
        bool everywhere = true;
        for (std::size_t b = 0; b < beta_grid.size(); ++b) {
            const double slack = 1e-12 * std::max(1.0, std::fabs(res.minima[b]));
            if (values[c][b] > res.minima[b] + slack) { everywhere = false; break; }
        }
        if (everywhere) { res.chain = chains[c]; return res; }
    }
    // a single chain is optimal across all temperatures for valid models;
    // reaching here indicates a tolerance pathology
    fail(errc::nonmonotone_beta, "no chain attains the pointwise minimum everywhere");
}

/// Default beta grid: `points` values spanning [0, 3 beta_K].
inline std::vector<double> default_beta_grid(const level_data& levels, int points = 50) {
    std::vector<double> grid(static_cast<std::size_t>(points));
    const double hi = 3.0 * levels.beta.back();
    for (int i = 0; i < points; ++i)
        grid[static_cast<std::size_t>(i)] = hi * static_cast<double>(i) / (points - 1);
    return grid;
}

// ---------------------------------------------------------------------------
// Phase diagram
// ---------------------------------------------------------------------------

struct phase_diagram {
    double beta;
    int m;                     // regime: max{j : beta_j < beta}, 0 below beta_1
    std::vector<double> x;     // x_j = beta_j / beta, j = 1..K
    std::vector<double> times; // t_0 = 0, ..., t_K = infinity; empty when m = 0
};

inline phase_diagram phase_points(const level_data& levels, double beta) {
    phase_diagram pd;
    pd.beta = beta;
    pd.m = 0;
    const int k = levels.levels();
    for (int j = 0; j < k; ++j) {
        pd.x.push_back(levels.beta[static_cast<std::size_t>(j)] / beta);
        if (levels.beta[static_cast<std::size_t>(j)] < beta) pd.m = j + 1;
    }
    if (pd.m == 0) return pd;
    pd.times.push_back(0.0);
    const double beta_k = levels.beta.back();
    for (int j = 1; j < k; ++j)
        pd.times.push_back(std::log(beta_k / levels.beta[static_cast<std::size_t>(k - 1 - j)]));
    pd.times.push_back(std::numeric_limits<double>::infinity());
    return pd;
}

} // namespace grem
