#pragma once

// The limiting objects: critical constants C_l, Ruelle cascades with
// densities C_l beta_l e^{-beta_l t}, tree overlaps, Poisson-Dirichlet
// weights, and the Brownian-bridge orthant probe.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "grem/chain.hpp"
#include "grem/errors.hpp"
#include "grem/gibbs.hpp"
#include "grem/model.hpp"
#include "grem/numeric.hpp"
#include "grem/rng.hpp"

namespace grem {

// ---------------------------------------------------------------------------
// Critical constants
// ---------------------------------------------------------------------------

struct constant_estimate {
    double value = 1.0;
    double se = 0.0;
    std::uint64_t samples = 0;
    bool exact = true;  // true for levels without criticals (C = 1, no MC)
};

/// Per-level C_l. Levels without critical subsets get exactly 1. Otherwise
/// Monte Carlo of P[Y_{l,A}/a-hat(A) - Y^c_{l,A}/a-hat^c(A) <= 0 for every
/// critical A], with Y_J independent N(0, a_J). A zero-consistent estimate
/// raises DEGENERATE_CONSTANT: the model is reducible and the cascade
/// picture does not apply.
inline std::vector<constant_estimate> estimate_critical_constants(
    const model_t& m, const chain_t& chain, const level_data& levels,
    const critical_report& criticals, std::uint64_t samples, std::uint64_t seed) {
    (void)levels;
    const counter_rng rng(seed);
    std::vector<constant_estimate> out;
    for (int l = 1; l <= chain.levels(); ++l) {
        const auto& crits = criticals.per_level[static_cast<std::size_t>(l - 1)];
        if (crits.empty()) {
            out.push_back({1.0, 0.0, 0, true});
            continue;
        }
        if (samples < 10000)
            fail(errc::bad_pair, "constant estimation needs at least 10^4 MC samples");
        const auto family = m.family_between(chain.level_set(l), chain.level_set(l - 1));
        std::vector<double> sd(family.size());
        for (std::size_t t = 0; t < family.size(); ++t) {
            for (const auto& [j, w] : m.weights())
                if (j == family[t]) sd[t] = std::sqrt(w);
        }
        // membership of each family entry in each critical's own family
        std::vector<std::vector<bool>> in_family(crits.size(),
                                                 std::vector<bool>(family.size(), false));
        for (std::size_t c = 0; c < crits.size(); ++c)
            for (std::size_t t = 0; t < family.size(); ++t)
                for (subset_t j : crits[c].family)
                    if (j == family[t]) in_family[c][t] = true;

        const std::uint64_t stream = substream(streams::mc_generic, 1000 + l);
        std::uint64_t hits = 0;
        std::vector<double> y(family.size());
        for (std::uint64_t s = 0; s < samples; ++s) {
            for (std::size_t t = 0; t < family.size(); ++t)
                y[t] = sd[t] * normal_at(rng, stream, s * family.size() + t);
            bool ok = true;
            for (std::size_t c = 0; c < crits.size() && ok; ++c) {
                double pos = 0.0, neg = 0.0;
                for (std::size_t t = 0; t < family.size(); ++t)
                    (in_family[c][t] ? pos : neg) += y[t];
                ok = pos / crits[c].alpha_hat - neg / crits[c].alpha_hat_c <= 0.0;
            }
            if (ok) ++hits;
        }
        const double p = static_cast<double>(hits) / static_cast<double>(samples);
        const double se = std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(samples));
        if (hits == 0 || p < 5.0 * se)
            fail(errc::degenerate_constant,
                 "C_" + std::to_string(l) + " estimate " + std::to_string(p) +
                     " is zero-consistent; the model is reducible at this level");
        out.push_back({p, se, samples, false});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cascade sampling
// ---------------------------------------------------------------------------

struct cascade_spec {
    int K = 0;
    std::vector<double> beta;     // per level, increasing
    std::vector<double> C;        // per level, in (0, 1]
    std::vector<double> floor_at; // per-branch truncation level
    std::uint64_t branch_cap = 10000;
};

/// Floors tuned so each branch carries `points_per_branch` points on
/// average: E count = C e^{-beta floor}.
inline cascade_spec make_cascade_spec(const level_data& levels,
                                      const std::vector<constant_estimate>& constants,
                                      double points_per_branch = 50.0,
                                      std::uint64_t branch_cap = 10000) {
    cascade_spec cs;
    cs.K = levels.levels();
    cs.branch_cap = branch_cap;
    for (int l = 0; l < cs.K; ++l) {
        const double c = constants[static_cast<std::size_t>(l)].value;
        if (!(c > 0.0 && c <= 1.0))
            fail(errc::degenerate_constant, "C_" + std::to_string(l + 1) + " outside (0,1]");
        cs.beta.push_back(levels.beta[static_cast<std::size_t>(l)]);
        cs.C.push_back(c);
        cs.floor_at.push_back((std::log(c) - std::log(points_per_branch)) /
                              levels.beta[static_cast<std::size_t>(l)]);
    }
    return cs;
}

/// A sampled cascade tree. Nodes at level l (1-based) carry the level value
/// u and the index of their parent at level l-1; leaves are level-K nodes.
struct cascade_sample {
    int K = 0;
    std::vector<std::vector<std::uint32_t>> parent;  // per level
    std::vector<std::vector<double>> u;              // per level
    std::vector<std::vector<std::uint32_t>> leaf_ancestor;  // [level][leaf]
    std::vector<double> leaf_y;                      // full points y_i

    std::size_t leaf_count() const { return leaf_y.size(); }

    /// Depth of the deepest common level of two leaves (0 if they part at
    /// the root), i.e. the index m with overlap A_m.
    int overlap_level(std::size_t a, std::size_t b) const {
        int m = 0;
        for (int l = 0; l < K; ++l) {
            if (leaf_ancestor[static_cast<std::size_t>(l)][a] !=
                leaf_ancestor[static_cast<std::size_t>(l)][b])
                break;
            m = l + 1;
        }
        return m;
    }
};

/// Points above the floor per branch: u = (log C - log Gamma_i)/beta for the
/// arrivals Gamma of a unit-rate Poisson stream. Branches are independent
/// with per-branch derived streams, so the assembly is order-free.
inline cascade_sample sample_cascade(const cascade_spec& cs, std::uint64_t seed) {
    if (cs.branch_cap < 1) fail(errc::bad_pair, "branch_cap must be >= 1");
    for (double f : cs.floor_at)
        if (!std::isfinite(f)) fail(errc::bad_pair, "floors must be finite");
    const counter_rng rng(seed);
    cascade_sample out;
    out.K = cs.K;
    out.parent.resize(static_cast<std::size_t>(cs.K));
    out.u.resize(static_cast<std::size_t>(cs.K));

    std::vector<std::uint64_t> parent_streams = {substream(streams::cascade_branch, 0)};
    std::vector<double> parent_y = {0.0};

    for (int l = 0; l < cs.K; ++l) {
        std::vector<std::uint64_t> node_streams;
        std::vector<double> node_y;
        const double arrival_cap =
            cs.C[static_cast<std::size_t>(l)] *
            std::exp(-cs.beta[static_cast<std::size_t>(l)] * cs.floor_at[static_cast<std::size_t>(l)]);
        for (std::size_t b = 0; b < parent_streams.size(); ++b) {
            const std::uint64_t stream = parent_streams[b];
            double gamma = 0.0;
            std::uint64_t k = 0;
            while (true) {
                gamma += exponential_at(rng, stream, k);
                if (gamma > arrival_cap) break;
                if (k >= cs.branch_cap)
                    fail(errc::cap_exceeded, "branch at level " + std::to_string(l + 1) +
                                                 " exceeded the point cap; raise the floor");
                const double u = (std::log(cs.C[static_cast<std::size_t>(l)]) - std::log(gamma)) /
                                 cs.beta[static_cast<std::size_t>(l)];
                out.parent[static_cast<std::size_t>(l)].push_back(static_cast<std::uint32_t>(b));
                out.u[static_cast<std::size_t>(l)].push_back(u);
                node_streams.push_back(substream(stream, k + 1));
                node_y.push_back(parent_y[b] + u);
                ++k;
            }
        }
        parent_streams = std::move(node_streams);
        parent_y = std::move(node_y);
    }
    out.leaf_y = std::move(parent_y);

    // ancestor table per level for overlap queries
    out.leaf_ancestor.assign(static_cast<std::size_t>(cs.K), {});
    const std::size_t leaves = out.leaf_y.size();
    std::vector<std::uint32_t> cur(leaves);
    for (std::uint32_t i = 0; i < leaves; ++i) cur[i] = i;
    for (int l = cs.K - 1; l >= 0; --l) {
        out.leaf_ancestor[static_cast<std::size_t>(l)] = cur;
        for (std::size_t i = 0; i < leaves; ++i)
            cur[i] = out.parent[static_cast<std::size_t>(l)][cur[i]];
    }
    return out;
}

// ---------------------------------------------------------------------------
// The limit law (normalized weights with tree marks)
// ---------------------------------------------------------------------------

struct limit_law_t {
    std::vector<double> weights;  // normalized, sorted descending
    marked_pair_measure_t pairs;  // same schema as the Gibbs pair measure
    double tail_mass = 0.0;       // estimated fraction lost to truncation
};

/// Exponentiate and normalize the cascade points; marks come from the tree
/// overlap. Requires beta > beta_K so the raw mass converges; the part of
/// the mass lost below the floors is estimated and must stay under 1e-3.
inline limit_law_t cascade_to_limit_law(const cascade_sample& sample, const cascade_spec& cs,
                                        const chain_t& chain, double beta,
                                        double coverage_target = 0.999) {
    if (!(beta > cs.beta.back()))
        fail(errc::regime_mismatch, "limit law needs beta > beta_K");

    const std::size_t leaves = sample.leaf_count();
    if (leaves == 0) fail(errc::poor_truncation, "cascade sample has no leaves");
    double mx = -std::numeric_limits<double>::infinity();
    for (double y : sample.leaf_y) mx = std::max(mx, y);
    std::vector<double> raw(leaves);
    kahan_accumulator z;
    for (std::size_t i = 0; i < leaves; ++i) {
        raw[i] = std::exp(beta * (sample.leaf_y[i] - mx));
        z.add(raw[i]);
    }

    // Tail estimate: expected raw mass below the floor per branch, with the
    // deeper levels replaced by their realized per-branch averages.
    double missing = 0.0;
    {
        std::vector<double> mean_branch_mass(static_cast<std::size_t>(cs.K), 1.0);
        for (int l = cs.K - 1; l >= 0; --l) {
            const std::size_t branches =
                (l == 0) ? 1 : sample.u[static_cast<std::size_t>(l - 1)].size();
            kahan_accumulator level_mass;
            for (double u : sample.u[static_cast<std::size_t>(l)])
                level_mass.add(std::exp(beta * u));
            double deeper = 1.0;
            for (int r = l + 1; r < cs.K; ++r) deeper *= mean_branch_mass[static_cast<std::size_t>(r)];
            const double bl = cs.beta[static_cast<std::size_t>(l)];
            const double below = cs.C[static_cast<std::size_t>(l)] * bl *
                                 std::exp((beta - bl) * cs.floor_at[static_cast<std::size_t>(l)]) /
                                 (beta - bl);
            missing += static_cast<double>(branches) * below * deeper * std::exp(-beta * mx);
            mean_branch_mass[static_cast<std::size_t>(l)] =
                branches ? level_mass.value() / static_cast<double>(branches) : 0.0;
        }
    }
    limit_law_t out;
    out.tail_mass = missing / (missing + z.value());
    if (out.tail_mass > 1e-3)
        fail(errc::poor_truncation,
             "estimated truncated mass " + std::to_string(out.tail_mass) + " > 1e-3");

    std::vector<std::uint32_t> order(leaves);
    for (std::uint32_t i = 0; i < leaves; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (raw[a] != raw[b]) return raw[a] > raw[b];
        return a < b;
    });

    out.weights.resize(leaves);
    for (std::size_t i = 0; i < leaves; ++i) out.weights[i] = raw[order[i]] / z.value();

    kahan_accumulator mass;
    std::size_t take = 0;
    while (take < leaves && mass.value() < coverage_target) {
        mass.add(out.weights[take]);
        ++take;
    }
    out.pairs.coverage = mass.value();
    for (std::size_t i = 0; i < take; ++i) {
        for (std::size_t k = i + 1; k < take; ++k) {
            const int m = sample.overlap_level(order[i], order[k]);
            out.pairs.atoms.push_back(
                {out.weights[i], out.weights[k], chain.level_set(m)});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Poisson-Dirichlet sampler
// ---------------------------------------------------------------------------

/// Normalized atoms of the PPP with density x t^{-x-1} dt on (0, inf),
/// realized as t_i = Gamma_i^{-1/x} and truncated at `floor_at`. Sorted
/// descending (the transform is monotone in the arrivals).
inline std::vector<double> sample_pd(double x, double floor_at, std::uint64_t seed) {
    if (!(x > 0.0 && x < 1.0)) fail(errc::bad_pair, "PD parameter x must be in (0,1)");
    const counter_rng rng(seed);
    const std::uint64_t stream = substream(streams::mc_generic, 77);
    const double arrival_cap = std::pow(floor_at, -x);
    std::vector<double> atoms;
    double gamma = 0.0;
    for (std::uint64_t k = 0;; ++k) {
        gamma += exponential_at(rng, stream, k);
        if (gamma > arrival_cap) break;
        atoms.push_back(std::exp(-std::log(gamma) / x));
    }
    kahan_accumulator z;
    for (double t : atoms) z.add(t);
    for (double& t : atoms) t /= z.value();
    return atoms;
}

// ---------------------------------------------------------------------------
// Brownian bridge orthant probe
// ---------------------------------------------------------------------------

struct orthant_estimate {
    double p = 0.0;
    double se = 0.0;
    std::uint64_t samples = 0;
};

/// Monte Carlo of P[B(s_1) <= 0, ..., B(s_j) <= 0] for a standard Brownian
/// bridge on [0,1]. Times may repeat; all must lie strictly inside (0,1).
inline orthant_estimate bridge_orthant(const std::vector<double>& times, std::uint64_t samples,
                                       std::uint64_t seed) {
    for (double s : times)
        if (!(s > 0.0 && s < 1.0)) fail(errc::bad_pair, "bridge times must lie in (0,1)");
    std::vector<double> grid = times;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    const counter_rng rng(seed);
    const std::uint64_t stream = substream(streams::mc_generic, 88);
    const std::size_t g = grid.size();
    std::uint64_t hits = 0;
    std::vector<double> w(g);
    for (std::uint64_t s = 0; s < samples; ++s) {
        double prev_t = 0.0, acc = 0.0;
        for (std::size_t k = 0; k < g; ++k) {
            acc += std::sqrt(grid[k] - prev_t) * normal_at(rng, stream, s * (g + 1) + k);
            w[k] = acc;
            prev_t = grid[k];
        }
        const double w1 = acc + std::sqrt(1.0 - prev_t) * normal_at(rng, stream, s * (g + 1) + g);
        bool ok = true;
        for (std::size_t k = 0; k < g && ok; ++k) ok = w[k] - grid[k] * w1 <= 0.0;
        if (ok) ++hits;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(samples);
    return {p, std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(samples)), samples};
}

} // namespace grem
