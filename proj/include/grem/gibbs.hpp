#pragma once

// Exact finite-N Gibbs measures by full enumeration: weights, marginals,
// overlaps and the covariance metric, quenched sampling, ultrametricity
// statistics, marked pair measures, and the layer partition-function
// fluctuation diagnostic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "grem/chain.hpp"
#include "grem/errors.hpp"
#include "grem/field.hpp"
#include "grem/model.hpp"
#include "grem/numeric.hpp"
#include "grem/rng.hpp"

namespace grem {

/// Exact Gibbs weights over the configurations of `support` (the full set I
/// for tables from gibbs_table; a chain set for marginals). Coordinates of
/// the support are packed ascending with the bit widths recorded here.
struct gibbs_table {
    double beta = 0.0;
    double log_partition = 0.0;  // f_N(beta) in the averaged-trace convention
    subset_t support;
    std::vector<int> support_coords;  // ascending
    std::vector<int> bits;            // aligned with support_coords
    std::vector<double> weights;      // sum to 1

    std::uint64_t config_count() const { return weights.size(); }
};

/// Weights exp(beta X_sigma)/Z with per-table max shifts, so the same table
/// results whether energies are taken raw or recentered. f_N includes the
/// 2^-N averaging factor.
inline gibbs_table gibbs_table_of(const field_realization& real, double beta) {
    const auto& tables = real.tables();
    const std::size_t nt = tables.size();

    // exp factors per table, shifted by the table max
    std::vector<std::vector<double>> factors(nt);
    double shift = 0.0;
    for (std::size_t t = 0; t < nt; ++t) {
        double mx = -std::numeric_limits<double>::infinity();
        for (double v : tables[t]) mx = std::max(mx, v);
        shift += mx;
        factors[t].resize(tables[t].size());
        for (std::size_t k = 0; k < tables[t].size(); ++k)
            factors[t][k] = std::exp(beta * (tables[t][k] - mx));
    }

    gibbs_table out;
    out.beta = beta;
    out.support = real.model().full_set();
    for (int i = 1; i <= real.size().n; ++i) {
        out.support_coords.push_back(i);
        out.bits.push_back(real.size().bits[static_cast<std::size_t>(i - 1)]);
    }
    out.weights.resize(real.size().config_count);
    kahan_accumulator z;
    for (std::uint64_t c = 0; c < real.size().config_count; ++c) {
        double w = 1.0;
        for (std::size_t t = 0; t < nt; ++t)
            w *= factors[t][real.projector(t)(static_cast<config_t>(c))];
        out.weights[c] = w;
        z.add(w);
    }
    const double zval = z.value();
    for (double& w : out.weights) w /= zval;

    const int N = real.size().N;
    out.log_partition = (std::log(zval) + beta * shift - N * ln2) / N;
    return out;
}

namespace detail {

/// Removes the coordinates of `drop` from a table by summing them out.
/// Accumulation runs in ascending config order per bucket, so repeated folds
/// compose bit-exactly.
inline gibbs_table fold_out(const gibbs_table& in, subset_t drop) {
    gibbs_table out;
    out.beta = in.beta;
    out.log_partition = in.log_partition;
    out.support = in.support - drop;

    int out_bits_total = 0;
    std::vector<int> keep_shift, keep_bits, in_shift;
    int shift = 0;
    for (std::size_t k = 0; k < in.support_coords.size(); ++k) {
        const int coord = in.support_coords[k];
        const int b = in.bits[k];
        if (!drop.contains(coord)) {
            out.support_coords.push_back(coord);
            out.bits.push_back(b);
            keep_shift.push_back(out_bits_total);
            keep_bits.push_back(b);
            in_shift.push_back(shift);
            out_bits_total += b;
        }
        shift += b;
    }
    out.weights.assign(std::uint64_t{1} << out_bits_total, 0.0);
    for (std::uint64_t c = 0; c < in.weights.size(); ++c) {
        std::uint64_t idx = 0;
        for (std::size_t k = 0; k < keep_shift.size(); ++k)
            idx |= ((c >> in_shift[k]) & ((std::uint64_t{1} << keep_bits[k]) - 1))
                   << keep_shift[k];
        out.weights[idx] += in.weights[c];
    }
    return out;
}

} // namespace detail

/// Marginal onto Sigma_{N, A_m}, computed by folding out one chain level at
/// a time from the top. Folding to m and then to m' < m is bit-identical to
/// folding directly to m'.
inline gibbs_table marginal_gibbs(const gibbs_table& table, const chain_t& chain, int m) {
    if (m < 1 || m > chain.levels()) fail(errc::chain_mismatch, "marginal level out of range");
    gibbs_table cur = table;
    for (int j = chain.levels(); j > m; --j) {
        const subset_t drop = chain.level_increment(j) & cur.support;
        if (!drop.is_empty()) cur = detail::fold_out(cur, drop);
    }
    return cur;
}

// ---------------------------------------------------------------------------
// Overlap and covariance distance
// ---------------------------------------------------------------------------

struct overlap_distance {
    subset_t q;
    double d;
};

/// q = coordinates of agreement; d = sqrt(2N(1 - alpha(q))), the closed form
/// of the covariance metric E(X_sigma - X_tau)^2.
inline overlap_distance overlap_and_distance(const model_t& m, const size_params& size,
                                             config_t sigma, config_t tau) {
    const subset_t q = size.overlap(sigma, tau);
    return {q, std::sqrt(2.0 * size.N * (1.0 - m.alpha(q)))};
}

// ---------------------------------------------------------------------------
// Quenched sampling
// ---------------------------------------------------------------------------

/// i.i.d. draws under the table's weights by inverse CDF. The CDF is walked
/// in a single streaming pass against sorted targets, so no cumulative array
/// is materialized.
inline std::vector<config_t> draw_configs(const gibbs_table& table, std::size_t count,
                                          std::uint64_t seed) {
    const counter_rng rng(seed);
    const std::uint64_t stream = substream(streams::gibbs_draw, 0);
    std::vector<std::pair<double, std::size_t>> targets(count);
    for (std::size_t k = 0; k < count; ++k)
        targets[k] = {to_uniform01(rng.word(stream, k)), k};
    std::sort(targets.begin(), targets.end());

    std::vector<config_t> out(count);
    kahan_accumulator cum;
    std::size_t next = 0;
    for (std::uint64_t c = 0; c < table.weights.size() && next < count; ++c) {
        cum.add(table.weights[c]);
        while (next < count && targets[next].first <= cum.value()) {
            out[targets[next].second] = static_cast<config_t>(c);
            ++next;
        }
    }
    for (; next < count; ++next)
        out[targets[next].second] = static_cast<config_t>(table.weights.size() - 1);
    return out;
}

// ---------------------------------------------------------------------------
// Ultrametricity statistics
// ---------------------------------------------------------------------------

/// A triple violates ultrametricity in the covariance metric iff the
/// smallest of the three pairwise alpha(q) values is strictly unique
/// (equivalently: the largest distance is not tied). Exact comparisons; d
/// takes finitely many values and no slack is applied.
inline bool triple_violates_ultrametricity(double a01, double a02, double a12) {
    double lo = a01, mid = a02;
    if (mid < lo) std::swap(lo, mid);
    if (a12 < lo) {
        mid = lo;
        lo = a12;
    } else if (a12 < mid) {
        mid = a12;
    }
    return lo < mid;
}

struct ultrametric_report {
    double beta = 0.0;
    int N = 0;
    std::uint64_t triples = 0;
    std::uint64_t violations = 0;
    double fraction = 0.0;
    double se = 0.0;
    std::uint64_t seed = 0;
};

inline ultrametric_report ultrametric_stats(const gibbs_table& table, const model_t& m,
                                            const size_params& size, std::size_t triples,
                                            std::uint64_t seed) {
    const auto draws = draw_configs(table, 3 * triples, seed);
    ultrametric_report rep;
    rep.beta = table.beta;
    rep.N = size.N;
    rep.triples = triples;
    rep.seed = seed;
    for (std::size_t k = 0; k < triples; ++k) {
        const config_t a = draws[3 * k], b = draws[3 * k + 1], c = draws[3 * k + 2];
        const double qab = m.alpha(size.overlap(a, b));
        const double qac = m.alpha(size.overlap(a, c));
        const double qbc = m.alpha(size.overlap(b, c));
        if (triple_violates_ultrametricity(qab, qac, qbc)) ++rep.violations;
    }
    rep.fraction = static_cast<double>(rep.violations) / static_cast<double>(triples);
    rep.se = std::sqrt(std::max(rep.fraction * (1.0 - rep.fraction), 1e-12) /
                       static_cast<double>(triples));
    return rep;
}

/// Witness (k, s): sigma_s = tau_s for some s entering at level k although
/// the two configurations differ inside A_k.
struct nonultra_witness {
    int level;
    int coordinate;
};

inline std::optional<nonultra_witness> is_nonultrametric_couple(const size_params& size,
                                                                const chain_t& chain,
                                                                config_t sigma, config_t tau) {
    for (int k = 1; k <= chain.levels(); ++k) {
        bool differ_inside = false;
        for (int i : chain.level_set(k).members())
            if (size.coord(sigma, i) != size.coord(tau, i)) { differ_inside = true; break; }
        if (!differ_inside) continue;
        for (int s : chain.level_increment(k).members())
            if (size.coord(sigma, s) == size.coord(tau, s)) return nonultra_witness{k, s};
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Marked pair measures (the finite-N realization of the pair point measure)
// ---------------------------------------------------------------------------

struct pair_atom {
    double w1;
    double w2;
    subset_t mark;
};

struct marked_pair_measure_t {
    std::vector<pair_atom> atoms;  // one per unordered pair, no diagonal
    double coverage = 0.0;         // Gibbs mass of the included configurations
};

/// Smallest weight-ranked prefix of configurations reaching the coverage
/// target, with one atom per unordered pair marked by the overlap.
inline marked_pair_measure_t marked_pair_measure(const gibbs_table& table, const model_t& m,
                                                 const size_params& size,
                                                 double coverage_target = 0.999) {
    (void)m;
    if (!(coverage_target > 0.0 && coverage_target <= 1.0))
        fail(errc::bad_pair, "coverage target must lie in (0, 1]");
    std::vector<std::uint32_t> order(table.weights.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (table.weights[a] != table.weights[b]) return table.weights[a] > table.weights[b];
        return a < b;
    });
    marked_pair_measure_t out;
    kahan_accumulator mass;
    std::size_t take = 0;
    while (take < order.size() && mass.value() < coverage_target) {
        mass.add(table.weights[order[take]]);
        ++take;
    }
    out.coverage = mass.value();
    for (std::size_t i = 0; i < take; ++i) {
        for (std::size_t k = i + 1; k < take; ++k) {
            const config_t a = static_cast<config_t>(order[i]);
            const config_t b = static_cast<config_t>(order[k]);
            out.atoms.push_back(
                {table.weights[a], table.weights[b], size.overlap(a, b)});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Layer partition function fluctuations
// ---------------------------------------------------------------------------

/// log(Z_sigma / E Z_sigma) for the high-temperature tail beyond level m,
/// with the prefix sigma in Sigma_{N, A_m} fixed. Plain (unaveraged) sums,
/// matching E Z_sigma = exp(sum_{j>m} beta^2 Delta_j N / 2 + G_j N ln2).
inline double layer_fluctuation(const field_realization& real, const chain_t& chain,
                                const level_data& levels, int m, double beta,
                                config_t sigma_prefix) {
    const int K = chain.levels();
    if (m < 0 || m > K) fail(errc::chain_mismatch, "level out of range");
    const double lo = (m >= 1) ? levels.beta[static_cast<std::size_t>(m - 1)] : 0.0;
    const double hi = (m < K) ? levels.beta[static_cast<std::size_t>(m)]
                              : std::numeric_limits<double>::infinity();
    if (!(beta > lo && beta < hi))
        fail(errc::regime_mismatch, "beta must lie strictly inside (beta_m, beta_{m+1})");
    if (m == K) return 0.0;

    const auto part = level_partition(real, chain);
    std::vector<std::size_t> tail_tables;
    for (int j = m; j < K; ++j)
        for (std::size_t t : part[static_cast<std::size_t>(j)]) tail_tables.push_back(t);

    const subset_t tail_coords = real.model().full_set() - chain.level_set(m);
    std::vector<int> tshift, tbits;
    for (int i : tail_coords.members()) {
        tshift.push_back(real.size().offset[static_cast<std::size_t>(i - 1)]);
        tbits.push_back(real.size().bits[static_cast<std::size_t>(i - 1)]);
    }
    std::uint64_t tail_count = 1;
    for (int b : tbits) tail_count <<= b;

    config_t prefix_masked = sigma_prefix;
    for (std::size_t k = 0; k < tshift.size(); ++k)
        prefix_masked &= ~(((1u << tbits[k]) - 1u) << tshift[k]);

    auto tail_config = [&](std::uint64_t t) {
        config_t c = prefix_masked;
        int consumed = 0;
        for (std::size_t k = 0; k < tshift.size(); ++k) {
            c |= static_cast<config_t>((t >> consumed) & ((std::uint64_t{1} << tbits[k]) - 1))
                 << tshift[k];
            consumed += tbits[k];
        }
        return c;
    };

    // two passes: max exponent, then the shifted sum
    double mx = -std::numeric_limits<double>::infinity();
    for (std::uint64_t t = 0; t < tail_count; ++t) {
        const config_t c = tail_config(t);
        double e = 0.0;
        for (std::size_t tt : tail_tables) e += real.entry(tt, c);
        mx = std::max(mx, beta * e);
    }
    kahan_accumulator acc;
    for (std::uint64_t t = 0; t < tail_count; ++t) {
        const config_t c = tail_config(t);
        double e = 0.0;
        for (std::size_t tt : tail_tables) e += real.entry(tt, c);
        acc.add(std::exp(beta * e - mx));
    }
    const double log_z = mx + std::log(acc.value());

    double log_ez = 0.0;
    for (int j = m; j < K; ++j)
        log_ez += 0.5 * beta * beta * levels.delta[static_cast<std::size_t>(j)] * real.size().N +
                  levels.g[static_cast<std::size_t>(j)] * real.size().N * ln2;
    return log_z - log_ez;
}

} // namespace grem
