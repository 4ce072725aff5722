#pragma once

// Statistical comparison of finite-N empirical objects against the predicted
// limits: Poisson window counts, two-sample KS with permutation p-values,
// chain-mark mass aggregation, suppression/propagation probes, and moment
// comparisons of normalized weights.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "grem/cascade.hpp"
#include "grem/chain.hpp"
#include "grem/errors.hpp"
#include "grem/field.hpp"
#include "grem/gibbs.hpp"
#include "grem/model.hpp"
#include "grem/numeric.hpp"
#include "grem/parallel.hpp"
#include "grem/rng.hpp"

namespace grem {

struct comparison_report {
    std::string test;
    double statistic = 0.0;
    double expected = 0.0;
    double se = 0.0;
    double z = 0.0;
    bool pass = false;
    std::uint64_t replicas = 0;
    std::uint64_t seed = 0;
    std::string details;
};

// ---------------------------------------------------------------------------
// Poisson window counts
// ---------------------------------------------------------------------------

/// z-scores of the count mean and count variance against Poisson(mean);
/// the dispersion index rides along in the details.
inline std::vector<comparison_report> poisson_count_test(const std::vector<int>& counts,
                                                         double expected_mean,
                                                         std::uint64_t seed = 0) {
    if (counts.size() < 100) fail(errc::bad_pair, "poisson test needs at least 100 counts");
    const double r = static_cast<double>(counts.size());
    std::vector<double> vals(counts.begin(), counts.end());
    const double mean = mean_of(vals);
    const double var = variance_of(vals);

    comparison_report mean_rep;
    mean_rep.test = "poisson_mean";
    mean_rep.statistic = mean;
    mean_rep.expected = expected_mean;
    mean_rep.se = std::sqrt(expected_mean / r);
    mean_rep.z = (mean - expected_mean) / mean_rep.se;
    mean_rep.pass = std::fabs(mean_rep.z) <= 3.0;
    mean_rep.replicas = counts.size();
    mean_rep.seed = seed;

    comparison_report var_rep;
    var_rep.test = "poisson_variance";
    var_rep.statistic = var;
    var_rep.expected = expected_mean;
    var_rep.se = std::sqrt((expected_mean + 2.0 * expected_mean * expected_mean) / r);
    var_rep.z = (var - expected_mean) / var_rep.se;
    var_rep.pass = std::fabs(var_rep.z) <= 3.0;
    var_rep.replicas = counts.size();
    var_rep.seed = seed;
    var_rep.details = "dispersion=" + std::to_string(mean > 0.0 ? var / mean : 0.0);

    return {mean_rep, var_rep};
}

// ---------------------------------------------------------------------------
// Two-sample Kolmogorov-Smirnov with permutation p-value
// ---------------------------------------------------------------------------

namespace detail {

inline double ks_statistic_sorted(const std::vector<double>& a, const std::vector<double>& b) {
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, k = 0;
    double d = 0.0;
    while (i < a.size() && k < b.size()) {
        const double x = std::min(a[i], b[k]);
        while (i < a.size() && a[i] <= x) ++i;
        while (k < b.size() && b[k] <= x) ++k;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(k) / nb));
    }
    return d;
}

} // namespace detail

struct ks_result {
    double distance = 0.0;
    double p_value = 1.0;
    std::uint64_t permutations = 0;
    std::uint64_t seed = 0;
};

inline ks_result ks_distance(std::vector<double> a, std::vector<double> b, std::uint64_t seed = 1,
                             std::uint64_t permutations = 200) {
    if (a.empty() || b.empty()) fail(errc::bad_pair, "KS needs nonempty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    ks_result res;
    res.distance = detail::ks_statistic_sorted(a, b);
    res.permutations = permutations;
    res.seed = seed;

    std::vector<double> pool(a);
    pool.insert(pool.end(), b.begin(), b.end());
    const counter_rng rng(seed);
    std::uint64_t ge = 0;
    for (std::uint64_t p = 0; p < permutations; ++p) {
        const std::uint64_t stream = substream(streams::permutation, p);
        std::vector<double> shuffled = pool;
        for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
            const std::size_t k = rng.word(stream, i) % (i + 1);
            std::swap(shuffled[i], shuffled[k]);
        }
        std::vector<double> pa(shuffled.begin(), shuffled.begin() + a.size());
        std::vector<double> pb(shuffled.begin() + a.size(), shuffled.end());
        std::sort(pa.begin(), pa.end());
        std::sort(pb.begin(), pb.end());
        if (detail::ks_statistic_sorted(pa, pb) >= res.distance) ++ge;
    }
    res.p_value = static_cast<double>(1 + ge) / static_cast<double>(1 + permutations);
    return res;
}

// ---------------------------------------------------------------------------
// Mark mass aggregation
// ---------------------------------------------------------------------------

struct mark_mass_t {
    std::vector<std::pair<subset_t, double>> by_mark;  // ascending mask order
    double off_chain = 0.0;
    double total = 0.0;
};

inline mark_mass_t mark_mass_report(const marked_pair_measure_t& pairs, const chain_t& chain) {
    std::map<std::uint32_t, double> agg;
    for (const auto& atom : pairs.atoms) agg[atom.mark.bits] += atom.w1 * atom.w2;
    mark_mass_t out;
    for (const auto& [mask, mass] : agg) {
        out.by_mark.emplace_back(subset_t{mask}, mass);
        out.total += mass;
        const bool on_chain =
            std::find(chain.sets.begin(), chain.sets.end(), subset_t{mask}) != chain.sets.end();
        if (!on_chain) out.off_chain += mass;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Replica experiment drivers
// ---------------------------------------------------------------------------

/// Counts of configurations with X_sigma - a_N in [lo, hi), one per replica.
inline std::vector<int> extremal_count_experiment(const model_t& m, int N, double lo, double hi,
                                                  std::uint64_t replicas, std::uint64_t seed,
                                                  int threads = 0) {
    const auto solved = build_chain(m);
    const auto size = make_size(m, N);
    const auto cent = compute_centering(solved.levels, N, 2.0 * solved.levels.beta.back());
    return run_replicas<int>(
        replicas,
        [&](std::uint64_t r) {
            const auto real = sample_field(m, size, replica_seed(seed, r));
            int c = 0;
            for (std::uint64_t cfg = 0; cfg < size.config_count; ++cfg) {
                const double v = real.energy(static_cast<config_t>(cfg)) - cent.a_n;
                if (v >= lo && v < hi) ++c;
            }
            return c;
        },
        threads);
}

/// Recentered maximum per replica.
inline std::vector<double> max_energy_samples(const model_t& m, int N, std::uint64_t replicas,
                                              std::uint64_t seed, int threads = 0) {
    const auto solved = build_chain(m);
    const auto size = make_size(m, N);
    const auto cent = compute_centering(solved.levels, N, 2.0 * solved.levels.beta.back());
    return run_replicas<double>(
        replicas,
        [&](std::uint64_t r) {
            const auto real = sample_field(m, size, replica_seed(seed, r));
            return max_recentered(real, cent);
        },
        threads);
}

/// Maximum cascade point per sample (for the extremal-law comparison).
inline std::vector<double> cascade_max_samples(const cascade_spec& cs, std::uint64_t replicas,
                                               std::uint64_t seed, int threads = 0) {
    return run_replicas<double>(
        replicas,
        [&](std::uint64_t r) {
            const auto sample = sample_cascade(cs, replica_seed(seed, r));
            double mx = -std::numeric_limits<double>::infinity();
            for (double y : sample.leaf_y) mx = std::max(mx, y);
            return mx;
        },
        threads);
}

/// Per-replica sums of Gibbs weight powers (exact over the full table).
inline std::vector<std::vector<double>> gibbs_weight_moments(const model_t& m, int N, double beta,
                                                             const std::vector<int>& orders,
                                                             std::uint64_t replicas,
                                                             std::uint64_t seed, int threads = 0) {
    const auto size = make_size(m, N);
    return run_replicas<std::vector<double>>(
        replicas,
        [&](std::uint64_t r) {
            const auto real = sample_field(m, size, replica_seed(seed, r));
            const auto table = gibbs_table_of(real, beta);
            std::vector<double> row;
            for (int k : orders) {
                kahan_accumulator acc;
                for (double w : table.weights) acc.add(std::pow(w, k));
                row.push_back(acc.value());
            }
            return row;
        },
        threads);
}

/// Pooled ultrametricity violation fraction over disorder replicas.
inline ultrametric_report ultrametric_violation_batch(const model_t& m, int N, double beta,
                                                      std::size_t triples_per_replica,
                                                      std::uint64_t replicas, std::uint64_t seed,
                                                      int threads = 0) {
    const auto size = make_size(m, N);
    const auto counts = run_replicas<std::uint64_t>(
        replicas,
        [&](std::uint64_t r) {
            const auto real = sample_field(m, size, replica_seed(seed, r));
            const auto table = gibbs_table_of(real, beta);
            const auto rep = ultrametric_stats(table, m, size, triples_per_replica,
                                               replica_seed(seed ^ 0x5eedULL, r));
            return rep.violations;
        },
        threads);
    ultrametric_report pooled;
    pooled.beta = beta;
    pooled.N = N;
    pooled.seed = seed;
    pooled.triples = replicas * triples_per_replica;
    for (std::uint64_t v : counts) pooled.violations += v;
    pooled.fraction = static_cast<double>(pooled.violations) / static_cast<double>(pooled.triples);
    pooled.se = std::sqrt(std::max(pooled.fraction * (1.0 - pooled.fraction), 1e-12) /
                          static_cast<double>(pooled.triples));
    return pooled;
}

// ---------------------------------------------------------------------------
// Structure probes (suppression / propagation)
// ---------------------------------------------------------------------------

struct probe_point {
    int N;
    double probability;
    double se;
};

/// Fraction of disorder replicas in which some pair of window-relevant
/// configurations (all centered partial sums inside [lo, hi]) has overlap
/// exactly `target`. Suppressed structures decay along the N grid;
/// persistent ones do not.
inline std::vector<probe_point> structure_probe(const model_t& m, subset_t target, double lo,
                                                double hi, const std::vector<int>& n_grid,
                                                std::uint64_t replicas, std::uint64_t seed,
                                                int threads = 0) {
    const auto solved = build_chain(m);
    std::vector<probe_point> out;
    for (int N : n_grid) {
        const auto size = make_size(m, N);
        const auto cent = compute_centering(solved.levels, N, 2.0 * solved.levels.beta.back());
        const auto found_flags = run_replicas<char>(
            replicas,
            [&](std::uint64_t r) {
                const auto real = sample_field(m, size, replica_seed(seed + N, r));
                const auto part = level_partition(real, solved.chain);
                std::vector<config_t> relevant;
                for (std::uint64_t cfg = 0; cfg < size.config_count; ++cfg) {
                    double running = 0.0;
                    bool inside = true;
                    for (std::size_t j = 0; j < part.size() && inside; ++j) {
                        double lv = 0.0;
                        for (std::size_t t : part[j]) lv += real.entry(t, static_cast<config_t>(cfg));
                        running += lv - cent.a_level[j];
                        inside = running >= lo && running <= hi;
                    }
                    if (inside) relevant.push_back(static_cast<config_t>(cfg));
                }
                for (std::size_t i = 0; i < relevant.size(); ++i)
                    for (std::size_t k = i + 1; k < relevant.size(); ++k)
                        if (size.overlap(relevant[i], relevant[k]) == target) return char{1};
                return char{0};
            },
            threads);
        std::uint64_t hits = 0;
        for (char f : found_flags) hits += f;
        const double p = static_cast<double>(hits) / static_cast<double>(replicas);
        out.push_back(
            {N, p, std::sqrt(std::max(p * (1.0 - p), 1e-12) / static_cast<double>(replicas))});
    }
    return out;
}

/// Fraction of pair-measure mass carrying a given mark (exactly zero for
/// off-chain marks on cascade limit laws).
inline double mark_mass_fraction(const marked_pair_measure_t& pairs, subset_t target) {
    double hit = 0.0, total = 0.0;
    for (const auto& atom : pairs.atoms) {
        total += atom.w1 * atom.w2;
        if (atom.mark == target) hit += atom.w1 * atom.w2;
    }
    return total > 0.0 ? hit / total : 0.0;
}

// ---------------------------------------------------------------------------
// Moment comparison of normalized weight collections
// ---------------------------------------------------------------------------

/// Precomputed per-replica moment values, one vector per order.
inline std::vector<comparison_report> moment_check_values(
    const std::vector<int>& orders, const std::vector<std::vector<double>>& emp_by_order,
    const std::vector<std::vector<double>>& ora_by_order, std::uint64_t seed = 0) {
    std::vector<comparison_report> out;
    for (std::size_t o = 0; o < orders.size(); ++o) {
        const auto& e = emp_by_order[o];
        const auto& a = ora_by_order[o];
        comparison_report rep;
        rep.test = "moment_k" + std::to_string(orders[o]);
        rep.statistic = mean_of(e);
        rep.expected = mean_of(a);
        const double se_e = std::sqrt(variance_of(e) / static_cast<double>(e.size()));
        const double se_a = std::sqrt(variance_of(a) / static_cast<double>(a.size()));
        rep.se = std::sqrt(se_e * se_e + se_a * se_a);
        rep.z = (rep.statistic - rep.expected) / rep.se;
        rep.pass = std::fabs(rep.z) <= 3.0;
        rep.replicas = e.size();
        rep.seed = seed;
        out.push_back(rep);
    }
    return out;
}

/// Spec-level entry point: replica collections of normalized weight lists on
/// both sides; E sum w^k compared at 3 joint SE for each order.
inline std::vector<comparison_report> moment_check(
    const std::vector<std::vector<double>>& weights_empirical,
    const std::vector<std::vector<double>>& weights_oracle, const std::vector<int>& orders,
    std::uint64_t seed = 0) {
    auto sums = [&](const std::vector<std::vector<double>>& lists) {
        std::vector<std::vector<double>> by_order(orders.size());
        for (const auto& w : lists) {
            for (std::size_t o = 0; o < orders.size(); ++o) {
                kahan_accumulator acc;
                for (double x : w) acc.add(std::pow(x, orders[o]));
                by_order[o].push_back(acc.value());
            }
        }
        return by_order;
    };
    return moment_check_values(orders, sums(weights_empirical), sums(weights_oracle), seed);
}

} // namespace grem
