#pragma once

// Finite-N realizations of the Gaussian field: seeded tables of the X^J,
// energy decompositions along a chain, the recentering sequences, extremal
// point extraction, and the T1/T2 thinning filters.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "grem/chain.hpp"
#include "grem/errors.hpp"
#include "grem/model.hpp"
#include "grem/rng.hpp"
#include "grem/subset.hpp"

namespace grem {

constexpr std::uint64_t enumeration_guard = std::uint64_t{1} << 28;

using config_t = std::uint32_t;

/// System size: per-coordinate bit widths gamma_i * N, packed into a single
/// machine word per configuration (coordinate i occupies bits
/// [offset_i, offset_i + bits_i)).
struct size_params {
    int n = 0;
    int N = 0;
    std::vector<int> bits;
    std::vector<int> offset;
    std::uint64_t config_count = 0;

    int coord(config_t c, int i) const {
        return static_cast<int>((c >> offset[static_cast<std::size_t>(i - 1)]) &
                                ((1u << bits[static_cast<std::size_t>(i - 1)]) - 1u));
    }

    /// Overlap q(sigma, tau): the coordinates where the two agree.
    subset_t overlap(config_t a, config_t b) const {
        subset_t q;
        for (int i = 1; i <= n; ++i)
            if (coord(a, i) == coord(b, i)) q = q | subset_t::single(i);
        return q;
    }
};

/// Validates the integrality constraint gamma_i * N and the enumeration guard.
inline size_params make_size(const model_t& m, int N) {
    size_params s;
    s.n = m.n();
    s.N = N;
    int total = 0;
    for (int i = 1; i <= m.n(); ++i) {
        const double raw = m.gamma_i(i) * N;
        const double rounded = std::round(raw);
        if (std::fabs(raw - rounded) > 1e-9 || rounded < 0.0)
            fail(errc::invalid_n, "gamma_" + std::to_string(i) + " * N = " + std::to_string(raw) +
                                      " is not a nonnegative integer");
        s.offset.push_back(total);
        s.bits.push_back(static_cast<int>(rounded));
        total += static_cast<int>(rounded);
    }
    if (total != N) fail(errc::invalid_n, "bit widths sum to " + std::to_string(total));
    if (N >= 63 || (std::uint64_t{1} << N) > enumeration_guard)
        fail(errc::size_guard, "2^" + std::to_string(N) + " configurations exceed the 2^28 guard");
    s.config_count = std::uint64_t{1} << N;
    return s;
}

/// Extracts the packed sub-configuration sigma_J (coordinates of J ascending).
struct projector_t {
    struct piece {
        int in_shift;
        config_t mask;
        int out_shift;
    };
    std::vector<piece> pieces;
    std::uint64_t index_count = 1;

    config_t operator()(config_t c) const {
        config_t out = 0;
        for (const piece& p : pieces) out |= ((c >> p.in_shift) & p.mask) << p.out_shift;
        return out;
    }
};

inline projector_t make_projector(const size_params& s, subset_t j) {
    projector_t p;
    int out = 0;
    for (int i : j.members()) {
        const int b = s.bits[static_cast<std::size_t>(i - 1)];
        if (b > 0)
            p.pieces.push_back({s.offset[static_cast<std::size_t>(i - 1)], (1u << b) - 1u, out});
        out += b;
    }
    p.index_count = std::uint64_t{1} << out;
    return p;
}

/// One table entry, evaluated lazily: a pure function of (seed, J, index).
inline double field_entry(std::uint64_t seed, subset_t j, double variance, std::uint64_t index) {
    const counter_rng rng(seed);
    const std::uint64_t stream = substream(streams::field_table, j.bits);
    return std::sqrt(variance) * normal_at(rng, stream, index);
}

namespace detail {

/// Sequential fill of a whole table; consumes both words of each Philox
/// block, entry k always coming from word k (bit-identical to field_entry).
inline void fill_table(std::vector<double>& table, std::uint64_t seed, subset_t j,
                       double variance) {
    const counter_rng rng(seed);
    const std::uint64_t stream = substream(streams::field_table, j.bits);
    const double sd = std::sqrt(variance);
    const std::size_t n = table.size();
    std::size_t k = 0;
    for (; k + 2 <= n; k += 2) {
        const auto block = rng.block(stream, k >> 1);
        table[k] = sd * normal_icdf(to_uniform01(block[0]));
        table[k + 1] = sd * normal_icdf(to_uniform01(block[1]));
    }
    for (; k < n; ++k) table[k] = sd * normal_icdf(to_uniform01(rng.word(stream, k)));
}

} // namespace detail

/// One disorder sample: the full set of tables X^J. Fully reproducible from
/// (model, N, seed); immutable after construction.
class field_realization {
public:
    field_realization(model_t model, size_params size, std::uint64_t seed)
        : model_(std::move(model)), size_(size), seed_(seed) {
        for (const auto& [j, w] : model_.weights()) {
            sets_.push_back(j);
            variance_.push_back(w * size_.N);
            projectors_.push_back(make_projector(size_, j));
        }
        tables_.resize(sets_.size());
        for (std::size_t t = 0; t < sets_.size(); ++t) {
            tables_[t].resize(projectors_[t].index_count);
            detail::fill_table(tables_[t], seed_, sets_[t], variance_[t]);
        }
    }

    const model_t& model() const { return model_; }
    const size_params& size() const { return size_; }
    std::uint64_t seed() const { return seed_; }
    const std::vector<subset_t>& sets() const { return sets_; }
    const std::vector<std::vector<double>>& tables() const { return tables_; }
    const projector_t& projector(std::size_t t) const { return projectors_[t]; }

    /// X^J_{sigma_J} for the t-th declared set.
    double entry(std::size_t t, config_t config) const {
        return tables_[t][projectors_[t](config)];
    }

    /// Total energy X_sigma.
    double energy(config_t config) const {
        double x = 0.0;
        for (std::size_t t = 0; t < sets_.size(); ++t) x += entry(t, config);
        return x;
    }

    /// Test hook: replace all tables by given values (sizes must match).
    void replace_tables(std::vector<std::vector<double>> tables) {
        for (std::size_t t = 0; t < tables_.size(); ++t)
            if (tables[t].size() != tables_[t].size())
                fail(errc::size_guard, "replacement table size mismatch");
        tables_ = std::move(tables);
    }

private:
    model_t model_;
    size_params size_;
    std::uint64_t seed_;
    std::vector<subset_t> sets_;
    std::vector<double> variance_;
    std::vector<projector_t> projectors_;
    std::vector<std::vector<double>> tables_;
};

inline field_realization sample_field(const model_t& m, const size_params& size,
                                      std::uint64_t seed) {
    return field_realization(m, size, seed);
}

// ---------------------------------------------------------------------------
// Recentering
// ---------------------------------------------------------------------------

constexpr double two_pi = 6.283185307179586;

/// a_{N,j}(A) for a level with temperature beta_j and weight increment
/// alpha_hat: the recentering that turns the level's exceedance counts into
/// the exponential-intensity point process.
inline double level_centering_term(double beta_j, double alpha_hat, int N) {
    return beta_j * alpha_hat * N - std::log(static_cast<double>(N)) / (2.0 * beta_j) -
           std::log(beta_j * std::sqrt(two_pi * alpha_hat)) / beta_j;
}

struct centering_t {
    int N = 0;
    double beta = 0.0;              // query temperature for the mixed form
    int regime_m = 0;
    std::vector<double> a_level;    // a_{N,j}, j = 1..K
    double a_n = 0.0;               // a_N = a_N^K
    double a_n_m = 0.0;             // mixed form at (beta, m)
};

/// Analytic; needs only the level data and N, so it also serves sizes far
/// beyond the enumeration guard.
inline centering_t compute_centering(const level_data& levels, int N, double beta) {
    centering_t c;
    c.N = N;
    c.beta = beta;
    for (int j = 0; j < levels.levels(); ++j)
        c.a_level.push_back(level_centering_term(levels.beta[static_cast<std::size_t>(j)],
                                                 levels.delta[static_cast<std::size_t>(j)], N));
    for (double a : c.a_level) c.a_n += a;
    c.regime_m = phase_points(levels, beta).m;
    c.a_n_m = 0.0;
    for (int j = 0; j < levels.levels(); ++j) {
        if (j < c.regime_m)
            c.a_n_m += c.a_level[static_cast<std::size_t>(j)];
        else
            c.a_n_m += 0.5 * beta * levels.delta[static_cast<std::size_t>(j)] * N +
                       levels.g[static_cast<std::size_t>(j)] * N * ln2 / beta;
    }
    return c;
}

// ---------------------------------------------------------------------------
// Energies along a chain
// ---------------------------------------------------------------------------

/// Which declared sets enter at which chain level (J enters at the first j
/// with J inside A_j).
inline std::vector<std::vector<std::size_t>> level_partition(const field_realization& real,
                                                             const chain_t& chain) {
    std::vector<std::vector<std::size_t>> per_level(static_cast<std::size_t>(chain.levels()));
    for (std::size_t t = 0; t < real.sets().size(); ++t) {
        for (int j = 1; j <= chain.levels(); ++j) {
            if (real.sets()[t].subset_of(chain.level_set(j)) &&
                !real.sets()[t].subset_of(chain.level_set(j - 1))) {
                per_level[static_cast<std::size_t>(j - 1)].push_back(t);
                break;
            }
        }
    }
    return per_level;
}

struct energy_breakdown {
    double total;                  // X_sigma
    std::vector<double> level;     // X_{sigma(1..j)}
    std::vector<double> centered;  // X_{sigma(1..j)} - a_{N,j}
    std::vector<double> hat;       // partial sums of the centered levels
};

inline energy_breakdown energies(const field_realization& real, const chain_t& chain,
                                 const centering_t& centering, config_t sigma) {
    const auto part = level_partition(real, chain);
    energy_breakdown out;
    out.total = 0.0;
    double running = 0.0;
    for (std::size_t j = 0; j < part.size(); ++j) {
        double lv = 0.0;
        for (std::size_t t : part[j]) lv += real.entry(t, sigma);
        out.level.push_back(lv);
        out.centered.push_back(lv - centering.a_level[j]);
        running += out.centered.back();
        out.hat.push_back(running);
        out.total += lv;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Extremal points
// ---------------------------------------------------------------------------

struct extremal_point {
    config_t sigma;
    double value;  // hat-X_K = X_sigma - a_N
};

/// All configurations with recentered energy in [lo, hi), sorted descending.
/// Streaming enumeration; memory proportional to the output.
inline std::vector<extremal_point> extremal_points(const field_realization& real,
                                                   const centering_t& centering, double lo,
                                                   double hi) {
    std::vector<extremal_point> out;
    for (std::uint64_t c = 0; c < real.size().config_count; ++c) {
        const double v = real.energy(static_cast<config_t>(c)) - centering.a_n;
        if (v >= lo && v < hi) out.push_back({static_cast<config_t>(c), v});
    }
    std::sort(out.begin(), out.end(), [](const extremal_point& a, const extremal_point& b) {
        if (a.value != b.value) return a.value > b.value;
        return a.sigma < b.sigma;
    });
    return out;
}

/// max over configurations of X_sigma - a_N.
inline double max_recentered(const field_realization& real, const centering_t& centering) {
    double best = -std::numeric_limits<double>::infinity();
    if (real.sets().size() == 1) {
        for (double v : real.tables()[0]) best = std::max(best, v);
        return best - centering.a_n;
    }
    for (std::uint64_t c = 0; c < real.size().config_count; ++c)
        best = std::max(best, real.energy(static_cast<config_t>(c)));
    return best - centering.a_n;
}

// ---------------------------------------------------------------------------
// Thinning filters T1 / T2
// ---------------------------------------------------------------------------

struct thinning_result {
    std::vector<std::pair<subset_t, bool>> t1;  // per critical A at the level
    std::vector<std::pair<subset_t, bool>> t2;  // per A with positive new weight
    bool degenerate_t1 = false;
};

/// T1 is jointly unsatisfiable when two criticals split the level's family
/// into complementary halves (their difference statistics are exact
/// negatives of each other).
inline bool t1_degenerate(const std::vector<critical_subset>& criticals) {
    for (std::size_t i = 0; i < criticals.size(); ++i)
        for (std::size_t k = i + 1; k < criticals.size(); ++k)
            if (criticals[i].family == criticals[k].family_c &&
                criticals[i].family_c == criticals[k].family)
                return true;
    return false;
}

inline thinning_result thinning_filter(const field_realization& real, const chain_t& chain,
                                       const critical_report& criticals, int k, double eps1,
                                       double eps2, config_t sigma) {
    if (k < 1 || k > chain.levels()) fail(errc::chain_mismatch, "level out of range");
    if (!(eps1 > 0.0) || !(eps2 > 0.0)) fail(errc::bad_pair, "thinning epsilons must be > 0");
    const model_t& m = real.model();
    const int N = real.size().N;
    const double sqrt_n = std::sqrt(static_cast<double>(N));
    const subset_t prev = chain.level_set(k - 1);
    const subset_t inc = chain.level_increment(k);

    auto sum_over = [&](const std::vector<subset_t>& family) {
        double s = 0.0;
        for (subset_t j : family) {
            for (std::size_t t = 0; t < real.sets().size(); ++t)
                if (real.sets()[t] == j) { s += real.entry(t, sigma); break; }
        }
        return s;
    };

    thinning_result out;
    const auto& crits = criticals.per_level[static_cast<std::size_t>(k - 1)];
    out.degenerate_t1 = t1_degenerate(crits);
    for (const auto& c : crits) {
        const double stat =
            sum_over(c.family) / c.alpha_hat - sum_over(c.family_c) / c.alpha_hat_c;
        out.t1.emplace_back(c.a, stat <= -eps1 * sqrt_n);
    }

    // beta_k via the solved level; recompute from the model to stay
    // independent of how levels were produced.
    const double beta_k = rho(m, prev, chain.level_set(k));
    for_each_subset_of(inc, [&](subset_t a) {
        if (a == inc || a.is_empty()) return;
        const subset_t ext = a | prev;
        const double ahat = m.alpha(ext) - m.alpha(prev);
        if (ahat <= 0.0) return;
        const double s = sum_over(m.family_between(ext, prev));
        out.t2.emplace_back(a, s <= beta_k * ahat * (1.0 + eps2) * N);
    });
    return out;
}

} // namespace grem
