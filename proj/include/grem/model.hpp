#pragma once

// Nonhierarchical GREM instances: coordinate proportions gamma_i and subset
// weights a_J, with the derived lattice functionals alpha(A), gamma(A) and
// the family P_A = {J subset of A : a_J > 0}.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "grem/errors.hpp"
#include "grem/subset.hpp"

#include "json.hpp"

namespace grem {

constexpr double normalization_tol = 1e-9;

/// Raw model draft, as read from a file or assembled in code.
struct model_spec {
    int n = 0;
    std::vector<double> gamma;                          // n entries
    std::vector<std::pair<subset_t, double>> weights;   // (J, a_J), a_J > 0
    bool renormalize = false;
};

struct validation_issue {
    errc code;
    std::string message;
};

/// A validated model. Immutable; safe to share across threads.
///
/// Weight and proportion totals are forced to exactly 1.0 by compensating the
/// last entry after optional renormalization, so alpha(I) == 1.0 and
/// gamma(I) == 1.0 hold as written.
class model_t {
public:
    model_t(int n, std::vector<double> gamma, std::vector<std::pair<subset_t, double>> weights,
            bool was_renormalized)
        : n_(n), gamma_(std::move(gamma)), weights_(std::move(weights)),
          renormalized_(was_renormalized) {
        build_tables();
    }

    int n() const { return n_; }
    subset_t full_set() const { return subset_t::full(n_); }
    bool was_renormalized() const { return renormalized_; }
    double gamma_i(int i) const { return gamma_[static_cast<std::size_t>(i - 1)]; }
    const std::vector<double>& gammas() const { return gamma_; }
    /// Declared positive-weight subsets in ascending mask order.
    const std::vector<std::pair<subset_t, double>>& weights() const { return weights_; }

    double alpha(subset_t a) const { return alpha_[a.bits]; }
    double gamma(subset_t a) const { return gamma_sum_[a.bits]; }

    /// P_A = {J subset of A : a_J > 0}.
    std::vector<subset_t> family(subset_t a) const {
        std::vector<subset_t> out;
        for (const auto& [j, w] : weights_)
            if (j.subset_of(a)) out.push_back(j);
        return out;
    }

    /// P_A \ P_B for B subset of A.
    std::vector<subset_t> family_between(subset_t a, subset_t b) const {
        std::vector<subset_t> out;
        for (const auto& [j, w] : weights_)
            if (j.subset_of(a) && !j.subset_of(b)) out.push_back(j);
        return out;
    }

private:
    void build_tables() {
        const std::size_t count = std::size_t{1} << n_;
        alpha_.assign(count, 0.0);
        gamma_sum_.assign(count, 0.0);
        // Direct summation in declaration order keeps the compensated totals
        // exact at the full set.
        for (std::uint32_t m = 0; m < count; ++m) {
            double a = 0.0;
            for (const auto& [j, w] : weights_)
                if (j.subset_of(subset_t{m})) a += w;
            alpha_[m] = a;
            double g = 0.0;
            for (int i = 1; i <= n_; ++i)
                if (subset_t{m}.contains(i)) g += gamma_[static_cast<std::size_t>(i - 1)];
            gamma_sum_[m] = g;
        }
    }

    int n_;
    std::vector<double> gamma_;
    std::vector<std::pair<subset_t, double>> weights_;
    bool renormalized_;
    std::vector<double> alpha_;
    std::vector<double> gamma_sum_;
};

struct validation_result {
    std::optional<model_t> model;
    std::vector<validation_issue> issues;
    bool ok() const { return model.has_value(); }
};

namespace detail {

/// Rescale to total 1 and compensate the last entry so the running sum in
/// declaration order lands on exactly 1.0 (Sterbenz: 1 - s is exact for
/// s in [0.5, 2]).
inline void force_exact_total(std::vector<double>& v) {
    double total = 0.0;
    for (double x : v) total += x;
    for (double& x : v) x /= total;
    double prefix = 0.0;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) prefix += v[i];
    v.back() = 1.0 - prefix;
}

} // namespace detail

/// Checks all model invariants; on success returns the validated model.
/// With spec.renormalize set, weight and proportion sums are rescaled to 1
/// regardless of how far off they are; otherwise sums must already be within
/// 1e-9 (they are still compensated to exactly 1 afterwards).
inline validation_result validate_model(const model_spec& spec) {
    validation_result res;
    auto issue = [&](errc c, std::string m) { res.issues.push_back({c, std::move(m)}); };

    if (spec.n < 1 || spec.n > max_coordinates) {
        issue(errc::n_too_large, "n must be in [1, 20], got " + std::to_string(spec.n));
        return res;
    }
    if (static_cast<int>(spec.gamma.size()) != spec.n) {
        issue(errc::parse_error, "gamma must have n entries");
        return res;
    }
    for (int i = 1; i <= spec.n; ++i)
        if (!(spec.gamma[static_cast<std::size_t>(i - 1)] > 0.0))
            issue(errc::parse_error, "gamma_" + std::to_string(i) + " must be > 0");

    const subset_t full = subset_t::full(spec.n);
    double weight_sum = 0.0;
    subset_t covered;
    std::vector<std::pair<subset_t, double>> weights;
    for (const auto& [j, w] : spec.weights) {
        if (j.is_empty() && w != 0.0) {
            issue(errc::empty_set_weight, "the empty set must carry weight 0");
            continue;
        }
        if (!j.subset_of(full)) {
            issue(errc::parse_error, "weight set " + j.str() + " not inside I");
            continue;
        }
        if (w <= 0.0) {
            if (w < 0.0) issue(errc::parse_error, "negative weight on " + j.str());
            continue; // zero-weight entries are dropped
        }
        weights.emplace_back(j, w);
        weight_sum += w;
        covered = covered | j;
    }
    std::sort(weights.begin(), weights.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < weights.size(); ++i)
        if (weights[i].first == weights[i - 1].first)
            issue(errc::parse_error, "duplicate weight set " + weights[i].first.str());

    double gamma_sum = 0.0;
    for (double g : spec.gamma) gamma_sum += g;

    if (!spec.renormalize) {
        if (std::fabs(weight_sum - 1.0) > normalization_tol)
            issue(errc::non_normalized,
                  "sum of a_J is " + std::to_string(weight_sum) + ", off by more than 1e-9");
        if (std::fabs(gamma_sum - 1.0) > normalization_tol)
            issue(errc::non_normalized,
                  "sum of gamma_i is " + std::to_string(gamma_sum) + ", off by more than 1e-9");
    } else if (weight_sum <= 0.0 || gamma_sum <= 0.0) {
        issue(errc::non_normalized, "cannot renormalize a zero total");
    }

    if (covered != full) {
        for (int i = 1; i <= spec.n; ++i)
            if (!covered.contains(i))
                issue(errc::uncovered_coordinate,
                      "coordinate " + std::to_string(i) + " appears in no positive-weight J");
    }

    if (!res.issues.empty()) return res;

    std::vector<double> gamma = spec.gamma;
    detail::force_exact_total(gamma);
    std::vector<double> wvals(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) wvals[i] = weights[i].second;
    detail::force_exact_total(wvals);
    for (std::size_t i = 0; i < weights.size(); ++i) weights[i].second = wvals[i];

    const bool touched = spec.renormalize &&
                         (std::fabs(weight_sum - 1.0) > 0.0 || std::fabs(gamma_sum - 1.0) > 0.0);
    res.model.emplace(spec.n, std::move(gamma), std::move(weights), touched);
    return res;
}

/// Validate and throw on the first problem. Convenience for fixtures.
inline model_t validate_or_throw(const model_spec& spec) {
    auto res = validate_model(spec);
    if (!res.ok()) fail(res.issues.front().code, res.issues.front().message);
    return *std::move(res.model);
}

struct subset_functionals_t {
    double alpha;
    double gamma;
    std::vector<subset_t> family;
};

inline subset_functionals_t subset_functionals(const model_t& m, subset_t a) {
    if (!a.subset_of(m.full_set())) fail(errc::bad_pair, "A must be a subset of I");
    return {m.alpha(a), m.gamma(a), m.family(a)};
}

// ---------------------------------------------------------------------------
// Irreducibility conditions c and c'
// ---------------------------------------------------------------------------

struct irreducibility_witness {
    char condition;       // 'c' or 'p' (for c')
    int level;            // j
    subset_t a;           // the failing A (condition c only)
    std::string detail;
};

struct irreducibility_report {
    bool condition_c = true;
    bool condition_c_prime = true;
    std::vector<irreducibility_witness> witnesses;
    bool irreducible() const { return condition_c && condition_c_prime; }
};

/// Condition c quantifies over strict A inside A_j \ A_{j-1} that bring new
/// weight (alpha-hat_j(A) > 0); subsets with no weight of their own have an
/// empty J' candidate family and carry no structure to connect.
inline irreducibility_report check_irreducibility(const model_t& m, const chain_t& chain) {
    require_valid_chain(chain, m.n());
    irreducibility_report rep;

    for (int j = 1; j <= chain.levels(); ++j) {
        const subset_t prev = chain.level_set(j - 1);
        const subset_t cur = chain.level_set(j);
        const subset_t inc = cur - prev;
        for_each_subset_of(inc, [&](subset_t a) {
            if (a == inc) return; // strict subsets only
            const subset_t a_ext = a | prev;
            if (m.alpha(a_ext) - m.alpha(prev) <= 0.0) return;
            const auto j_candidates = m.family_between(cur, a_ext);
            const auto jp_candidates = m.family_between(a_ext, prev);
            bool found = false;
            for (subset_t J : j_candidates) {
                for (subset_t Jp : jp_candidates) {
                    if (!((J & Jp) - prev).is_empty()) { found = true; break; }
                }
                if (found) break;
            }
            if (!found) {
                rep.condition_c = false;
                rep.witnesses.push_back({'c', j, a,
                                         "no linking pair (J, J') for A = " + a.str() +
                                             " at level " + std::to_string(j)});
            }
        });
    }

    for (int j = 2; j <= chain.levels(); ++j) {
        const subset_t prev_inc = chain.level_set(j - 1) - chain.level_set(j - 2);
        const auto new_family = m.family_between(chain.level_set(j), chain.level_set(j - 1));
        bool found = false;
        for (int s : prev_inc.members()) {
            for (subset_t J : new_family)
                if (J.contains(s)) { found = true; break; }
            if (found) break;
        }
        if (!found) {
            rep.condition_c_prime = false;
            rep.witnesses.push_back({'p', j, subset_t::empty(),
                                     "no J in the new family meets A_" + std::to_string(j - 1) +
                                         " \\ A_" + std::to_string(j - 2)});
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// JSON model files
// ---------------------------------------------------------------------------
//
// {"n": 3, "gamma": [0.3333, ...], "a": [{"set": [1,2], "value": 0.3333}, ...],
//  "renormalize": true}
//
// Sets are 1-based ascending index lists. Values (and gamma entries) accept
// either numbers or exact-rational strings like "1/3".

namespace detail {

inline double parse_weight_value(const nlohmann::json& v, const std::string& where) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        const auto slash = s.find('/');
        try {
            if (slash == std::string::npos) return std::stod(s);
            const double num = std::stod(s.substr(0, slash));
            const double den = std::stod(s.substr(slash + 1));
            if (den == 0.0) fail(errc::parse_error, where + ": zero denominator in \"" + s + "\"");
            return num / den;
        } catch (const error&) {
            throw;
        } catch (const std::exception&) {
            fail(errc::parse_error, where + ": cannot parse \"" + s + "\"");
        }
    }
    fail(errc::parse_error, where + ": expected number or \"p/q\" string");
}

} // namespace detail

inline model_spec model_spec_from_json(const nlohmann::json& j) {
    model_spec spec;
    if (!j.is_object() || !j.contains("n") || !j.contains("gamma") || !j.contains("a"))
        fail(errc::parse_error, "model file needs fields n, gamma, a");
    spec.n = j.at("n").get<int>();
    for (const auto& g : j.at("gamma"))
        spec.gamma.push_back(detail::parse_weight_value(g, "gamma"));
    std::map<std::uint32_t, bool> seen;
    for (const auto& entry : j.at("a")) {
        if (!entry.contains("set") || !entry.contains("value"))
            fail(errc::parse_error, "each weight entry needs set and value");
        subset_t s;
        int prev = 0;
        for (const auto& idx : entry.at("set")) {
            const int i = idx.get<int>();
            if (i <= prev) fail(errc::parse_error, "set indices must be 1-based ascending");
            if (i > spec.n) fail(errc::parse_error, "set index " + std::to_string(i) + " > n");
            s = s | subset_t::single(i);
            prev = i;
        }
        if (seen.count(s.bits)) fail(errc::parse_error, "duplicate set " + s.str());
        seen[s.bits] = true;
        spec.weights.emplace_back(s, detail::parse_weight_value(entry.at("value"), "a"));
    }
    spec.renormalize = j.value("renormalize", false);
    return spec;
}

inline nlohmann::json model_spec_to_json(const model_t& m) {
    nlohmann::json j;
    j["n"] = m.n();
    j["gamma"] = m.gammas();
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [s, w] : m.weights()) {
        nlohmann::json e;
        e["set"] = s.members();
        e["value"] = w;
        arr.push_back(e);
    }
    j["a"] = arr;
    j["renormalize"] = false;
    return j;
}

} // namespace grem
