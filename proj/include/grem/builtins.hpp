#pragma once

// Built-in model fixtures. Each carries its documented expected chain and
// phase temperatures; builtin_model() re-solves the chain on every call and
// refuses to hand out a fixture whose parameters stopped realizing it.

#include <cmath>
#include <string>
#include <vector>

#include "grem/chain.hpp"
#include "grem/model.hpp"

namespace grem {

struct builtin_model_t {
    std::string name;
    model_t model;
    chain_t expected_chain;
    std::vector<double> expected_beta;
    bool expected_irreducible;
    std::string notes;
};

inline std::vector<std::string> builtin_names() {
    return {"REM", "M1", "M2", "M2c", "M3", "M4", "M5", "paradigmatic"};
}

inline builtin_model_t builtin_model(const std::string& name) {
    model_spec spec;
    chain_t expected;
    std::vector<double> beta;
    bool irreducible = true;
    std::string notes;

    const double b_rem = std::sqrt(2.0 * ln2);           // 1.177410...
    const auto s = [](std::initializer_list<int> is) {
        subset_t out;
        for (int i : is) out = out | subset_t::single(i);
        return out;
    };

    if (name == "REM") {
        spec.n = 1;
        spec.gamma = {1.0};
        spec.weights = {{s({1}), 1.0}};
        expected.sets = {subset_t::empty(), s({1})};
        beta = {b_rem};
        notes = "single level, no criticals";
    } else if (name == "M1") {
        spec.n = 2;
        spec.gamma = {0.5, 0.5};
        spec.weights = {{s({1}), 0.25}, {s({1, 2}), 0.75}};
        expected.sets = {subset_t::empty(), s({1, 2})};
        beta = {b_rem};
        notes = "two-level hierarchical family collapsing to one level";
    } else if (name == "M2") {
        // The family {{1},{2},{1,2}} with a one-level chain; parameters are a
        // fixture (the one-level chain is what is fixed, not the weights).
        spec.n = 2;
        spec.gamma = {0.5, 0.5};
        spec.weights = {{s({1}), 0.3}, {s({2}), 0.3}, {s({1, 2}), 0.4}};
        expected.sets = {subset_t::empty(), s({1, 2})};
        beta = {b_rem};
        notes = "nonhierarchical, one-level chain, no criticals";
    } else if (name == "M2c") {
        // Like M2 but with {1} tuned critical: rho({},{1}) = rho({},I).
        spec.n = 2;
        spec.gamma = {0.5, 0.5};
        spec.weights = {{s({1}), 0.5}, {s({2}), 0.2}, {s({1, 2}), 0.3}};
        expected.sets = {subset_t::empty(), s({1, 2})};
        beta = {b_rem};
        notes = "critical subset {1} at level 1, C_1 = 1/2";
    } else if (name == "M3") {
        spec.n = 2;
        spec.gamma = {0.5, 0.5};
        spec.weights = {{s({1}), 0.5}, {s({2}), 0.5}};
        expected.sets = {subset_t::empty(), s({1, 2})};
        beta = {b_rem};
        irreducible = false;
        notes = "product model; {1} and {2} both critical, fails condition c";
    } else if (name == "M4") {
        spec.n = 2;
        spec.gamma = {0.5, 0.5};
        spec.weights = {{s({1}), 0.75}, {s({1, 2}), 0.25}};
        expected.sets = {subset_t::empty(), s({1}), s({1, 2})};
        beta = {std::sqrt(2.0 * ln2 * 0.5 / 0.75), std::sqrt(2.0 * ln2 * 0.5 / 0.25)};
        notes = "genuinely two-level hierarchical chain";
    } else if (name == "M5") {
        // Family {{1},{2},{2,3}} with chain ({}, {1}, I); parameters are a
        // fixture realizing that chain.
        spec.n = 3;
        spec.gamma = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
        spec.weights = {{s({1}), 0.6}, {s({2}), 0.15}, {s({2, 3}), 0.25}};
        expected.sets = {subset_t::empty(), s({1}), s({1, 2, 3})};
        beta = {std::sqrt(2.0 * ln2 / (3.0 * 0.6)), std::sqrt(2.0 * ln2 * (2.0 / 3.0) / 0.4)};
        irreducible = false;
        notes = "no bond links level 2 back to coordinate 1, fails condition c'";
    } else if (name == "paradigmatic") {
        spec.n = 3;
        spec.gamma = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
        spec.weights = {{s({1, 2}), 1.0 / 3.0}, {s({1, 3}), 1.0 / 3.0}, {s({2, 3}), 1.0 / 3.0}};
        expected.sets = {subset_t::empty(), s({1, 2, 3})};
        beta = {b_rem};
        notes = "all pair interactions, one-level chain, irreducible";
    } else {
        fail(errc::unknown_model, "no builtin named \"" + name + "\"");
    }

    builtin_model_t out{name, validate_or_throw(spec), expected, beta, irreducible, notes};

    // Fixture self-check: a wrong parameterization must fail loudly.
    const auto solved = build_chain(out.model);
    if (solved.chain != out.expected_chain)
        fail(errc::chain_mismatch, "builtin " + name + " solves to chain " + solved.chain.str() +
                                       ", expected " + out.expected_chain.str());
    for (std::size_t j = 0; j < beta.size(); ++j) {
        if (std::fabs(solved.levels.beta[j] - beta[j]) > 1e-9 * beta[j])
            fail(errc::chain_mismatch,
                 "builtin " + name + " beta_" + std::to_string(j + 1) + " mismatch");
    }
    return out;
}

} // namespace grem
