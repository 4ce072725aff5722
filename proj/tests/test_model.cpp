#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "grem/builtins.hpp"
#include "grem/chain.hpp"
#include "grem/model.hpp"

using namespace grem;

namespace {

subset_t s(std::initializer_list<int> is) {
    subset_t out;
    for (int i : is) out = out | subset_t::single(i);
    return out;
}

bool has_issue(const validation_result& r, errc code) {
    return std::any_of(r.issues.begin(), r.issues.end(),
                       [&](const validation_issue& i) { return i.code == code; });
}

} // namespace

TEST_CASE("validation accepts the paradigmatic model and the REM") {
    model_spec par;
    par.n = 3;
    par.gamma = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    par.weights = {{s({1, 2}), 1.0 / 3}, {s({1, 3}), 1.0 / 3}, {s({2, 3}), 1.0 / 3}};
    auto r = validate_model(par);
    REQUIRE(r.ok());
    CHECK(r.model->alpha(r.model->full_set()) == 1.0);
    CHECK(r.model->gamma(r.model->full_set()) == 1.0);

    model_spec rem;
    rem.n = 1;
    rem.gamma = {1.0};
    rem.weights = {{s({1}), 1.0}};
    CHECK(validate_model(rem).ok());
}

TEST_CASE("validation rejects uncovered coordinates, empty-set weight, bad sums") {
    model_spec m;
    m.n = 2;
    m.gamma = {0.5, 0.5};
    m.weights = {{s({1}), 1.0}};
    CHECK(has_issue(validate_model(m), errc::uncovered_coordinate));

    m.weights = {{s({1}), 0.5}, {subset_t::empty(), 0.5}};
    CHECK(has_issue(validate_model(m), errc::empty_set_weight));

    m.weights = {{s({1}), 0.6}, {s({1, 2}), 0.6}};
    CHECK(has_issue(validate_model(m), errc::non_normalized));
    m.renormalize = true;
    auto r = validate_model(m);
    REQUIRE(r.ok());
    CHECK(r.model->was_renormalized());
    CHECK(r.model->alpha(r.model->full_set()) == 1.0);

    model_spec big;
    big.n = 21;
    CHECK(has_issue(validate_model(big), errc::n_too_large));
}

TEST_CASE("subset functionals on the paradigmatic model") {
    auto b = builtin_model("paradigmatic");
    auto f = subset_functionals(b.model, s({1, 2}));
    CHECK(f.alpha == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(f.gamma == doctest::Approx(2.0 / 3).epsilon(1e-12));
    REQUIRE(f.family.size() == 1);
    CHECK(f.family[0] == s({1, 2}));

    auto fe = subset_functionals(b.model, subset_t::empty());
    CHECK(fe.alpha == 0.0);
    CHECK(fe.gamma == 0.0);
    CHECK(fe.family.empty());

    auto fi = subset_functionals(b.model, b.model.full_set());
    CHECK(fi.alpha == 1.0);
    CHECK(fi.gamma == 1.0);
}

TEST_CASE("alpha and gamma are monotone on the subset lattice") {
    for (const auto& name : {"M2c", "M5", "paradigmatic"}) {
        auto m = builtin_model(name).model;
        for_each_subset_of(m.full_set(), [&](subset_t a) {
            for_each_subset_of(a, [&](subset_t b) {
                CHECK(m.alpha(b) <= m.alpha(a));
                CHECK(m.gamma(b) <= m.gamma(a));
            });
        });
    }
}

TEST_CASE("irreducibility classification of the example models") {
    for (const auto& name : {"M1", "M2", "M4", "M2c", "paradigmatic", "REM"}) {
        auto b = builtin_model(name);
        auto solved = build_chain(b.model);
        auto rep = check_irreducibility(b.model, solved.chain);
        CHECK(rep.condition_c);
        CHECK(rep.condition_c_prime);
        CHECK(rep.witnesses.empty());
    }

    auto m3 = builtin_model("M3");
    auto rep3 = check_irreducibility(m3.model, build_chain(m3.model).chain);
    CHECK_FALSE(rep3.condition_c);
    CHECK(rep3.condition_c_prime);
    REQUIRE_FALSE(rep3.witnesses.empty());
    CHECK(rep3.witnesses.front().level == 1);
    CHECK((rep3.witnesses.front().a == s({1}) || rep3.witnesses.front().a == s({2})));

    auto m5 = builtin_model("M5");
    auto rep5 = check_irreducibility(m5.model, build_chain(m5.model).chain);
    CHECK(rep5.condition_c);
    CHECK_FALSE(rep5.condition_c_prime);
    REQUIRE_FALSE(rep5.witnesses.empty());
    CHECK(rep5.witnesses.front().level == 2);
}

TEST_CASE("irreducibility brute-force oracle agrees on M2c") {
    // independent enumeration of the condition-c quantifiers
    auto b = builtin_model("M2c");
    const auto& m = b.model;
    chain_t chain;
    chain.sets = {subset_t::empty(), m.full_set()};
    bool oracle_c = true;
    for_each_subset_of(m.full_set(), [&](subset_t a) {
        if (a == m.full_set()) return;
        if (m.alpha(a) <= 0.0) return;  // no J' candidates
        bool found = false;
        for (const auto& [J, wj] : m.weights())
            for (const auto& [Jp, wp] : m.weights())
                if (!J.subset_of(a) && Jp.subset_of(a) && !(J & Jp).is_empty()) found = true;
        if (!found) oracle_c = false;
    });
    auto rep = check_irreducibility(m, chain);
    CHECK(rep.condition_c == oracle_c);
    CHECK(rep.condition_c);
}

TEST_CASE("irreducibility is invariant under coordinate relabeling") {
    // swap coordinates 1 and 2 of M2c and of M5 (cycle for M5)
    auto swap12 = [](subset_t x) {
        subset_t out;
        if (x.contains(1)) out = out | subset_t::single(2);
        if (x.contains(2)) out = out | subset_t::single(1);
        if (x.contains(3)) out = out | subset_t::single(3);
        return out;
    };
    for (const auto& name : {"M2c", "M3", "M5"}) {
        auto b = builtin_model(name);
        model_spec permuted;
        permuted.n = b.model.n();
        permuted.gamma = b.model.gammas();
        std::swap(permuted.gamma[0], permuted.gamma[1]);
        for (const auto& [J, w] : b.model.weights()) permuted.weights.emplace_back(swap12(J), w);
        auto pm = validate_or_throw(permuted);

        auto base_chain = build_chain(b.model).chain;
        chain_t permuted_chain;
        for (subset_t a : base_chain.sets) permuted_chain.sets.push_back(swap12(a));

        auto rep_a = check_irreducibility(b.model, base_chain);
        auto rep_b = check_irreducibility(pm, permuted_chain);
        CHECK(rep_a.condition_c == rep_b.condition_c);
        CHECK(rep_a.condition_c_prime == rep_b.condition_c_prime);
    }
}

TEST_CASE("builtins reproduce their documented chains") {
    for (const auto& name : builtin_names()) {
        auto b = builtin_model(name);  // throws on mismatch
        auto solved = build_chain(b.model);
        CHECK(solved.chain == b.expected_chain);
        REQUIRE(solved.levels.beta.size() == b.expected_beta.size());
        for (std::size_t j = 0; j < b.expected_beta.size(); ++j)
            CHECK(solved.levels.beta[j] ==
                  doctest::Approx(b.expected_beta[j]).epsilon(1e-9));
    }
    CHECK_THROWS_AS(builtin_model("nope"), error);
}

TEST_CASE("model JSON round trip, rational strings, duplicate sets") {
    const char* text = R"({
        "n": 2,
        "gamma": ["1/2", 0.5],
        "a": [{"set": [1], "value": "1/2"}, {"set": [1,2], "value": 0.5}],
        "renormalize": false
    })";
    auto spec = model_spec_from_json(nlohmann::json::parse(text));
    auto m = validate_or_throw(spec);
    CHECK(m.alpha(s({1})) == 0.5);

    auto j = model_spec_to_json(m);
    auto again = validate_or_throw(model_spec_from_json(j));
    CHECK(again.alpha(s({1})) == m.alpha(s({1})));

    const char* dup = R"({"n":2,"gamma":[0.5,0.5],
        "a":[{"set":[1],"value":0.5},{"set":[1],"value":0.5}]})";
    CHECK_THROWS_AS(model_spec_from_json(nlohmann::json::parse(dup)), error);
}

TEST_CASE("precondition guards reject out-of-contract arguments") {
    auto m = builtin_model("M2c").model;
    CHECK_THROWS_AS(build_chain(m, 0.0), error);
    auto solved = build_chain(m);
    CHECK_THROWS_AS(free_energy_chain(solved.levels, -1.0), error);
}
