#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include "grem/builtins.hpp"
#include "grem/chain.hpp"
#include "test_support.hpp"

using namespace grem;
using grem::testing::random_model;
using grem::testing::sset;

TEST_CASE("rho closed forms") {
    auto m1 = builtin_model("M1").model;
    CHECK(rho(m1, subset_t::empty(), sset({1})) ==
          doctest::Approx(std::sqrt(2.0 * ln2 * 0.5 / 0.25)).epsilon(1e-12));
    CHECK(rho(m1, subset_t::empty(), sset({1})) == doctest::Approx(1.665109).epsilon(1e-6));

    auto rem = builtin_model("REM").model;
    CHECK(rho(rem, subset_t::empty(), sset({1})) == doctest::Approx(1.177410).epsilon(1e-6));

    auto par = builtin_model("paradigmatic").model;
    CHECK(std::isinf(rho(par, subset_t::empty(), sset({1}))));

    CHECK_THROWS_AS(rho(m1, sset({1}), sset({1})), error);
    CHECK_THROWS_AS(rho(m1, sset({2}), sset({1})), error);
}

TEST_CASE("build_chain reproduces the documented chains and temperatures") {
    auto m1 = build_chain(builtin_model("M1").model);
    CHECK(m1.chain.sets == std::vector<subset_t>{subset_t::empty(), sset({1, 2})});
    CHECK(m1.levels.beta[0] == doctest::Approx(1.177410).epsilon(1e-6));

    auto m4 = build_chain(builtin_model("M4").model);
    CHECK(m4.chain.sets == std::vector<subset_t>{subset_t::empty(), sset({1}), sset({1, 2})});
    CHECK(m4.levels.beta[0] == doctest::Approx(0.961351).epsilon(1e-6));
    CHECK(m4.levels.beta[1] == doctest::Approx(1.665109).epsilon(1e-6));

    auto par = build_chain(builtin_model("paradigmatic").model);
    CHECK(par.chain.sets == std::vector<subset_t>{subset_t::empty(), sset({1, 2, 3})});
    CHECK(par.levels.beta[0] == doctest::Approx(1.177410).epsilon(1e-6));

    // level increments sum to 1 and betas increase strictly
    for (const auto& name : builtin_names()) {
        auto solved = build_chain(builtin_model(name).model);
        double ds = 0.0, gs = 0.0;
        for (int j = 0; j < solved.levels.levels(); ++j) {
            CHECK(solved.levels.delta[j] > 0.0);
            CHECK(solved.levels.g[j] > 0.0);
            ds += solved.levels.delta[j];
            gs += solved.levels.g[j];
            if (j) CHECK(solved.levels.beta[j] > solved.levels.beta[j - 1]);
        }
        CHECK(ds == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(gs == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("maximality of the solver chain") {
    for (const auto& name : {"M2c", "M4", "M5", "paradigmatic"}) {
        auto b = builtin_model(name);
        auto solved = build_chain(b.model);
        for (int j = 1; j <= solved.chain.levels(); ++j) {
            const subset_t prev = solved.chain.level_set(j - 1);
            const double beta_j = solved.levels.beta[static_cast<std::size_t>(j - 1)];
            for_each_subset_of(b.model.full_set() - prev, [&](subset_t add) {
                if (add.is_empty()) return;
                const double r = rho(b.model, prev, prev | add);
                CHECK(r >= beta_j * (1.0 - 1e-9));
                if (r <= beta_j * (1.0 + 1e-9))
                    CHECK((prev | add).subset_of(solved.chain.level_set(j)));
            });
        }
    }
}

TEST_CASE("critical subsets") {
    auto m2c = builtin_model("M2c");
    auto solved = build_chain(m2c.model);
    auto crit = find_critical_subsets(m2c.model, solved.chain, solved.levels);
    REQUIRE(crit.per_level.size() == 1);
    REQUIRE(crit.per_level[0].size() == 1);
    CHECK(crit.per_level[0][0].a == sset({1}));
    CHECK(crit.per_level[0][0].alpha_hat == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(crit.per_level[0][0].alpha_hat_c == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(crit.per_level[0][0].family == std::vector<subset_t>{sset({1})});
    CHECK(crit.per_level[0][0].family_c == std::vector<subset_t>{sset({2}), sset({1, 2})});

    auto m3 = builtin_model("M3");
    auto solved3 = build_chain(m3.model);
    auto crit3 = find_critical_subsets(m3.model, solved3.chain, solved3.levels);
    REQUIRE(crit3.per_level[0].size() == 2);
    CHECK(crit3.per_level[0][0].a == sset({1}));
    CHECK(crit3.per_level[0][1].a == sset({2}));

    auto m1 = builtin_model("M1");
    auto solved1 = build_chain(m1.model);
    CHECK_FALSE(find_critical_subsets(m1.model, solved1.chain, solved1.levels).any());

    // partition invariant: alpha_hat + alpha_hat_c = delta, families partition
    for (const auto& c : crit.per_level[0]) {
        CHECK(c.alpha_hat + c.alpha_hat_c == doctest::Approx(solved.levels.delta[0]).epsilon(1e-12));
        CHECK(c.family.size() + c.family_c.size() == m2c.model.weights().size());
    }
}

TEST_CASE("coarse graining") {
    auto m2c = builtin_model("M2c").model;
    chain_t two;
    two.sets = {subset_t::empty(), sset({1}), sset({1, 2})};
    auto lv = coarse_grain(m2c, two);
    CHECK(lv.delta == std::vector<double>{0.5, 0.5});
    CHECK(lv.g == std::vector<double>{0.5, 0.5});

    chain_t one;
    one.sets = {subset_t::empty(), m2c.full_set()};
    auto lv1 = coarse_grain(m2c, one);
    CHECK(lv1.delta == std::vector<double>{1.0});

    auto par = builtin_model("paradigmatic").model;
    chain_t flat;
    flat.sets = {subset_t::empty(), sset({1}), par.full_set()};
    CHECK_THROWS_AS(coarse_grain(par, flat), error);
}

TEST_CASE("free energy of the REM") {
    auto rem = build_chain(builtin_model("REM").model);
    const double beta1 = std::sqrt(2.0 * ln2);
    CHECK(free_energy_chain(rem.levels, 0.0) == 0.0);
    CHECK(free_energy_chain(rem.levels, beta1) == doctest::Approx(ln2).epsilon(1e-12));
    CHECK(free_energy_chain(rem.levels, 2.0) ==
          doctest::Approx(2.0 * beta1 - ln2).epsilon(1e-12));
    // low-temperature side: f(beta) = beta^2/2 for beta <= beta_1
    for (double b : {0.2, 0.7, 1.0})
        CHECK(free_energy_chain(rem.levels, b) == doctest::Approx(0.5 * b * b).epsilon(1e-12));
}

TEST_CASE("free energy is continuous, nondecreasing and convex on a grid") {
    for (const auto& name : {"M4", "M2c", "M5"}) {
        auto solved = build_chain(builtin_model(name).model);
        auto grid = default_beta_grid(solved.levels, 60);
        std::vector<double> f;
        for (double b : grid) f.push_back(free_energy_chain(solved.levels, b));
        for (std::size_t i = 1; i < f.size(); ++i) CHECK(f[i] >= f[i - 1] - 1e-12);
        for (std::size_t i = 1; i + 1 < f.size(); ++i)
            CHECK(f[i + 1] - 2.0 * f[i] + f[i - 1] >= -1e-9);
        // and f = beta^2/2 below beta_1 (total weight is 1)
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (grid[i] <= solved.levels.beta[0])
                CHECK(f[i] == doctest::Approx(0.5 * grid[i] * grid[i]).epsilon(1e-12));
    }
}

TEST_CASE("free energy of chains with degenerate levels merges them") {
    // a chain through an alpha-flat set gives the same f as the direct chain
    auto par = builtin_model("paradigmatic").model;
    level_data degenerate;
    degenerate.delta = {0.0, 1.0};
    degenerate.g = {1.0 / 3.0, 2.0 / 3.0};
    level_data direct;
    direct.delta = {1.0};
    direct.g = {1.0};
    for (double b : {0.3, 1.0, 1.5, 2.5})
        CHECK(free_energy_chain(degenerate, b) ==
              doctest::Approx(free_energy_chain(direct, b)).epsilon(1e-12));
}

TEST_CASE("the exhaustive oracle confirms the recursion chain") {
    auto m4 = builtin_model("M4");
    auto solved = build_chain(m4.model);
    std::vector<double> grid = {0.5, 1.2, 2.0};
    auto ex = exhaustive_min_chain(m4.model, grid);
    for (std::size_t i = 0; i < grid.size(); ++i)
        CHECK(free_energy_chain(solved.levels, grid[i]) ==
              doctest::Approx(ex.minima[i]).epsilon(1e-12));
    CHECK(ex.chain.sets == solved.chain.sets);

    auto par = builtin_model("paradigmatic");
    auto psolved = build_chain(par.model);
    auto pex = exhaustive_min_chain(par.model, {2.0});
    CHECK(free_energy_chain(psolved.levels, 2.0) == doctest::Approx(pex.minima[0]).epsilon(1e-12));

    // beta = 0: every chain gives 0
    auto zex = exhaustive_min_chain(par.model, {0.0});
    CHECK(zex.minima[0] == 0.0);

    CHECK_THROWS_AS(enumerate_chains(9), error);
}

TEST_CASE("oracle equivalence on random small models") {
    for (std::uint64_t s = 0; s < 5; ++s) {
        const int n = 2 + static_cast<int>(s % 3);
        auto m = random_model(n, 1000 + s);
        auto solved = build_chain(m);
        auto grid = default_beta_grid(solved.levels, 20);
        auto ex = exhaustive_min_chain(m, grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double f = free_energy_chain(solved.levels, grid[i]);
            CHECK(f == doctest::Approx(ex.minima[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("phase points") {
    auto m4 = build_chain(builtin_model("M4").model);
    const double beta = 2.0 * m4.levels.beta[1];
    auto pd = phase_points(m4.levels, beta);
    CHECK(pd.m == 2);
    CHECK(pd.x[0] == doctest::Approx(0.288675).epsilon(1e-6));
    CHECK(pd.x[1] == doctest::Approx(0.5).epsilon(1e-12));
    REQUIRE(pd.times.size() == 3);
    CHECK(pd.times[0] == 0.0);
    CHECK(pd.times[1] == doctest::Approx(0.549306).epsilon(1e-6));
    CHECK(std::isinf(pd.times[2]));

    // strictly increasing times whenever beta > beta_K
    for (std::size_t i = 1; i < pd.times.size(); ++i) CHECK(pd.times[i] > pd.times[i - 1]);

    // boundary convention: regime 0 at beta = beta_1 exactly
    auto rem = build_chain(builtin_model("REM").model);
    CHECK(phase_points(rem.levels, rem.levels.beta[0]).m == 0);
    CHECK(phase_points(rem.levels, rem.levels.beta[0]).times.empty());

    // scaling covariance with an exact factor of two
    auto pd2 = phase_points(m4.levels, 2.0 * beta);
    for (std::size_t j = 0; j < pd.x.size(); ++j) CHECK(pd2.x[j] == pd.x[j] / 2.0);
    for (std::size_t j = 0; j + 1 < pd.times.size(); ++j) CHECK(pd2.times[j] == pd.times[j]);
}
