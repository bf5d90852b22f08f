#include "doctest.h"
#include "oracles.hpp"

#include "uhopt/concave_solver.hpp"
#include "uhopt/error.hpp"
#include "uhopt/nonconcave_solver.hpp"

using namespace uhopt;

namespace {

const MarketParams table1(oracle::mu, oracle::r, oracle::sigma);
const ContractUtility contract(oracle::gamma, oracle::alpha, oracle::B, oracle::K);
const ProblemSpec spec(table1, contract, HorizonDistribution({8.0}, {0.5}, 12.0), 100.0);

// i(y) written out from its definition.
double i_of(double y) {
    const double thr = contract.threshold();
    if (y > thr) return 0.0;
    return (std::pow(y / oracle::alpha, -1.0 / oracle::gamma) - oracle::K) / oracle::alpha + oracle::B;
}

const SolverSolution& table1_solution() {
    static const SolverSolution sol = [] {
        SolveOptions o;
        o.n_paths = 20000;
        o.seed = 77;
        o.extra_dates = {10.0};
        return solve_uncertain_horizon(spec, o);
    }();
    return sol;
}

}  // namespace

TEST_CASE("fixed horizon budget") {
    const FixedHorizonSolution sol = solve_fixed_horizon(table1, contract, 12.0, 100.0);
    CHECK(sol.budget_residual <= 1e-10);
    CHECK(sol.nu_T > 0.0);
    const ProblemSpec fixed(table1, contract, HorizonDistribution::fixed(12.0), 100.0);
    CHECK(fixed_horizon_wealth(fixed, sol, PathState::at(table1, 0.0, 0.0)) ==
          doctest::Approx(100.0).epsilon(1e-10));

    oracle::Normal z(401);
    const int n = 100000;
    std::vector<double> deflated(n);
    bool support = true;
    for (int i = 0; i < n; ++i) {
        const double h = oracle::H(12.0, std::sqrt(12.0) * z());
        const double x = i_of(sol.nu_T * h);
        support = support && (x == 0.0 || x >= contract.x_hat() * (1 - 1e-12));
        deflated[i] = h * x;
    }
    CHECK(support);
    CHECK(oracle::within(oracle::mean_se(deflated), 100.0));
    CHECK_THROWS_AS(solve_fixed_horizon(spec), Error);
}

TEST_CASE("fixed horizon without a kink is the Merton multiplier") {
    const ContractUtility smooth(3.0, 1.0, 1e-8, 1e-8);
    const FixedHorizonSolution sol = solve_fixed_horizon(table1, smooth, 12.0, 100.0);
    const MertonSolution merton = solve_merton(table1, 3.0, HorizonDistribution::fixed(12.0), 100.0);
    CHECK(sol.nu_T == doctest::Approx(merton.nu(12.0)).epsilon(1e-6));
    const ProblemSpec p(table1, smooth, HorizonDistribution::fixed(12.0), 100.0);
    const PathState st = PathState::at(table1, 5.0, 0.4);
    const double w = fixed_horizon_wealth(p, sol, st);
    CHECK(w == doctest::Approx(merton_wealth(merton, st)).epsilon(1e-6));
    CHECK(fixed_horizon_strategy(p, sol, st) / w == doctest::Approx(merton.fraction()).epsilon(1e-6));
}

TEST_CASE("inner solve: Lagrange constant, residual and consistency") {
    const double p = 0.5;
    const double C = 2.58e-5;
    for (double w : {-3.0, -1.0, 0.0, 0.8, 2.5, 5.0}) {
        const PathState at = PathState::at(table1, 8.0, w);
        const PathMultipliers m = solve_inner_nu_T(at.h, at.w, C, spec);
        INFO("w = " << w);
        REQUIRE(m.positive);
        CHECK(std::abs(p * m.nu_T1 + (1 - p) * m.nu_T - C) <= 1e-12 * C);
        CHECK(m.residual <= 1e-10);
        CHECK(m.wealth_T1 == doctest::Approx(i_of(m.nu_T1 * at.h)).epsilon(1e-13));
        CHECK(m.wealth_T1 >= contract.x_hat());
        // Stopping now pays the same as continuing to T under nu_T.
        CHECK(m.wealth_T1 == doctest::Approx(continuation_value(spec, 12.0, m.nu_T, at)).epsilon(1e-9));
        const double scale = std::abs(m.wealth_T1) + 1.0;
        CHECK(std::abs(inner_equation(spec, at.h, at.w, m.nu_T1, m.nu_T)) <= 1e-10 * scale);
    }
}

TEST_CASE("inner solve: zero-wealth branch") {
    const PathState at = PathState::at(table1, 8.0, -40.0);
    const PathMultipliers m = solve_inner_nu_T(at.h, at.w, 2.58e-5, spec);
    CHECK_FALSE(m.positive);
    CHECK(m.nu_T1 == pos_infinity);
    CHECK(m.nu_T == pos_infinity);
    CHECK(m.wealth_T1 == 0.0);
}

TEST_CASE("inner solve: multipliers increase with C") {
    for (double w : {-2.0, 0.0, 3.0}) {
        const PathState at = PathState::at(table1, 8.0, w);
        PathMultipliers prev = solve_inner_nu_T(at.h, at.w, 1e-5, spec);
        for (double C = 1.1e-5; C < 6e-5; C *= 1.1) {
            const PathMultipliers m = solve_inner_nu_T(at.h, at.w, C, spec);
            INFO("w = " << w << " C = " << C);
            CHECK(m.nu_T >= prev.nu_T);
            CHECK(m.nu_T1 >= prev.nu_T1);
            CHECK(m.wealth_T1 <= prev.wealth_T1);
            prev = m;
        }
    }
}

TEST_CASE("uncertain horizon solution invariants") {
    const SolverSolution& sol = table1_solution();
    const std::size_t n = sol.paths.n_paths();
    REQUIRE(n == 20000);
    CHECK(std::abs(sol.budget_residual) <= 1e-3);
    CHECK(std::abs(sol.budget / 100.0 - 1.0) <= 1e-3);
    CHECK(sol.max_lagrange_spread <= 1e-9);

    double spread = 0.0, worst = 0.0;
    std::size_t gap = 0, zero = 0;
    std::vector<double> stopped(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double h1 = sol.paths.h(i, sol.col_T1), hT = sol.paths.h(i, sol.col_T);
        if (std::isinf(sol.nu_T[i])) {
            ++zero;
            CHECK(sol.wealth_T1[i] == 0.0);
            CHECK(std::isinf(sol.nu_T1[i]));
        } else {
            spread = std::max(spread, std::abs(0.5 * sol.nu_T1[i] + 0.5 * sol.nu_T[i] - sol.c_star));
            worst = std::max(worst, sol.residual[i]);
        }
        for (double x : {sol.wealth_T1[i], sol.wealth_T[i]})
            if (x > 0.0 && x < contract.x_hat() * (1 - 1e-10)) ++gap;
        CHECK(sol.wealth_T1[i] == doctest::Approx(i_of(sol.nu_T1[i] * h1)).epsilon(1e-13));
        CHECK(sol.wealth_T[i] == doctest::Approx(i_of(sol.nu_T[i] * hT)).epsilon(1e-13));
        stopped[i] = 0.5 * h1 * sol.wealth_T1[i] + 0.5 * hT * sol.wealth_T[i];
    }
    CHECK(spread <= 1e-9 * sol.c_star);
    CHECK(worst <= 1e-10);
    CHECK(gap == 0);
    CHECK(zero == 0);
    // The stopped deflated wealth does not exceed the budget.
    const auto est = oracle::mean_se(stopped);
    CHECK(est.mean <= 100.0 + 3 * est.se);
}

TEST_CASE("nu_T depends only on the state at T_1") {
    const SolverSolution& sol = table1_solution();
    for (std::size_t i = 0; i < sol.paths.n_paths(); i += 211) {
        const double w = sol.paths.w(i, sol.col_T1);
        const double h = state_price_density(table1, 8.0, w);
        const PathMultipliers m = solve_inner_nu_T(h, w, sol.c_star, spec);
        CHECK(m.nu_T == sol.nu_T[i]);
        CHECK(m.nu_T1 == sol.nu_T1[i]);
    }
}

TEST_CASE("budget is nonincreasing in C") {
    const SolverSolution& sol = table1_solution();
    double prev = INFINITY;
    for (double k : {0.5, 0.7, 0.9, 1.0, 1.1, 1.4, 2.0}) {
        const double b = mc_budget(spec, sol.paths, sol.col_T1, k * sol.c_star, 0);
        CHECK(b <= prev);
        prev = b;
    }
    const auto control = budget_control(spec, sol.paths, sol.col_T1);
    CHECK(mc_budget(spec, sol.paths, sol.col_T1, sol.c_star, 0, nullptr, control) ==
          doctest::Approx(sol.budget).epsilon(1e-14));
    CHECK(mc_budget(spec, sol.paths, sol.col_T1, sol.c_star, 0) ==
          doctest::Approx(sol.budget_plain).epsilon(1e-14));
}

TEST_CASE("solver is deterministic across worker counts") {
    SolveOptions o;
    o.n_paths = 4000;
    o.seed = 5;
    o.workers = 1;
    const SolverSolution a = solve_uncertain_horizon(spec, o);
    o.workers = 3;
    const SolverSolution b = solve_uncertain_horizon(spec, o);
    CHECK(a.c_star == b.c_star);
    CHECK(a.budget == b.budget);
    CHECK(a.nu_T == b.nu_T);
    CHECK(a.wealth_T1 == b.wealth_T1);
}

TEST_CASE("vanishing stopping probability recovers the fixed horizon") {
    const ProblemSpec tiny(table1, contract, HorizonDistribution({8.0}, {1e-7}, 12.0), 100.0);
    SolveOptions o;
    o.n_paths = 20000;
    o.seed = 78;
    const SolverSolution sol = solve_uncertain_horizon(tiny, o);
    const FixedHorizonSolution fixed = solve_fixed_horizon(table1, contract, 12.0, 100.0);
    double worst = 0.0;
    for (double nu : sol.nu_T) worst = std::max(worst, std::abs(nu / fixed.nu_T - 1.0));
    CHECK(worst <= 1e-6);
    CHECK(std::abs(sol.c_star / fixed.nu_T - 1.0) <= 1e-6);
}

TEST_CASE("wealth along the path") {
    const SolverSolution& sol = table1_solution();
    // At T_1 the stored wealth.
    for (std::size_t i = 0; i < 50; ++i) {
        const PathState at = sol.paths.state(i, sol.col_T1);
        CHECK(wealth_at(spec, sol, at) == doctest::Approx(sol.wealth_T1[i]).epsilon(1e-10));
    }
    // At T the terminal wealth.
    const PathState a0 = sol.paths.state(0, sol.col_T1);
    const PathState t0 = sol.paths.state(0, sol.col_T);
    CHECK(wealth_at(spec, sol, t0, a0) == doctest::Approx(sol.wealth_T[0]).epsilon(1e-12));
    CHECK_THROWS_AS(wealth_at(spec, sol, PathState::at(table1, 10.0, 0.0)), Error);
    CHECK_THROWS_AS(wealth_at(spec, sol, PathState::at(table1, 13.0, 0.0), a0), Error);

    // At 0 the initial capital, up to the calibration tolerance and the
    // sampling error of the budget that fixed C.
    const double w0 = wealth_at(spec, sol, PathState::at(table1, 0.0, 0.0));
    CHECK(std::abs(w0 - 100.0) <= std::max(1e-3 * 100.0, 3.0 * sol.budget_se));

    // Between T_1 and T: nested Monte Carlo of E[H_T P_T | F_s] / H_s.
    oracle::Normal z(402);
    for (double w_anchor : {-1.5, 0.0, 2.0}) {
        const PathState anchor = PathState::at(table1, 8.0, w_anchor);
        const double nu_T = solve_inner_nu_T(anchor.h, anchor.w, sol.c_star, spec).nu_T;
        const PathState s = PathState::at(table1, 10.0, w_anchor + 0.7);
        const int n = 100000;
        std::vector<double> v(n);
        for (int k = 0; k < n; ++k) {
            const double hT = oracle::H(12.0, s.w + std::sqrt(2.0) * z());
            v[k] = hT / s.h * i_of(nu_T * hT);
        }
        INFO("anchor w = " << w_anchor);
        CHECK(oracle::within(oracle::mean_se(v), wealth_at(spec, sol, s, anchor)));
    }
}

TEST_CASE("strategy: delta hedge and limits") {
    const SolverSolution& sol = table1_solution();
    const PathState anchor = PathState::at(table1, 8.0, 0.3);
    for (double s : {8.0, 9.5, 11.0, 11.9}) {
        for (double dw : {-1.0, 0.0, 1.0}) {
            const double w = 0.3 + dw;
            const double eps = 1e-4;
            auto P = [&](double ww) {
                return wealth_at(spec, sol, PathState::at(table1, s, ww), anchor);
            };
            if (s == 8.0) {
                // At T_1 the state is its own anchor; the continuation portfolio is
                // hedged with the resulting nu_T held fixed.
                const PathState own = PathState::at(table1, s, w);
                const double nu_T = solve_inner_nu_T(own.h, own.w, sol.c_star, spec).nu_T;
                auto Pc = [&](double ww) {
                    return continuation_value(spec, 12.0, nu_T, PathState::at(table1, s, ww));
                };
                const double fd = (Pc(w + eps) - Pc(w - eps)) / (2 * eps) / oracle::sigma;
                CHECK(strategy_at(spec, sol, PathState::at(table1, s, w), anchor) ==
                      doctest::Approx(fd).epsilon(1e-6));
                continue;
            }
            const double fd = (P(w + eps) - P(w - eps)) / (2 * eps) / oracle::sigma;
            INFO("s = " << s << " w = " << w);
            CHECK(strategy_at(spec, sol, PathState::at(table1, s, w), anchor) ==
                  doctest::Approx(fd).epsilon(1e-6));
        }
    }

    // Deep in the money the Merton weight takes over.
    const PathState rich_anchor = PathState::at(table1, 8.0, 100.0);
    const PathState rich = PathState::at(table1, 10.0, 150.0);
    const double P = wealth_at(spec, sol, rich, rich_anchor);
    const double pi = strategy_at(spec, sol, rich, rich_anchor);
    CHECK(std::abs(pi / P - 0.05 / 0.12) <= 1e-4);

    // Without the kink the strategy is the Merton strategy.
    const ContractUtility smooth(3.0, 1.0, 1e-8, 1e-8);
    const ProblemSpec plain(table1, smooth, HorizonDistribution({8.0}, {0.5}, 12.0), 100.0);
    const TwoDatePolicy policy(plain, 1e-6);
    const PathState a = PathState::at(table1, 8.0, -0.5);
    for (double s : {8.0, 10.0, 11.5}) {
        const PathState st = PathState::at(table1, s, 0.2);
        CHECK(policy.strategy(st, a) / policy.wealth(st, a) ==
              doctest::Approx(0.05 / 0.12).epsilon(1e-6));
    }
    CHECK_THROWS_AS(strategy_at(spec, sol, PathState::at(table1, 5.0, 0.0)), Error);
}

TEST_CASE("solver rejects bad input") {
    SolveOptions o;
    o.n_paths = 100;
    const ProblemSpec fixed(table1, contract, HorizonDistribution::fixed(12.0), 100.0);
    CHECK_THROWS_AS(solve_uncertain_horizon(fixed, o), Error);
    const ProblemSpec two(table1, contract, HorizonDistribution({4.0, 8.0}, {0.2, 0.2}, 12.0), 100.0);
    CHECK_THROWS_AS(solve_uncertain_horizon(two, o), Error);
    CHECK_THROWS_AS(ProblemSpec(table1, contract, HorizonDistribution::fixed(12.0), 0.0), Error);
    o.extra_dates = {-1.0};
    CHECK_THROWS_AS(solve_uncertain_horizon(spec, o), Error);
}
