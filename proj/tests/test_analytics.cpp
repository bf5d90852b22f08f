#include "doctest.h"
#include "oracles.hpp"

#include "uhopt/analytics.hpp"
#include "uhopt/error.hpp"

using namespace uhopt;

namespace {

const MarketParams table1(oracle::mu, oracle::r, oracle::sigma);
const ContractUtility contract(oracle::gamma, oracle::alpha, oracle::B, oracle::K);

StoppedSampleSet constant_set(double wealth, std::size_t n) {
    StoppedSampleSet s;
    s.n_paths = n;
    s.samples.assign(n, StoppedSample{12.0, wealth});
    return s;
}

}  // namespace

TEST_CASE("certainty equivalent inverts the payoff") {
    const double uK = oracle::U(oracle::K);
    CHECK(certainty_equivalent(uK, contract) == oracle::B);
    const double x_hat = contract.x_hat();
    CHECK(std::abs(certainty_equivalent(payoff_value(contract, x_hat), contract) - x_hat) <= 1e-10);
    CHECK_THROWS_AS(certainty_equivalent(uK * 1.01, contract), Error);
    CHECK_THROWS_AS(certainty_equivalent(0.0, contract), Error);
    try {
        certainty_equivalent(uK - 1.0, contract);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::infeasible);
    }

    std::mt19937 gen(21);
    std::uniform_real_distribution<double> frac(1e-6, 1.0 - 1e-6);
    for (int k = 0; k < 1000; ++k) {
        const double eu = uK * frac(gen);  // in (U(K), 0)
        const double ce = certainty_equivalent(eu, contract);
        CHECK(ce > oracle::B);
        CHECK(std::abs(payoff_value(contract, ce) - eu) <= 1e-10 * std::abs(eu));
        CHECK(oracle::u(ce) == doctest::Approx(eu).epsilon(1e-10));
    }
}

TEST_CASE("expected utility of degenerate samples") {
    const double uK = oracle::U(oracle::K);
    CHECK(expected_utility(constant_set(0.0, 100), contract).value == uK);
    CHECK(expected_utility(constant_set(oracle::B, 100), contract).value == uK);
    CHECK(expected_utility(constant_set(0.0, 100), contract).se == 0.0);
    CHECK_THROWS_AS(expected_utility(constant_set(-1.0, 10), contract), Error);
    CHECK_THROWS_AS(expected_utility(StoppedSampleSet{}, contract), Error);
    CHECK(stopped_variance(constant_set(77.0, 50)).value == 0.0);
    CHECK(stopped_mean(constant_set(77.0, 50)).value == 77.0);
}

TEST_CASE("sample variance and paired differences") {
    oracle::Normal z(22);
    const std::size_t n = 50000;
    StoppedSampleSet a, b;
    std::vector<double> xa, xb;
    for (std::size_t k = 0; k < n; ++k) {
        const double e = z();
        xa.push_back(100.0 + 10.0 * e);
        xb.push_back(100.0 + 5.0 * e + 3.0 * z());
        a.samples.push_back({10.0, xa.back()});
        b.samples.push_back({10.0, xb.back()});
    }
    // Unbiased sample variance from scratch.
    auto var = [](const std::vector<double>& x) {
        const double m = oracle::mean_se(x).mean;
        long double s = 0.0;
        for (double v : x) s += (v - m) * (v - m);
        return static_cast<double>(s / (x.size() - 1));
    };
    const Estimate va = stopped_variance(a);
    CHECK(va.value == doctest::Approx(var(xa)).epsilon(1e-10));
    CHECK(std::abs(va.value - 100.0) <= 3 * va.se);
    const Estimate d = variance_difference(a, b);
    CHECK(d.value == doctest::Approx(var(xa) - var(xb)).epsilon(1e-10));
    CHECK(std::abs(d.value - (100.0 - 34.0)) <= 3 * d.se);

    const Estimate du = utility_difference(a, b, contract);
    const Estimate ea = expected_utility(a, contract), eb = expected_utility(b, contract);
    CHECK(du.value == doctest::Approx(ea.value - eb.value).epsilon(1e-10));
    const Estimate dce = certainty_equivalent_difference(a, b, contract);
    CHECK(dce.value == doctest::Approx(certainty_equivalent(ea.value, contract) -
                                       certainty_equivalent(eb.value, contract))
                           .epsilon(1e-12));
    CHECK(dce.se > 0.0);

    StoppedSampleSet shorter = b;
    shorter.samples.pop_back();
    CHECK_THROWS_AS(variance_difference(a, shorter), Error);
}

TEST_CASE("stratified stopping dates") {
    const HorizonDistribution h({3.0, 8.0}, {0.25, 0.35}, 12.0);
    const std::size_t n = 1001;
    std::size_t counts[3] = {0, 0, 0};
    for (std::size_t k = 0; k < n; ++k) ++counts[stratified_stop_index(h, n, k)];
    CHECK(counts[0] == 250);
    CHECK(counts[1] == 601 - 250);
    CHECK(counts[2] == n - 601);

    // Stopped sets grow with the stopping probability (common random numbers).
    for (double p = 0.1; p < 0.85; p += 0.1) {
        const HorizonDistribution lo({8.0}, {p}, 12.0), hi({8.0}, {p + 0.1}, 12.0);
        for (std::size_t k = 0; k < n; ++k) {
            if (stratified_stop_index(lo, n, k) == 0) CHECK(stratified_stop_index(hi, n, k) == 0);
        }
    }
}

TEST_CASE("Merton stopped samples") {
    const HorizonDistribution h({8.0}, {0.3}, 12.0);
    const MertonSolution sol = solve_merton(table1, 3.0, h, 100.0);
    const PathMatrix paths = simulate_paths(table1, std::vector<double>{8.0, 12.0}, 20000, 3);
    const StoppedSampleSet set = stopped_samples(sol, paths);
    const auto freq = date_frequencies(set, h);
    REQUIRE(freq.size() == 2);
    CHECK(std::abs(freq[0].value - 0.3) <= 3 * freq[0].se);
    CHECK(std::abs(freq[1].value - 0.7) <= 3 * freq[1].se);
    std::vector<double> deflated;
    for (std::size_t k = 0; k < set.samples.size(); ++k) {
        const std::size_t col = paths.column(set.samples[k].date);
        deflated.push_back(paths.h(k, col) * set.samples[k].wealth);
    }
    CHECK(oracle::within(oracle::mean_se(deflated), 100.0));
    CHECK_THROWS_AS(stopped_samples(sol, simulate_paths(table1, std::vector<double>{12.0}, 10, 3)), Error);
}

TEST_CASE("fixed horizon expected utility against an independent simulation") {
    const FixedHorizonSolution fixed = solve_fixed_horizon(table1, contract, 10.0, 100.0);
    const ProblemSpec spec(table1, contract, HorizonDistribution::fixed(10.0), 100.0);
    const PathMatrix paths = simulate_paths(table1, std::vector<double>{10.0}, 50000, 31);
    const Estimate eu = expected_utility(stopped_samples(spec, fixed, paths), contract);

    oracle::Normal z(32);
    std::vector<double> v(50000);
    const double thr = contract.threshold();
    for (auto& x : v) {
        const double y = fixed.nu_T * oracle::H(10.0, std::sqrt(10.0) * z());
        const double wealth = y > thr ? 0.0 : (std::pow(y / oracle::alpha, -1.0 / 3.0) - oracle::K) / oracle::alpha + oracle::B;
        x = oracle::u(wealth);
    }
    const auto ref = oracle::mean_se(v);
    CHECK(std::abs(eu.value - ref.mean) <= 3 * std::hypot(eu.se, ref.se));
}

TEST_CASE("comparison with the fixed horizon") {
    const ProblemSpec spec(table1, contract, HorizonDistribution({8.0}, {0.5}, 12.0), 100.0);
    SolveOptions o;
    o.n_paths = 20000;
    o.seed = 33;
    o.extra_dates = {10.0};
    const SolverSolution sol = solve_uncertain_horizon(spec, o);
    const ComparisonRecord rec = compare_to_fixed(spec, sol, 10.0);
    CHECK(rec.t_tilde == 10.0);
    CHECK(rec.ce_uncertain.value == doctest::Approx(certainty_equivalent(rec.eu_uncertain.value, contract)));
    CHECK(rec.ce_difference.value == doctest::Approx(rec.ce_uncertain.value - rec.ce_fixed.value).epsilon(1e-12));
    CHECK(rec.var_difference.value == doctest::Approx(rec.var_uncertain.value - rec.var_fixed.value).epsilon(1e-9));
    CHECK(rec.ce_difference.value < -3 * rec.ce_difference.se);
    CHECK(rec.var_difference.value > 3 * rec.var_difference.se);
    const auto freq = date_frequencies(stopped_samples(spec, sol), spec.horizon);
    CHECK(freq[0].value == 0.5);
    CHECK_THROWS_AS(compare_to_fixed(spec, sol, 11.0), Error);
    // 10 is on the grid but 11 is not; a matching mean that is off-grid fails too.
    SolveOptions small;
    small.n_paths = 200;
    const SolverSolution no_grid = solve_uncertain_horizon(spec, small);
    CHECK_THROWS_AS(compare_to_fixed(spec, no_grid, 10.0), Error);
}

TEST_CASE("vanishing stopping probability reduces to the fixed horizon") {
    const ProblemSpec spec(table1, contract, HorizonDistribution({8.0}, {1e-7}, 12.0), 100.0);
    SolveOptions o;
    o.n_paths = 20000;
    o.seed = 34;
    const SolverSolution sol = solve_uncertain_horizon(spec, o);
    const double t_tilde = spec.horizon.mean();
    // E[tau] sits a hair below T; compare on the terminal column directly.
    const FixedHorizonSolution fixed = solve_fixed_horizon(table1, contract, 12.0, 100.0);
    const ProblemSpec fixed_spec(table1, contract, HorizonDistribution::fixed(12.0), 100.0);
    const StoppedSampleSet a = stopped_samples(spec, sol);
    const StoppedSampleSet b = stopped_samples(fixed_spec, fixed, sol.paths);
    CHECK(t_tilde == doctest::Approx(12.0).epsilon(1e-6));
    const Estimate dv = variance_difference(a, b);
    const Estimate dce = certainty_equivalent_difference(a, b, contract);
    CHECK(std::abs(dv.value) <= 1e-4 * stopped_variance(b).value);
    CHECK(std::abs(dce.value) <= 1e-5 * 100.0);
}
