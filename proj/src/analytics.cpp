#include "uhopt/analytics.hpp"

#include <cmath>

#include "uhopt/error.hpp"

namespace uhopt {

namespace {

Estimate mean_of(std::span<const double> xs) {
    const std::size_t n = xs.size();
    require(n > 0, "analytics: empty sample");
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double mean = sum / static_cast<double>(n);
    if (n == 1) return {mean, 0.0};
    double sq = 0.0;
    for (double x : xs) sq += (x - mean) * (x - mean);
    return {mean, std::sqrt(sq / static_cast<double>(n - 1) / static_cast<double>(n))};
}

std::vector<double> wealth_of(const StoppedSampleSet& set) {
    std::vector<double> out;
    out.reserve(set.samples.size());
    for (const auto& s : set.samples) out.push_back(s.wealth);
    return out;
}

std::vector<double> utilities(const StoppedSampleSet& set, const ContractUtility& c) {
    std::vector<double> out;
    out.reserve(set.samples.size());
    for (const auto& s : set.samples) {
        require(s.wealth >= 0.0, "analytics: negative wealth sample");
        out.push_back(c.value(s.wealth));
    }
    return out;
}

// Squared deviations scaled so their mean is the unbiased variance.
std::vector<double> scaled_square_deviations(const StoppedSampleSet& set) {
    const std::vector<double> w = wealth_of(set);
    const double mean = mean_of(w).value;
    const double n = static_cast<double>(w.size());
    require(w.size() > 1, "analytics: variance needs two samples");
    std::vector<double> out;
    out.reserve(w.size());
    for (double x : w) out.push_back((x - mean) * (x - mean) * n / (n - 1.0));
    return out;
}

void require_paired(const StoppedSampleSet& a, const StoppedSampleSet& b) {
    require(a.samples.size() == b.samples.size() && !a.samples.empty(),
            "analytics: paired comparison needs equally sized sample sets");
}

}  // namespace

std::size_t stratified_stop_index(const HorizonDistribution& horizon, std::size_t n,
                                  std::size_t k) {
    double cum = 0.0;
    for (std::size_t i = 0; i < horizon.size(); ++i) {
        cum += horizon.probs()[i];
        if (static_cast<double>(k) < std::round(static_cast<double>(n) * cum)) return i;
    }
    return horizon.size();
}

StoppedSampleSet stopped_samples(const ProblemSpec& spec, const SolverSolution& solution) {
    const std::size_t n = solution.paths.n_paths();
    require(solution.wealth_T1.size() == n, "analytics: solution has no per-path wealth");
    StoppedSampleSet set;
    set.seed = solution.seed;
    set.n_paths = n;
    set.samples.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (stratified_stop_index(spec.horizon, n, k) == 0)
            set.samples.push_back({spec.t1(), solution.wealth_T1[k]});
        else
            set.samples.push_back({spec.terminal(), solution.wealth_T[k]});
    }
    return set;
}

StoppedSampleSet stopped_samples(const ProblemSpec& spec, const FixedHorizonSolution& solution,
                                 const PathMatrix& paths) {
    const std::size_t col = paths.column(solution.T);
    StoppedSampleSet set;
    set.n_paths = paths.n_paths();
    set.samples.reserve(paths.n_paths());
    for (std::size_t k = 0; k < paths.n_paths(); ++k) {
        const double wealth = spec.contract.inverse_marginal(solution.nu_T * paths.h(k, col));
        set.samples.push_back({solution.T, wealth});
    }
    return set;
}

StoppedSampleSet stopped_samples(const MertonSolution& solution, const PathMatrix& paths) {
    const auto& horizon = solution.horizon();
    std::vector<std::size_t> cols;
    for (double t : horizon.dates()) cols.push_back(paths.column(t));
    cols.push_back(paths.column(horizon.terminal()));
    StoppedSampleSet set;
    set.n_paths = paths.n_paths();
    set.samples.reserve(paths.n_paths());
    for (std::size_t k = 0; k < paths.n_paths(); ++k) {
        const std::size_t i = stratified_stop_index(horizon, paths.n_paths(), k);
        const PathState state = paths.state(k, cols[i]);
        set.samples.push_back({state.t, merton_wealth(solution, state)});
    }
    return set;
}

Estimate expected_utility(const StoppedSampleSet& set, const ContractUtility& c) {
    return mean_of(utilities(set, c));
}

double certainty_equivalent(double eu, const ContractUtility& c) {
    const double floor = c.value(0.0);
    if (!(eu >= floor)) fail(ErrorCode::infeasible, "certainty equivalent: utility below U(K)");
    if (c.gamma() > 1.0 && eu >= 0.0)
        fail(ErrorCode::infeasible, "certainty equivalent: utility above sup U");
    if (eu == floor) return c.B();
    return c.B() + (c.base().inverse(eu) - c.K()) / c.alpha();
}

Estimate certainty_equivalent(const Estimate& eu, const ContractUtility& c) {
    const double ce = certainty_equivalent(eu.value, c);
    const double slope = c.marginal(ce);
    return {ce, slope > 0.0 ? eu.se / slope : pos_infinity};
}

Estimate stopped_mean(const StoppedSampleSet& set) { return mean_of(wealth_of(set)); }

Estimate stopped_variance(const StoppedSampleSet& set) {
    return mean_of(scaled_square_deviations(set));
}

Estimate utility_difference(const StoppedSampleSet& a, const StoppedSampleSet& b,
                            const ContractUtility& c) {
    require_paired(a, b);
    const auto ua = utilities(a, c);
    const auto ub = utilities(b, c);
    std::vector<double> d(ua.size());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = ua[k] - ub[k];
    return mean_of(d);
}

Estimate certainty_equivalent_difference(const StoppedSampleSet& a, const StoppedSampleSet& b,
                                         const ContractUtility& c) {
    require_paired(a, b);
    const auto ua = utilities(a, c);
    const auto ub = utilities(b, c);
    const double ce_a = certainty_equivalent(mean_of(ua).value, c);
    const double ce_b = certainty_equivalent(mean_of(ub).value, c);
    // First-order expansion of CE around each mean utility.
    const double ma = c.marginal(ce_a);
    const double mb = c.marginal(ce_b);
    std::vector<double> d(ua.size());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = ua[k] / ma - ub[k] / mb;
    return {ce_a - ce_b, mean_of(d).se};
}

Estimate variance_difference(const StoppedSampleSet& a, const StoppedSampleSet& b) {
    require_paired(a, b);
    const auto da = scaled_square_deviations(a);
    const auto db = scaled_square_deviations(b);
    std::vector<double> d(da.size());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = da[k] - db[k];
    return mean_of(d);
}

std::vector<Estimate> date_frequencies(const StoppedSampleSet& set,
                                       const HorizonDistribution& horizon) {
    std::vector<double> targets(horizon.dates().begin(), horizon.dates().end());
    targets.push_back(horizon.terminal());
    std::vector<Estimate> out;
    for (double t : targets) {
        std::vector<double> hits;
        hits.reserve(set.samples.size());
        for (const auto& s : set.samples) hits.push_back(s.date == t ? 1.0 : 0.0);
        out.push_back(mean_of(hits));
    }
    return out;
}

ComparisonRecord compare_to_fixed(const ProblemSpec& spec, const SolverSolution& solution,
                                  double t_tilde) {
    require(std::abs(t_tilde - spec.horizon.mean()) <= 1e-9 * spec.terminal(),
            "compare_to_fixed: t_tilde must equal E[tau]");
    const FixedHorizonSolution fixed =
        solve_fixed_horizon(spec.params, spec.contract, t_tilde, spec.x0);
    const ProblemSpec fixed_spec(spec.params, spec.contract, HorizonDistribution::fixed(t_tilde),
                                 spec.x0);
    const StoppedSampleSet uncertain_set = stopped_samples(spec, solution);
    const StoppedSampleSet fixed_set = stopped_samples(fixed_spec, fixed, solution.paths);

    ComparisonRecord rec;
    rec.t_tilde = t_tilde;
    rec.nu_fixed = fixed.nu_T;
    rec.eu_uncertain = expected_utility(uncertain_set, spec.contract);
    rec.eu_fixed = expected_utility(fixed_set, spec.contract);
    rec.ce_uncertain = certainty_equivalent(rec.eu_uncertain, spec.contract);
    rec.ce_fixed = certainty_equivalent(rec.eu_fixed, spec.contract);
    rec.ce_difference = certainty_equivalent_difference(uncertain_set, fixed_set, spec.contract);
    rec.var_uncertain = stopped_variance(uncertain_set);
    rec.var_fixed = stopped_variance(fixed_set);
    rec.var_difference = variance_difference(uncertain_set, fixed_set);
    return rec;
}

}  // namespace uhopt
