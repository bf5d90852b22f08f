#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "uhopt/concave_solver.hpp"
#include "uhopt/market.hpp"
#include "uhopt/nonconcave_solver.hpp"
#include "uhopt/payoff.hpp"

namespace uhopt {

// Monte-Carlo estimate with its standard error.
struct Estimate {
    double value = 0.0;
    double se = 0.0;
};

struct StoppedSample {
    double date;
    double wealth;
};

// Stopped wealth P_{tau ^ T} per simulated path, equally weighted.
struct StoppedSampleSet {
    std::vector<StoppedSample> samples;
    std::uint64_t seed = 0;
    std::size_t n_paths = 0;
};

// Stratified stopping-date assignment: path k stops at dates[i] when
// round(n * (p_1 + ... + p_{i-1})) <= k < round(n * (p_1 + ... + p_i)), and
// at the terminal date otherwise. Returns the date index, size() for T.
std::size_t stratified_stop_index(const HorizonDistribution& horizon, std::size_t n,
                                  std::size_t k);

StoppedSampleSet stopped_samples(const ProblemSpec& spec, const SolverSolution& solution);
StoppedSampleSet stopped_samples(const ProblemSpec& spec, const FixedHorizonSolution& solution,
                                 const PathMatrix& paths);
StoppedSampleSet stopped_samples(const MertonSolution& solution, const PathMatrix& paths);

Estimate expected_utility(const StoppedSampleSet& set, const ContractUtility& c);
// Smallest wealth whose contract utility equals eu.
double certainty_equivalent(double eu, const ContractUtility& c);
// Certainty equivalent with a delta-method standard error.
Estimate certainty_equivalent(const Estimate& eu, const ContractUtility& c);
Estimate stopped_variance(const StoppedSampleSet& set);
Estimate stopped_mean(const StoppedSampleSet& set);

// Paired (common random numbers) differences a - b; both sets must come from
// the same paths.
Estimate utility_difference(const StoppedSampleSet& a, const StoppedSampleSet& b,
                            const ContractUtility& c);
Estimate certainty_equivalent_difference(const StoppedSampleSet& a, const StoppedSampleSet& b,
                                         const ContractUtility& c);
Estimate variance_difference(const StoppedSampleSet& a, const StoppedSampleSet& b);

// Empirical P(tau = date) for each stopping date followed by the terminal date.
std::vector<Estimate> date_frequencies(const StoppedSampleSet& set,
                                       const HorizonDistribution& horizon);

struct ComparisonRecord {
    double t_tilde = 0.0;
    Estimate eu_uncertain;
    Estimate eu_fixed;
    Estimate ce_uncertain;
    Estimate ce_fixed;
    Estimate ce_difference;  // uncertain - fixed
    Estimate var_uncertain;
    Estimate var_fixed;
    Estimate var_difference;  // uncertain - fixed
    double nu_fixed = 0.0;
};

// Compares the uncertain-horizon optimum with the fixed-horizon optimum at
// t_tilde = E[tau] on the same simulated paths; t_tilde must lie on the
// solution's simulation grid.
ComparisonRecord compare_to_fixed(const ProblemSpec& spec, const SolverSolution& solution,
                                  double t_tilde);

}  // namespace uhopt
