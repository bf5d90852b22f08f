#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "uhopt/market.hpp"
#include "uhopt/payoff.hpp"

namespace uhopt {

struct ProblemSpec {
    MarketParams params;
    ContractUtility contract;
    HorizonDistribution horizon;
    double x0;

    ProblemSpec(MarketParams params, ContractUtility contract, HorizonDistribution horizon,
                double x0);

    // Exponent (gamma - 1) / gamma shared by every closed form below.
    double q() const noexcept { return (contract.gamma() - 1.0) / contract.gamma(); }
    bool fixed_horizon() const noexcept { return horizon.size() == 0; }
    // P(tau = T_1) for the two-date problem.
    double p() const;
    double t1() const;
    double terminal() const noexcept { return horizon.terminal(); }
};

// Time-s value of the contract paying i(nu_T H_T) at T, with nu_T known at s:
// alpha^{-q} nu_T^{-1/gamma} g(q, s, T) h_s^{-1/gamma} - (K/alpha - B) g(1, s, T).
double continuation_value(const ProblemSpec& spec, double T, double nu_T, const PathState& state);

// Derivative of continuation_value with respect to the Brownian level at s.
double continuation_value_dw(const ProblemSpec& spec, double T, double nu_T,
                             const PathState& state);

// ---------------------------------------------------------------------------
// Fixed horizon

struct FixedHorizonSolution {
    double nu_T;
    double T;
    double budget_residual;
};

// Deterministic multiplier with continuation_value(T, nu_T, state at 0) = x0.
FixedHorizonSolution solve_fixed_horizon(const ProblemSpec& spec);
FixedHorizonSolution solve_fixed_horizon(const MarketParams& params,
                                         const ContractUtility& contract, double T,
                                         double x0);

// Optimal wealth at s <= T for the fixed-horizon optimum.
double fixed_horizon_wealth(const ProblemSpec& spec, const FixedHorizonSolution& sol,
                            const PathState& state);
// Cash amount in the risky asset at s < T.
double fixed_horizon_strategy(const ProblemSpec& spec, const FixedHorizonSolution& sol,
                              const PathState& state);

// ---------------------------------------------------------------------------
// Two-date uncertain horizon

// Multipliers on one path at T_1. Both are +infinity on the zero-wealth
// branch.
struct PathMultipliers {
    double nu_T1;
    double nu_T;
    double wealth_T1;
    // |lhs of the implicit nu_T equation| relative to its wealth scale; zero
    // on the zero-wealth branch.
    double residual;
    // Root location in the logit parameterization, reused as a warm start.
    double z;
    bool positive;
};

// Solves the implicit equation for nu_T given (H_{T1}, W_{T1}) and the
// Lagrange constant C, with nu_T1 = (C - (1-p) nu_T) / p.
PathMultipliers solve_inner_nu_T(double h_T1, double w_T1, double C, const ProblemSpec& spec,
                                 double z_guess = 0.0);

// Left-hand side of the implicit nu_T equation at (nu_T1, nu_T), unscaled.
double inner_equation(const ProblemSpec& spec, double h_T1, double w_T1, double nu_T1,
                      double nu_T);

struct SolveOptions {
    std::size_t n_paths = 100000;
    std::uint64_t seed = 1;
    double budget_tol = 1e-3;
    int max_iterations = 200;
    unsigned workers = 0;
    // Subtract H_{T1} times the fixed-horizon continuation value at T_1 (mean
    // exactly x0) from each budget contribution. Unbiased; removes the
    // sampling error of the budget entirely in the p -> 0 limit.
    bool control_variate = true;
    // Additional simulation dates (e.g. a comparison horizon); dates past T are
    // simulated too so several problems can share one path set.
    std::vector<double> extra_dates;
};

struct BudgetEvaluation {
    double C;
    double budget;
};

struct SolverSolution {
    double c_star = 0.0;
    std::vector<double> nu_T1;
    std::vector<double> nu_T;
    std::vector<double> wealth_T1;
    std::vector<double> wealth_T;
    std::vector<double> residual;
    // Budget estimate the calibration targeted (control-variate adjusted
    // when enabled) and its relative gap to x0.
    double budget = 0.0;
    double budget_residual = 0.0;
    // Plain sample mean of H_{T1} P_{T1} and its standard error.
    double budget_plain = 0.0;
    double budget_se = 0.0;
    int iterations = 0;
    // max over finite paths of |p nu_T1 + (1-p) nu_T - C| / C
    double max_lagrange_spread = 0.0;
    std::vector<BudgetEvaluation> history;
    PathMatrix paths;
    std::size_t col_T1 = 0;
    std::size_t col_T = 0;
    std::uint64_t seed = 0;
};

// Per-path control values H_{T1} P^fixed_{T1} whose expectation is x0.
std::vector<double> budget_control(const ProblemSpec& spec, const PathMatrix& paths,
                                   std::size_t col_T1);

// Monte-Carlo budget E[H_{T1} P_{T1}] at a given C on simulated paths, with
// per-path results written into `out` when provided. A non-empty `control`
// switches to the control-variate estimator.
double mc_budget(const ProblemSpec& spec, const PathMatrix& paths, std::size_t col_T1, double C,
                 unsigned workers, std::vector<PathMultipliers>* out = nullptr,
                 std::span<const double> control = {});

SolverSolution solve_uncertain_horizon(const ProblemSpec& spec, const SolveOptions& options);
// Solves on externally simulated paths whose grid contains T_1 and T.
SolverSolution solve_uncertain_horizon(const ProblemSpec& spec, PathMatrix paths,
                                       const SolveOptions& options);

// Optimal policy for a fixed Lagrange constant; evaluates wealth and strategy
// at arbitrary dates. `anchor` is the path's state at T_1, needed after T_1.
class TwoDatePolicy {
public:
    TwoDatePolicy(ProblemSpec spec, double C);

    const ProblemSpec& spec() const noexcept { return spec_; }
    double C() const noexcept { return C_; }

    PathMultipliers multipliers(const PathState& at_T1) const;
    double wealth(const PathState& state, const std::optional<PathState>& anchor = {}) const;
    double strategy(const PathState& state, const std::optional<PathState>& anchor = {}) const;

private:
    // E[H_{T1} P_{T1} | W_s] / H_s for s < T_1 by quadrature over W_{T1}.
    double wealth_before_t1(const PathState& state) const;
    double nu_T_for(const PathState& state, const std::optional<PathState>& anchor) const;

    ProblemSpec spec_;
    double C_;
};

double wealth_at(const ProblemSpec& spec, const SolverSolution& solution,
                 const PathState& state, const std::optional<PathState>& anchor = {});
double strategy_at(const ProblemSpec& spec, const SolverSolution& solution,
                   const PathState& state, const std::optional<PathState>& anchor = {});

}  // namespace uhopt
