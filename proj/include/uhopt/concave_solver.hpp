#pragma once

#include "uhopt/market.hpp"
#include "uhopt/payoff.hpp"

namespace uhopt {

// Power-utility optimum with a discrete random horizon. The multiplier
// schedule is deterministic and the risky weight is the classical Merton
// fraction regardless of the horizon law.
class MertonSolution {
public:
    MertonSolution(MarketParams params, double gamma, HorizonDistribution horizon,
                   double initial_wealth);

    const MarketParams& params() const noexcept { return params_; }
    const HorizonDistribution& horizon() const noexcept { return horizon_; }
    double gamma() const noexcept { return gamma_; }
    double initial_wealth() const noexcept { return x_; }

    // nu_s = (x / f((gamma-1)/gamma, 0, s))^(-gamma), 0 <= s <= T.
    double nu(double s) const;
    // Constant risky-asset weight (mu - r) / (gamma sigma^2).
    double fraction() const noexcept;
    // Relative error of the budget identity at the stored schedule.
    double budget_residual() const;

private:
    MarketParams params_;
    double gamma_;
    HorizonDistribution horizon_;
    double x_;
};

MertonSolution solve_merton(const MarketParams& params, double gamma,
                            const HorizonDistribution& horizon, double x);

// Optimal wealth (nu_s h)^(-1/gamma) at the state's date.
double merton_wealth(const MertonSolution& sol, const PathState& state);

// Cash amount held in the risky asset.
double merton_strategy(const MertonSolution& sol, const PathState& state);

}  // namespace uhopt
