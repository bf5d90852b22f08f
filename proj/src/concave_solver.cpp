#include "uhopt/concave_solver.hpp"

#include <cmath>

#include "uhopt/error.hpp"

namespace uhopt {

MertonSolution::MertonSolution(MarketParams params, double gamma,
                               HorizonDistribution horizon, double initial_wealth)
    : params_(params), gamma_(gamma), horizon_(std::move(horizon)), x_(initial_wealth) {
    require(std::isfinite(gamma) && gamma > 0.0 && gamma != 1.0,
            "merton: gamma must be positive and different from 1");
    require(std::isfinite(initial_wealth) && initial_wealth > 0.0,
            "merton: initial wealth must be positive");
}

double MertonSolution::nu(double s) const {
    require(s >= 0.0 && s <= horizon_.terminal(), "merton: time outside [0, T]");
    const double q = (gamma_ - 1.0) / gamma_;
    return std::pow(x_ / f_factor(q, 0.0, s, params_), -gamma_);
}

double MertonSolution::fraction() const noexcept {
    return (params_.mu() - params_.r()) / (gamma_ * params_.sigma() * params_.sigma());
}

double MertonSolution::budget_residual() const {
    const double q = (gamma_ - 1.0) / gamma_;
    auto term = [&](double t) {
        return std::pow(nu(t), -1.0 / gamma_) * f_factor(q, 0.0, t, params_);
    };
    double budget = horizon_.terminal_prob() * term(horizon_.terminal());
    for (std::size_t i = 0; i < horizon_.size(); ++i)
        budget += horizon_.probs()[i] * term(horizon_.dates()[i]);
    return std::abs(budget - x_) / x_;
}

MertonSolution solve_merton(const MarketParams& params, double gamma,
                            const HorizonDistribution& horizon, double x) {
    return MertonSolution(params, gamma, horizon, x);
}

double merton_wealth(const MertonSolution& sol, const PathState& state) {
    return std::pow(sol.nu(state.t) * state.h, -1.0 / sol.gamma());
}

double merton_strategy(const MertonSolution& sol, const PathState& state) {
    return sol.fraction() * merton_wealth(sol, state);
}

}  // namespace uhopt
