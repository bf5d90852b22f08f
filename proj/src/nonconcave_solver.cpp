#include "uhopt/nonconcave_solver.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <sstream>

#include "uhopt/error.hpp"
#include "uhopt/parallel.hpp"
#include "uhopt/root_finding.hpp"

namespace uhopt {

ProblemSpec::ProblemSpec(MarketParams params_, ContractUtility contract_,
                         HorizonDistribution horizon_, double x0_)
    : params(params_), contract(contract_), horizon(std::move(horizon_)), x0(x0_) {
    require(std::isfinite(x0) && x0 > 0.0, "problem: initial capital must be positive");
}

double ProblemSpec::p() const {
    require(horizon.size() == 1, "problem: two-date solver needs exactly one stopping date");
    return horizon.probs()[0];
}

double ProblemSpec::t1() const {
    require(horizon.size() == 1, "problem: two-date solver needs exactly one stopping date");
    return horizon.dates()[0];
}

namespace {

double alpha_factor(const ProblemSpec& spec) {
    return std::pow(spec.contract.alpha(), -spec.q());
}

double kink_offset(const ProblemSpec& spec) {
    return spec.contract.K() / spec.contract.alpha() - spec.contract.B();
}

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

double continuation_value(const ProblemSpec& spec, double T, double nu_T,
                          const PathState& state) {
    if (std::isinf(nu_T)) return 0.0;
    const auto& c = spec.contract;
    const double thr = c.threshold();
    const double q = spec.q();
    if (state.t == T) return c.inverse_marginal(nu_T * state.h);
    const double gq = g_factor(q, state.t, T, spec.params, nu_T, thr, state.w);
    const double g1 = g_factor(1.0, state.t, T, spec.params, nu_T, thr, state.w);
    return alpha_factor(spec) * std::pow(nu_T, -1.0 / c.gamma()) * gq *
               std::pow(state.h, -1.0 / c.gamma()) -
           kink_offset(spec) * g1;
}

double continuation_value_dw(const ProblemSpec& spec, double T, double nu_T,
                             const PathState& state) {
    if (std::isinf(nu_T)) return 0.0;
    const auto& c = spec.contract;
    const double thr = c.threshold();
    const double q = spec.q();
    const double theta = spec.params.theta();
    const double gamma = c.gamma();
    const double gq = g_factor(q, state.t, T, spec.params, nu_T, thr, state.w);
    const double dgq = g_factor_dw(q, state.t, T, spec.params, nu_T, thr, state.w);
    const double dg1 = g_factor_dw(1.0, state.t, T, spec.params, nu_T, thr, state.w);
    // d h^{-1/gamma} / dw = (theta / gamma) h^{-1/gamma}
    const double scale = alpha_factor(spec) * std::pow(nu_T * state.h, -1.0 / gamma);
    return scale * (theta / gamma * gq + dgq) - kink_offset(spec) * dg1;
}

// ---------------------------------------------------------------------------
// Fixed horizon

FixedHorizonSolution solve_fixed_horizon(const MarketParams& params,
                                         const ContractUtility& contract, double T, double x0) {
    return solve_fixed_horizon(ProblemSpec(params, contract, HorizonDistribution::fixed(T), x0));
}

FixedHorizonSolution solve_fixed_horizon(const ProblemSpec& spec) {
    require(spec.fixed_horizon(), "fixed horizon: horizon has stopping dates");
    const double T = spec.terminal();
    const PathState origin = PathState::at(spec.params, 0.0, 0.0);
    // Budget is decreasing in nu_T; solve in log nu_T.
    auto gap = [&](double log_nu) {
        return continuation_value(spec, T, std::exp(log_nu), origin) / spec.x0 - 1.0;
    };
    const double guess = std::log(spec.contract.threshold());
    const Bracket b = bracket_outward(gap, guess, 1.0);
    const RootResult root = solve_bracketed(gap, b);
    const double nu = std::exp(root.x);
    const double residual = std::abs(continuation_value(spec, T, nu, origin) - spec.x0) / spec.x0;
    if (!(residual <= 1e-10))
        fail(ErrorCode::not_converged, "fixed horizon: budget residual above 1e-10");
    return {nu, T, residual};
}

double fixed_horizon_wealth(const ProblemSpec& spec, const FixedHorizonSolution& sol,
                            const PathState& state) {
    require(state.t <= sol.T, "fixed horizon: time after the horizon");
    return continuation_value(spec, sol.T, sol.nu_T, state);
}

double fixed_horizon_strategy(const ProblemSpec& spec, const FixedHorizonSolution& sol,
                              const PathState& state) {
    require(state.t < sol.T, "fixed horizon: strategy requires s < T");
    return continuation_value_dw(spec, sol.T, sol.nu_T, state) / spec.params.sigma();
}

// ---------------------------------------------------------------------------
// Two-date uncertain horizon

double inner_equation(const ProblemSpec& spec, double h_T1, double w_T1, double nu_T1,
                      double nu_T) {
    const auto& c = spec.contract;
    const double q = spec.q();
    const double inv_g = -1.0 / c.gamma();
    const double t1 = spec.t1();
    const double T = spec.terminal();
    const double gq = g_factor(q, t1, T, spec.params, nu_T, c.threshold(), w_T1);
    const double g1 = g_factor(1.0, t1, T, spec.params, nu_T, c.threshold(), w_T1);
    return alpha_factor(spec) * std::pow(h_T1, inv_g) *
               (std::pow(nu_T1, inv_g) - std::pow(nu_T, inv_g) * gq) +
           kink_offset(spec) * (g1 - 1.0);
}

PathMultipliers solve_inner_nu_T(double h_T1, double w_T1, double C, const ProblemSpec& spec,
                                 double z_guess) {
    require(h_T1 > 0.0, "inner solve: H_{T1} must be positive");
    require(C > 0.0 && std::isfinite(C), "inner solve: C must be positive");
    const double p = spec.p();
    const double inv_g = -1.0 / spec.contract.gamma();
    const double a = alpha_factor(spec);
    const double d = kink_offset(spec);

    // nu_T1 = C s / p and nu_T = C (1 - s) / (1 - p) with s = logistic(z), so
    // the Lagrange sum is C by construction and the equation is decreasing
    // in z.
    auto multipliers = [&](double z) {
        return std::pair{C * logistic(z) / p, C * logistic(-z) / (1.0 - p)};
    };
    auto scaled = [&](double z) {
        const auto [nu1, nu] = multipliers(z);
        if (nu1 == 0.0) return 1.0;
        if (nu == 0.0) return -pos_infinity;
        const double lhs = inner_equation(spec, h_T1, w_T1, nu1, nu);
        return lhs / (a * std::pow(h_T1 * nu1, inv_g) + std::abs(d));
    };

    const Bracket b = bracket_outward(scaled, z_guess, 1.0);
    const RootResult root = solve_bracketed(scaled, b);

    PathMultipliers out{};
    out.z = root.x;
    const auto [nu1, nu] = multipliers(root.x);
    if (nu1 * h_T1 <= spec.contract.threshold()) {
        out.nu_T1 = nu1;
        out.nu_T = nu;
        out.wealth_T1 = spec.contract.inverse_marginal(nu1 * h_T1);
        out.residual = std::abs(root.fx);
        out.positive = true;
    } else {
        out.nu_T1 = pos_infinity;
        out.nu_T = pos_infinity;
        out.wealth_T1 = 0.0;
        out.residual = 0.0;
        out.positive = false;
    }
    return out;
}

std::vector<double> budget_control(const ProblemSpec& spec, const PathMatrix& paths,
                                   std::size_t col_T1) {
    const FixedHorizonSolution limit =
        solve_fixed_horizon(spec.params, spec.contract, spec.terminal(), spec.x0);
    std::vector<double> control(paths.n_paths());
    for (std::size_t i = 0; i < control.size(); ++i) {
        const PathState state = paths.state(i, col_T1);
        control[i] = state.h * continuation_value(spec, spec.terminal(), limit.nu_T, state);
    }
    return control;
}

double mc_budget(const ProblemSpec& spec, const PathMatrix& paths, std::size_t col_T1, double C,
                 unsigned workers, std::vector<PathMultipliers>* out,
                 std::span<const double> control) {
    const std::size_t n = paths.n_paths();
    std::vector<PathMultipliers> local;
    std::vector<PathMultipliers>& sol = out ? *out : local;
    const bool warm = sol.size() == n;
    if (!warm) sol.assign(n, PathMultipliers{});
    std::vector<double> contrib(n);
    parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const double h = paths.h(i, col_T1);
            sol[i] = solve_inner_nu_T(h, paths.w(i, col_T1), C, spec, warm ? sol[i].z : 0.0);
            contrib[i] = h * sol[i].wealth_T1;
            if (!control.empty()) contrib[i] -= control[i];
        }
    });
    double sum = 0.0;
    for (double v : contrib) sum += v;
    return sum / static_cast<double>(n) + (control.empty() ? 0.0 : spec.x0);
}

SolverSolution solve_uncertain_horizon(const ProblemSpec& spec, const SolveOptions& options) {
    require(spec.horizon.size() == 1, "uncertain horizon: exactly one stopping date required");
    std::vector<double> grid{spec.t1(), spec.terminal()};
    for (double t : options.extra_dates) {
        require(t > 0.0 && std::isfinite(t), "uncertain horizon: extra dates must be positive");
        if (std::find(grid.begin(), grid.end(), t) == grid.end()) grid.push_back(t);
    }
    std::sort(grid.begin(), grid.end());
    PathMatrix paths = simulate_paths(spec.params, grid, options.n_paths, options.seed,
                                      options.workers);
    SolverSolution sol = solve_uncertain_horizon(spec, std::move(paths), options);
    sol.seed = options.seed;
    return sol;
}

SolverSolution solve_uncertain_horizon(const ProblemSpec& spec, PathMatrix paths,
                                       const SolveOptions& options) {
    require(spec.horizon.size() == 1, "uncertain horizon: exactly one stopping date required");
    require(paths.n_paths() >= 1, "uncertain horizon: no paths");
    require(options.budget_tol > 0.0, "uncertain horizon: budget tolerance must be positive");

    SolverSolution sol;
    sol.col_T1 = paths.column(spec.t1());
    sol.col_T = paths.column(spec.terminal());
    sol.seed = options.seed;

    const FixedHorizonSolution limit = solve_fixed_horizon(
        spec.params, spec.contract, spec.terminal(), spec.x0);

    const std::vector<double> control =
        options.control_variate ? budget_control(spec, paths, sol.col_T1) : std::vector<double>{};
    std::vector<PathMultipliers> per_path;
    auto gap = [&](double log_c) {
        const double C = std::exp(log_c);
        const double budget =
            mc_budget(spec, paths, sol.col_T1, C, options.workers, &per_path, control);
        sol.history.push_back({C, budget});
        return budget / spec.x0 - 1.0;
    };

    auto report = [&](const std::string& what) {
        std::ostringstream msg;
        msg << "uncertain horizon: " << what << "; last evaluations (C, budget):";
        const std::size_t from = sol.history.size() > 6 ? sol.history.size() - 6 : 0;
        for (std::size_t k = from; k < sol.history.size(); ++k)
            msg << " (" << sol.history[k].C << ", " << sol.history[k].budget << ")";
        return msg.str();
    };

    Bracket b{};
    try {
        b = bracket_outward(gap, std::log(limit.nu_T), std::log(2.0), 60);
    } catch (const Error&) {
        fail(ErrorCode::infeasible, report("budget could not be bracketed in C"));
    }
    RootResult root{};
    try {
        root = solve_bracketed(gap, b, options.budget_tol, options.max_iterations);
    } catch (const Error& e) {
        fail(ErrorCode::not_converged, report(e.what()));
    }
    if (std::abs(root.fx) > options.budget_tol)
        fail(ErrorCode::not_converged, report("bracket collapsed above the budget tolerance"));

    sol.c_star = std::exp(root.x);
    sol.iterations = static_cast<int>(sol.history.size());
    // Final evaluation at C* from a cold start, so every stored multiplier is
    // the same function of the T_1 state that the policy evaluates later.
    per_path.clear();
    sol.budget =
        mc_budget(spec, paths, sol.col_T1, sol.c_star, options.workers, &per_path, control);
    sol.budget_residual = std::abs(sol.budget - spec.x0) / spec.x0;

    const std::size_t n = paths.n_paths();
    sol.nu_T1.resize(n);
    sol.nu_T.resize(n);
    sol.wealth_T1.resize(n);
    sol.wealth_T.resize(n);
    sol.residual.resize(n);
    double plain = 0.0;
    for (std::size_t i = 0; i < n; ++i) plain += paths.h(i, sol.col_T1) * per_path[i].wealth_T1;
    sol.budget_plain = plain / static_cast<double>(n);
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& m = per_path[i];
        sol.nu_T1[i] = m.nu_T1;
        sol.nu_T[i] = m.nu_T;
        sol.wealth_T1[i] = m.wealth_T1;
        sol.residual[i] = m.residual;
        sol.wealth_T[i] = m.positive
                              ? spec.contract.inverse_marginal(m.nu_T * paths.h(i, sol.col_T))
                              : 0.0;
        if (m.positive) {
            const double p = spec.p();
            const double spread = std::abs(p * m.nu_T1 + (1.0 - p) * m.nu_T - sol.c_star) / sol.c_star;
            sol.max_lagrange_spread = std::max(sol.max_lagrange_spread, spread);
        }
        const double dev = paths.h(i, sol.col_T1) * m.wealth_T1 - sol.budget_plain;
        sq += dev * dev;
    }
    sol.budget_se = n > 1 ? std::sqrt(sq / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    sol.paths = std::move(paths);
    return sol;
}

// ---------------------------------------------------------------------------
// Policy evaluation

TwoDatePolicy::TwoDatePolicy(ProblemSpec spec, double C) : spec_(std::move(spec)), C_(C) {
    require(spec_.horizon.size() == 1, "policy: exactly one stopping date required");
    require(C > 0.0 && std::isfinite(C), "policy: C must be positive");
}

PathMultipliers TwoDatePolicy::multipliers(const PathState& at_T1) const {
    require(at_T1.t == spec_.t1(), "policy: anchor state must sit at T_1");
    return solve_inner_nu_T(at_T1.h, at_T1.w, C_, spec_);
}

double TwoDatePolicy::nu_T_for(const PathState& state,
                               const std::optional<PathState>& anchor) const {
    if (state.t == spec_.t1()) return multipliers(state).nu_T;
    require(anchor.has_value(), "policy: dates after T_1 need the path's state at T_1");
    return multipliers(*anchor).nu_T;
}

double TwoDatePolicy::wealth_before_t1(const PathState& state) const {
    const double t1 = spec_.t1();
    const double dt = t1 - state.t;
    const double sd = std::sqrt(dt);
    const auto& params = spec_.params;
    auto h_at = [&](double z) { return state_price_density(params, t1, state.w + sd * z); };
    auto positive = [&](double z) { return solve_inner_nu_T(h_at(z), state.w + sd * z, C_, spec_).positive; };
    auto integrand = [&](double z) {
        const double w = state.w + sd * z;
        const double h = h_at(z);
        return normal_pdf(z) * h * solve_inner_nu_T(h, w, C_, spec_).wealth_T1;
    };

    constexpr double z_max = 12.0;
    // Split at the switch between the zero and positive wealth branches so
    // each piece is smooth.
    double split = z_max;
    const bool pos_lo = positive(-z_max);
    const bool pos_hi = positive(z_max);
    if (pos_lo != pos_hi) {
        double lo = -z_max;
        double hi = z_max;
        while (hi - lo > 1e-13 * std::max(1.0, std::abs(lo))) {
            const double mid = 0.5 * (lo + hi);
            if (positive(mid) == pos_lo) lo = mid;
            else hi = mid;
            if (mid == lo && mid == hi) break;
        }
        split = 0.5 * (lo + hi);
    }
    using boost::math::quadrature::gauss_kronrod;
    double value = gauss_kronrod<double, 61>::integrate(integrand, -z_max, split, 15, 1e-13);
    if (split < z_max)
        value += gauss_kronrod<double, 61>::integrate(integrand, split, z_max, 15, 1e-13);
    return value / state.h;
}

double TwoDatePolicy::wealth(const PathState& state, const std::optional<PathState>& anchor) const {
    const double t1 = spec_.t1();
    const double T = spec_.terminal();
    require(state.t >= 0.0 && state.t <= T, "policy: time outside [0, T]");
    if (state.t < t1) return wealth_before_t1(state);
    if (state.t == t1) return multipliers(state).wealth_T1;
    const double nu_T = nu_T_for(state, anchor);
    return continuation_value(spec_, T, nu_T, state);
}

double TwoDatePolicy::strategy(const PathState& state, const std::optional<PathState>& anchor) const {
    const double t1 = spec_.t1();
    const double T = spec_.terminal();
    require(state.t >= t1 && state.t < T, "policy: strategy is available on [T_1, T)");
    const double nu_T = nu_T_for(state, anchor);
    return continuation_value_dw(spec_, T, nu_T, state) / spec_.params.sigma();
}

double wealth_at(const ProblemSpec& spec, const SolverSolution& solution, const PathState& state,
                 const std::optional<PathState>& anchor) {
    return TwoDatePolicy(spec, solution.c_star).wealth(state, anchor);
}

double strategy_at(const ProblemSpec& spec, const SolverSolution& solution, const PathState& state,
                   const std::optional<PathState>& anchor) {
    return TwoDatePolicy(spec, solution.c_star).strategy(state, anchor);
}

}  // namespace uhopt
