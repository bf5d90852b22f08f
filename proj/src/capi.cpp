#define UHOPT_BUILDING_LIBRARY
#include "uhopt/uhopt.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <optional>
#include <string>

#include "uhopt/analytics.hpp"
#include "uhopt/concave_solver.hpp"
#include "uhopt/error.hpp"
#include "uhopt/market.hpp"
#include "uhopt/nonconcave_solver.hpp"
#include "uhopt/payoff.hpp"

struct uhopt_market {
    uhopt::MarketParams value;
};
struct uhopt_horizon {
    uhopt::HorizonDistribution value;
};
struct uhopt_contract {
    uhopt::ContractUtility value;
};
struct uhopt_paths {
    uhopt::PathMatrix value;
};
struct uhopt_merton {
    uhopt::MertonSolution value;
};
struct uhopt_problem {
    uhopt::ProblemSpec value;
};
struct uhopt_solution {
    uhopt::SolverSolution value;
};
struct uhopt_samples {
    uhopt::StoppedSampleSet value;
};

namespace {

thread_local std::string last_error;

uhopt_status to_status(uhopt::ErrorCode code) {
    switch (code) {
        case uhopt::ErrorCode::invalid_argument: return UHOPT_ERR_INVALID_ARGUMENT;
        case uhopt::ErrorCode::no_bracket: return UHOPT_ERR_NO_BRACKET;
        case uhopt::ErrorCode::not_converged: return UHOPT_ERR_NOT_CONVERGED;
        case uhopt::ErrorCode::infeasible: return UHOPT_ERR_INFEASIBLE;
    }
    return UHOPT_ERR_INTERNAL;
}

template <class F>
uhopt_status guarded(F&& body) {
    try {
        body();
        return UHOPT_OK;
    } catch (const uhopt::Error& e) {
        last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return UHOPT_ERR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return UHOPT_ERR_INTERNAL;
    } catch (...) {
        last_error = "unknown error";
        return UHOPT_ERR_INTERNAL;
    }
}

template <class... Ptrs>
void require_non_null(const Ptrs*... ptrs) {
    if (((ptrs == nullptr) || ...)) uhopt::fail(uhopt::ErrorCode::invalid_argument, "null argument");
}

uhopt_estimate to_c(const uhopt::Estimate& e) { return {e.value, e.se}; }

std::optional<uhopt::PathState> anchor_state(const uhopt::ProblemSpec& spec, int have_anchor,
                                             double anchor_w) {
    if (!have_anchor) return std::nullopt;
    return uhopt::PathState::at(spec.params, spec.t1(), anchor_w);
}

}  // namespace

extern "C" {

const char* uhopt_version(void) { return "0.1.0"; }

const char* uhopt_last_error(void) { return last_error.c_str(); }

const char* uhopt_status_name(uhopt_status status) {
    switch (status) {
        case UHOPT_OK: return "ok";
        case UHOPT_ERR_INVALID_ARGUMENT: return "invalid_argument";
        case UHOPT_ERR_NO_BRACKET: return "no_bracket";
        case UHOPT_ERR_NOT_CONVERGED: return "not_converged";
        case UHOPT_ERR_INFEASIBLE: return "infeasible";
        case UHOPT_ERR_INTERNAL: return "internal";
    }
    return "unknown";
}

// ---- market

uhopt_status uhopt_market_create(double mu, double r, double sigma, uhopt_market** out) {
    return guarded([&] {
        require_non_null(out);
        *out = new uhopt_market{uhopt::MarketParams(mu, r, sigma)};
    });
}

void uhopt_market_destroy(uhopt_market* market) { delete market; }

uhopt_status uhopt_market_theta(const uhopt_market* market, double* out) {
    return guarded([&] {
        require_non_null(market, out);
        *out = market->value.theta();
    });
}

uhopt_status uhopt_state_price_density(const uhopt_market* market, double t, double w,
                                       double* out) {
    return guarded([&] {
        require_non_null(market, out);
        uhopt::require(t >= 0.0, "state_price_density: requires t >= 0");
        *out = uhopt::state_price_density(market->value, t, w);
    });
}

uhopt_status uhopt_f_factor(const uhopt_market* market, double q, double t, double T, double* out) {
    return guarded([&] {
        require_non_null(market, out);
        *out = uhopt::f_factor(q, t, T, market->value);
    });
}

uhopt_status uhopt_g_factor(const uhopt_market* market, double q, double t, double T, double nu_T,
                            double threshold, double w_t, double* out) {
    return guarded([&] {
        require_non_null(market, out);
        *out = uhopt::g_factor(q, t, T, market->value, nu_T, threshold, w_t);
    });
}

uhopt_status uhopt_paths_simulate(const uhopt_market* market, const double* grid, size_t n_grid,
                                  size_t n_paths, uint64_t seed, unsigned workers,
                                  uhopt_paths** out) {
    return guarded([&] {
        require_non_null(market, grid, out);
        *out = new uhopt_paths{uhopt::simulate_paths(market->value, std::span(grid, n_grid),
                                                     n_paths, seed, workers)};
    });
}

void uhopt_paths_destroy(uhopt_paths* paths) { delete paths; }

size_t uhopt_paths_count(const uhopt_paths* paths) { return paths ? paths->value.n_paths() : 0; }

size_t uhopt_paths_dates(const uhopt_paths* paths) { return paths ? paths->value.n_dates() : 0; }

uhopt_status uhopt_paths_get(const uhopt_paths* paths, size_t path, size_t date, double* t,
                             double* w, double* h) {
    return guarded([&] {
        require_non_null(paths, t, w, h);
        uhopt::require(path < paths->value.n_paths() && date < paths->value.n_dates(),
                       "paths: index out of range");
        const uhopt::PathState s = paths->value.state(path, date);
        *t = s.t;
        *w = s.w;
        *h = s.h;
    });
}

// ---- horizon

uhopt_status uhopt_horizon_create(const double* dates, const double* probs, size_t n,
                                  double terminal, uhopt_horizon** out) {
    return guarded([&] {
        require_non_null(out);
        if (n > 0) require_non_null(dates, probs);
        std::vector<double> d(dates, dates + n);
        std::vector<double> p(probs, probs + n);
        *out = new uhopt_horizon{uhopt::HorizonDistribution(std::move(d), std::move(p), terminal)};
    });
}

void uhopt_horizon_destroy(uhopt_horizon* horizon) { delete horizon; }

double uhopt_horizon_mean(const uhopt_horizon* horizon) {
    return horizon ? horizon->value.mean() : std::nan("");
}

double uhopt_horizon_variance(const uhopt_horizon* horizon) {
    return horizon ? horizon->value.variance() : std::nan("");
}

// ---- contract

uhopt_status uhopt_contract_create(double gamma, double alpha, double B, double K,
                                   uhopt_contract** out) {
    return guarded([&] {
        require_non_null(out);
        *out = new uhopt_contract{uhopt::ContractUtility(gamma, alpha, B, K)};
    });
}

void uhopt_contract_destroy(uhopt_contract* contract) { delete contract; }

double uhopt_contract_tangency(const uhopt_contract* contract) {
    return contract ? contract->value.x_hat() : std::nan("");
}

double uhopt_contract_threshold(const uhopt_contract* contract) {
    return contract ? contract->value.threshold() : std::nan("");
}

double uhopt_payoff_value(const uhopt_contract* contract, double x) {
    return contract ? contract->value.value(x) : std::nan("");
}

double uhopt_envelope_value(const uhopt_contract* contract, double x) {
    return contract ? contract->value.envelope(x) : std::nan("");
}

uhopt_status uhopt_subdifferential(const uhopt_contract* contract, double x, double* lo,
                                   double* hi) {
    return guarded([&] {
        require_non_null(contract, lo, hi);
        const uhopt::Interval iv = contract->value.subdifferential(x);
        *lo = iv.lo;
        *hi = iv.hi;
    });
}

uhopt_status uhopt_inverse_marginal(const uhopt_contract* contract, double y, double* out) {
    return guarded([&] {
        require_non_null(contract, out);
        *out = contract->value.inverse_marginal(y);
    });
}

uhopt_status uhopt_certainty_equivalent(const uhopt_contract* contract, double eu, double* out) {
    return guarded([&] {
        require_non_null(contract, out);
        *out = uhopt::certainty_equivalent(eu, contract->value);
    });
}

// ---- merton

uhopt_status uhopt_merton_solve(const uhopt_market* market, double gamma,
                                const uhopt_horizon* horizon, double x, uhopt_merton** out) {
    return guarded([&] {
        require_non_null(market, horizon, out);
        *out = new uhopt_merton{uhopt::solve_merton(market->value, gamma, horizon->value, x)};
    });
}

void uhopt_merton_destroy(uhopt_merton* solution) { delete solution; }

double uhopt_merton_fraction(const uhopt_merton* solution) {
    return solution ? solution->value.fraction() : std::nan("");
}

double uhopt_merton_budget_residual(const uhopt_merton* solution) {
    return solution ? solution->value.budget_residual() : std::nan("");
}

uhopt_status uhopt_merton_nu(const uhopt_merton* solution, double s, double* out) {
    return guarded([&] {
        require_non_null(solution, out);
        *out = solution->value.nu(s);
    });
}

uhopt_status uhopt_merton_wealth(const uhopt_merton* solution, double s, double h, double* out) {
    return guarded([&] {
        require_non_null(solution, out);
        uhopt::require(h > 0.0, "merton_wealth: h must be positive");
        uhopt::PathState state;
        state.t = s;
        state.h = h;
        *out = uhopt::merton_wealth(solution->value, state);
    });
}

uhopt_status uhopt_merton_samples(const uhopt_merton* solution, const uhopt_paths* paths,
                                  uhopt_samples** out) {
    return guarded([&] {
        require_non_null(solution, paths, out);
        *out = new uhopt_samples{uhopt::stopped_samples(solution->value, paths->value)};
    });
}

// ---- non-concave

uhopt_status uhopt_problem_create(const uhopt_market* market, const uhopt_contract* contract,
                                  const uhopt_horizon* horizon, double x0, uhopt_problem** out) {
    return guarded([&] {
        require_non_null(market, contract, horizon, out);
        *out = new uhopt_problem{
            uhopt::ProblemSpec(market->value, contract->value, horizon->value, x0)};
    });
}

void uhopt_problem_destroy(uhopt_problem* problem) { delete problem; }

uhopt_status uhopt_fixed_horizon_solve(const uhopt_problem* problem, double T, double* nu_T,
                                       double* budget_residual) {
    return guarded([&] {
        require_non_null(problem, nu_T, budget_residual);
        const auto& p = problem->value;
        const uhopt::FixedHorizonSolution sol =
            uhopt::solve_fixed_horizon(p.params, p.contract, T, p.x0);
        *nu_T = sol.nu_T;
        *budget_residual = sol.budget_residual;
    });
}

uhopt_status uhopt_fixed_horizon_samples(const uhopt_problem* problem, double T, double nu_T,
                                         const uhopt_paths* paths, uhopt_samples** out) {
    return guarded([&] {
        require_non_null(problem, paths, out);
        const auto& p = problem->value;
        const uhopt::ProblemSpec fixed(p.params, p.contract, uhopt::HorizonDistribution::fixed(T),
                                       p.x0);
        const uhopt::FixedHorizonSolution sol{nu_T, T, 0.0};
        *out = new uhopt_samples{uhopt::stopped_samples(fixed, sol, paths->value)};
    });
}

void uhopt_solve_options_default(uhopt_solve_options* options) {
    if (!options) return;
    const uhopt::SolveOptions d;
    options->n_paths = d.n_paths;
    options->seed = d.seed;
    options->budget_tol = d.budget_tol;
    options->max_iterations = d.max_iterations;
    options->workers = d.workers;
    options->extra_dates = nullptr;
    options->n_extra_dates = 0;
    options->control_variate = d.control_variate ? 1 : 0;
}

uhopt_status uhopt_inner_solve(const uhopt_problem* problem, double h_T1, double w_T1, double C,
                               double* nu_T1, double* nu_T, double* wealth_T1) {
    return guarded([&] {
        require_non_null(problem, nu_T1, nu_T, wealth_T1);
        const uhopt::PathMultipliers m = uhopt::solve_inner_nu_T(h_T1, w_T1, C, problem->value);
        *nu_T1 = m.nu_T1;
        *nu_T = m.nu_T;
        *wealth_T1 = m.wealth_T1;
    });
}

uhopt_status uhopt_uncertain_solve(const uhopt_problem* problem, const uhopt_solve_options* options,
                                   uhopt_solution** out) {
    return guarded([&] {
        require_non_null(problem, options, out);
        uhopt::SolveOptions o;
        o.n_paths = options->n_paths;
        o.seed = options->seed;
        o.budget_tol = options->budget_tol;
        o.max_iterations = options->max_iterations;
        o.workers = options->workers;
        if (options->n_extra_dates > 0) {
            require_non_null(options->extra_dates);
            o.extra_dates.assign(options->extra_dates,
                                 options->extra_dates + options->n_extra_dates);
        }
        o.control_variate = options->control_variate != 0;
        *out = new uhopt_solution{uhopt::solve_uncertain_horizon(problem->value, o)};
    });
}

void uhopt_solution_destroy(uhopt_solution* solution) { delete solution; }

uhopt_status uhopt_solution_summary_get(const uhopt_solution* solution,
                                        uhopt_solution_summary* out) {
    return guarded([&] {
        require_non_null(solution, out);
        const auto& s = solution->value;
        out->c_star = s.c_star;
        out->budget = s.budget;
        out->budget_residual = s.budget_residual;
        out->budget_plain = s.budget_plain;
        out->budget_se = s.budget_se;
        out->iterations = s.iterations;
        out->n_paths = s.paths.n_paths();
        out->n_zero_wealth = 0;
        out->max_equation_residual = 0.0;
        for (std::size_t i = 0; i < s.nu_T.size(); ++i) {
            if (!std::isfinite(s.nu_T[i])) ++out->n_zero_wealth;
            out->max_equation_residual = std::max(out->max_equation_residual, std::abs(s.residual[i]));
        }
        out->max_lagrange_spread = s.max_lagrange_spread;
    });
}

uhopt_status uhopt_solution_copy(const uhopt_solution* solution, uhopt_field field, double* out,
                                 size_t n) {
    return guarded([&] {
        require_non_null(solution, out);
        const auto& s = solution->value;
        uhopt::require(n == s.paths.n_paths(), "solution_copy: length mismatch");
        for (std::size_t i = 0; i < n; ++i) {
            switch (field) {
                case UHOPT_FIELD_NU_T1: out[i] = s.nu_T1[i]; break;
                case UHOPT_FIELD_NU_T: out[i] = s.nu_T[i]; break;
                case UHOPT_FIELD_WEALTH_T1: out[i] = s.wealth_T1[i]; break;
                case UHOPT_FIELD_WEALTH_T: out[i] = s.wealth_T[i]; break;
                case UHOPT_FIELD_H_T1: out[i] = s.paths.h(i, s.col_T1); break;
                case UHOPT_FIELD_W_T1: out[i] = s.paths.w(i, s.col_T1); break;
                case UHOPT_FIELD_H_T: out[i] = s.paths.h(i, s.col_T); break;
                case UHOPT_FIELD_W_T: out[i] = s.paths.w(i, s.col_T); break;
                case UHOPT_FIELD_RESIDUAL: out[i] = s.residual[i]; break;
                default: uhopt::fail(uhopt::ErrorCode::invalid_argument, "solution_copy: unknown field");
            }
        }
    });
}

uhopt_status uhopt_solution_samples(const uhopt_problem* problem, const uhopt_solution* solution,
                                    uhopt_samples** out) {
    return guarded([&] {
        require_non_null(problem, solution, out);
        *out = new uhopt_samples{uhopt::stopped_samples(problem->value, solution->value)};
    });
}

uhopt_status uhopt_solution_wealth_at(const uhopt_problem* problem, const uhopt_solution* solution,
                                      double t, double w, int have_anchor, double anchor_w,
                                      double* out) {
    return guarded([&] {
        require_non_null(problem, solution, out);
        const auto& spec = problem->value;
        const auto state = uhopt::PathState::at(spec.params, t, w);
        *out = uhopt::wealth_at(spec, solution->value, state, anchor_state(spec, have_anchor, anchor_w));
    });
}

uhopt_status uhopt_solution_strategy_at(const uhopt_problem* problem,
                                        const uhopt_solution* solution, double t, double w,
                                        int have_anchor, double anchor_w, double* out) {
    return guarded([&] {
        require_non_null(problem, solution, out);
        const auto& spec = problem->value;
        const auto state = uhopt::PathState::at(spec.params, t, w);
        *out = uhopt::strategy_at(spec, solution->value, state,
                                  anchor_state(spec, have_anchor, anchor_w));
    });
}

// ---- analytics

void uhopt_samples_destroy(uhopt_samples* samples) { delete samples; }

size_t uhopt_samples_count(const uhopt_samples* samples) {
    return samples ? samples->value.samples.size() : 0;
}

uhopt_status uhopt_samples_get(const uhopt_samples* samples, size_t i, double* date,
                               double* wealth) {
    return guarded([&] {
        require_non_null(samples, date, wealth);
        uhopt::require(i < samples->value.samples.size(), "samples: index out of range");
        *date = samples->value.samples[i].date;
        *wealth = samples->value.samples[i].wealth;
    });
}

uhopt_status uhopt_expected_utility(const uhopt_samples* samples, const uhopt_contract* contract,
                                    uhopt_estimate* out) {
    return guarded([&] {
        require_non_null(samples, contract, out);
        *out = to_c(uhopt::expected_utility(samples->value, contract->value));
    });
}

uhopt_status uhopt_samples_certainty_equivalent(const uhopt_samples* samples,
                                                const uhopt_contract* contract,
                                                uhopt_estimate* out) {
    return guarded([&] {
        require_non_null(samples, contract, out);
        const uhopt::Estimate eu = uhopt::expected_utility(samples->value, contract->value);
        *out = to_c(uhopt::certainty_equivalent(eu, contract->value));
    });
}

uhopt_status uhopt_stopped_mean(const uhopt_samples* samples, uhopt_estimate* out) {
    return guarded([&] {
        require_non_null(samples, out);
        *out = to_c(uhopt::stopped_mean(samples->value));
    });
}

uhopt_status uhopt_stopped_variance(const uhopt_samples* samples, uhopt_estimate* out) {
    return guarded([&] {
        require_non_null(samples, out);
        *out = to_c(uhopt::stopped_variance(samples->value));
    });
}

uhopt_status uhopt_ce_difference(const uhopt_samples* a, const uhopt_samples* b,
                                 const uhopt_contract* contract, uhopt_estimate* out) {
    return guarded([&] {
        require_non_null(a, b, contract, out);
        *out = to_c(uhopt::certainty_equivalent_difference(a->value, b->value, contract->value));
    });
}

uhopt_status uhopt_variance_difference(const uhopt_samples* a, const uhopt_samples* b,
                                       uhopt_estimate* out) {
    return guarded([&] {
        require_non_null(a, b, out);
        *out = to_c(uhopt::variance_difference(a->value, b->value));
    });
}

uhopt_status uhopt_compare_to_fixed(const uhopt_problem* problem, const uhopt_solution* solution,
                                    double t_tilde, uhopt_comparison* out) {
    return guarded([&] {
        require_non_null(problem, solution, out);
        const uhopt::ComparisonRecord r =
            uhopt::compare_to_fixed(problem->value, solution->value, t_tilde);
        out->t_tilde = r.t_tilde;
        out->nu_fixed = r.nu_fixed;
        out->eu_uncertain = to_c(r.eu_uncertain);
        out->eu_fixed = to_c(r.eu_fixed);
        out->ce_uncertain = to_c(r.ce_uncertain);
        out->ce_fixed = to_c(r.ce_fixed);
        out->ce_difference = to_c(r.ce_difference);
        out->var_uncertain = to_c(r.var_uncertain);
        out->var_fixed = to_c(r.var_fixed);
        out->var_difference = to_c(r.var_difference);
    });
}

}  // extern "C"
