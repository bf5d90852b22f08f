/*
 * uhopt C API: portfolio optimization with an uncertain discrete horizon.
 *
 * Every object is an opaque handle created by a *_create / *_solve function
 * and released by the matching *_destroy. Every fallible call returns a
 * uhopt_status; on failure uhopt_last_error() describes the problem for the
 * calling thread until that thread's next failing call.
 */
#ifndef UHOPT_H
#define UHOPT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(UHOPT_BUILDING_LIBRARY)
#define UHOPT_API __attribute__((visibility("default")))
#else
#define UHOPT_API
#endif

typedef enum uhopt_status {
    UHOPT_OK = 0,
    UHOPT_ERR_INVALID_ARGUMENT = 1,
    UHOPT_ERR_NO_BRACKET = 2,
    UHOPT_ERR_NOT_CONVERGED = 3,
    UHOPT_ERR_INFEASIBLE = 4,
    UHOPT_ERR_INTERNAL = 5
} uhopt_status;

typedef struct uhopt_market uhopt_market;
typedef struct uhopt_horizon uhopt_horizon;
typedef struct uhopt_contract uhopt_contract;
typedef struct uhopt_paths uhopt_paths;
typedef struct uhopt_merton uhopt_merton;
typedef struct uhopt_problem uhopt_problem;
typedef struct uhopt_solution uhopt_solution;
typedef struct uhopt_samples uhopt_samples;

UHOPT_API const char* uhopt_version(void);
UHOPT_API const char* uhopt_last_error(void);
/* Stable lowercase identifier, e.g. "invalid_argument". */
UHOPT_API const char* uhopt_status_name(uhopt_status status);

/* ---- market ------------------------------------------------------------ */

UHOPT_API uhopt_status uhopt_market_create(double mu, double r, double sigma, uhopt_market** out);
UHOPT_API void uhopt_market_destroy(uhopt_market* market);
UHOPT_API uhopt_status uhopt_market_theta(const uhopt_market* market, double* out);

UHOPT_API uhopt_status uhopt_state_price_density(const uhopt_market* market, double t, double w,
                                                 double* out);
UHOPT_API uhopt_status uhopt_f_factor(const uhopt_market* market, double q, double t, double T,
                                      double* out);
UHOPT_API uhopt_status uhopt_g_factor(const uhopt_market* market, double q, double t, double T,
                                      double nu_T, double threshold, double w_t, double* out);

/* Exact sampling of (W, H) at the grid dates; reproducible per (seed, path). */
UHOPT_API uhopt_status uhopt_paths_simulate(const uhopt_market* market, const double* grid,
                                            size_t n_grid, size_t n_paths, uint64_t seed,
                                            unsigned workers, uhopt_paths** out);
UHOPT_API void uhopt_paths_destroy(uhopt_paths* paths);
UHOPT_API size_t uhopt_paths_count(const uhopt_paths* paths);
UHOPT_API size_t uhopt_paths_dates(const uhopt_paths* paths);
UHOPT_API uhopt_status uhopt_paths_get(const uhopt_paths* paths, size_t path, size_t date,
                                       double* t, double* w, double* h);

/* ---- horizon ----------------------------------------------------------- */

/* n == 0 gives a fixed horizon at `terminal`. */
UHOPT_API uhopt_status uhopt_horizon_create(const double* dates, const double* probs, size_t n,
                                            double terminal, uhopt_horizon** out);
UHOPT_API void uhopt_horizon_destroy(uhopt_horizon* horizon);
UHOPT_API double uhopt_horizon_mean(const uhopt_horizon* horizon);
UHOPT_API double uhopt_horizon_variance(const uhopt_horizon* horizon);

/* ---- contract utility -------------------------------------------------- */

UHOPT_API uhopt_status uhopt_contract_create(double gamma, double alpha, double B, double K,
                                             uhopt_contract** out);
UHOPT_API void uhopt_contract_destroy(uhopt_contract* contract);
UHOPT_API double uhopt_contract_tangency(const uhopt_contract* contract);
/* u'(x_hat), the slope of the affine part of the concave envelope. */
UHOPT_API double uhopt_contract_threshold(const uhopt_contract* contract);
/* Returns -inf for x < 0. */
UHOPT_API double uhopt_payoff_value(const uhopt_contract* contract, double x);
UHOPT_API double uhopt_envelope_value(const uhopt_contract* contract, double x);
/* hi is +inf at x == 0. */
UHOPT_API uhopt_status uhopt_subdifferential(const uhopt_contract* contract, double x, double* lo,
                                             double* hi);
UHOPT_API uhopt_status uhopt_inverse_marginal(const uhopt_contract* contract, double y,
                                              double* out);
UHOPT_API uhopt_status uhopt_certainty_equivalent(const uhopt_contract* contract, double eu,
                                                  double* out);

/* ---- concave (Merton) solver ------------------------------------------- */

UHOPT_API uhopt_status uhopt_merton_solve(const uhopt_market* market, double gamma,
                                          const uhopt_horizon* horizon, double x,
                                          uhopt_merton** out);
UHOPT_API void uhopt_merton_destroy(uhopt_merton* solution);
UHOPT_API double uhopt_merton_fraction(const uhopt_merton* solution);
UHOPT_API double uhopt_merton_budget_residual(const uhopt_merton* solution);
UHOPT_API uhopt_status uhopt_merton_nu(const uhopt_merton* solution, double s, double* out);
UHOPT_API uhopt_status uhopt_merton_wealth(const uhopt_merton* solution, double s, double h,
                                           double* out);
/* Stopped wealth per path under the stratified stopping assignment; the
 * path grid must contain every horizon date. */
UHOPT_API uhopt_status uhopt_merton_samples(const uhopt_merton* solution,
                                            const uhopt_paths* paths, uhopt_samples** out);

/* ---- non-concave solvers ----------------------------------------------- */

UHOPT_API uhopt_status uhopt_problem_create(const uhopt_market* market,
                                            const uhopt_contract* contract,
                                            const uhopt_horizon* horizon, double x0,
                                            uhopt_problem** out);
UHOPT_API void uhopt_problem_destroy(uhopt_problem* problem);

/* Fixed-horizon optimum at `T` (the problem's horizon law is ignored). */
UHOPT_API uhopt_status uhopt_fixed_horizon_solve(const uhopt_problem* problem, double T,
                                                 double* nu_T, double* budget_residual);
UHOPT_API uhopt_status uhopt_fixed_horizon_samples(const uhopt_problem* problem, double T,
                                                   double nu_T, const uhopt_paths* paths,
                                                   uhopt_samples** out);

typedef struct uhopt_solve_options {
    size_t n_paths;
    uint64_t seed;
    double budget_tol;
    int max_iterations;
    unsigned workers; /* 0: hardware concurrency */
    const double* extra_dates;
    size_t n_extra_dates;
    int control_variate; /* nonzero: control-variate budget estimator */
} uhopt_solve_options;

UHOPT_API void uhopt_solve_options_default(uhopt_solve_options* options);

UHOPT_API uhopt_status uhopt_inner_solve(const uhopt_problem* problem, double h_T1, double w_T1,
                                         double C, double* nu_T1, double* nu_T, double* wealth_T1);

UHOPT_API uhopt_status uhopt_uncertain_solve(const uhopt_problem* problem,
                                             const uhopt_solve_options* options,
                                             uhopt_solution** out);
UHOPT_API void uhopt_solution_destroy(uhopt_solution* solution);

typedef struct uhopt_solution_summary {
    double c_star;
    double budget;
    double budget_residual;
    double budget_plain;
    double budget_se;
    int iterations;
    size_t n_paths;
    size_t n_zero_wealth;
    double max_equation_residual;
    double max_lagrange_spread; /* max |p nu_T1 + (1-p) nu_T - C| / C */
} uhopt_solution_summary;

UHOPT_API uhopt_status uhopt_solution_summary_get(const uhopt_solution* solution,
                                                  uhopt_solution_summary* out);

typedef enum uhopt_field {
    UHOPT_FIELD_NU_T1 = 0,
    UHOPT_FIELD_NU_T = 1,
    UHOPT_FIELD_WEALTH_T1 = 2,
    UHOPT_FIELD_WEALTH_T = 3,
    UHOPT_FIELD_H_T1 = 4,
    UHOPT_FIELD_W_T1 = 5,
    UHOPT_FIELD_H_T = 6,
    UHOPT_FIELD_W_T = 7,
    UHOPT_FIELD_RESIDUAL = 8
} uhopt_field;

/* Copies one per-path column; `n` must equal the path count. */
UHOPT_API uhopt_status uhopt_solution_copy(const uhopt_solution* solution, uhopt_field field,
                                           double* out, size_t n);
UHOPT_API uhopt_status uhopt_solution_samples(const uhopt_problem* problem,
                                              const uhopt_solution* solution,
                                              uhopt_samples** out);
/* Wealth / risky cash amount at (t, W_t = w). Dates after T_1 need the
 * Brownian level at T_1 (anchor_w) and have_anchor != 0. */
UHOPT_API uhopt_status uhopt_solution_wealth_at(const uhopt_problem* problem,
                                                const uhopt_solution* solution, double t, double w,
                                                int have_anchor, double anchor_w, double* out);
UHOPT_API uhopt_status uhopt_solution_strategy_at(const uhopt_problem* problem,
                                                  const uhopt_solution* solution, double t,
                                                  double w, int have_anchor, double anchor_w,
                                                  double* out);

/* ---- analytics ----------------------------------------------------------- */

typedef struct uhopt_estimate {
    double value;
    double se;
} uhopt_estimate;

UHOPT_API void uhopt_samples_destroy(uhopt_samples* samples);
UHOPT_API size_t uhopt_samples_count(const uhopt_samples* samples);
UHOPT_API uhopt_status uhopt_samples_get(const uhopt_samples* samples, size_t i, double* date,
                                         double* wealth);
UHOPT_API uhopt_status uhopt_expected_utility(const uhopt_samples* samples,
                                              const uhopt_contract* contract, uhopt_estimate* out);
/* Certainty equivalent of the sample's expected utility, delta-method SE. */
UHOPT_API uhopt_status uhopt_samples_certainty_equivalent(const uhopt_samples* samples,
                                                          const uhopt_contract* contract,
                                                          uhopt_estimate* out);
UHOPT_API uhopt_status uhopt_stopped_mean(const uhopt_samples* samples, uhopt_estimate* out);
UHOPT_API uhopt_status uhopt_stopped_variance(const uhopt_samples* samples, uhopt_estimate* out);
/* Paired differences a - b over common paths. */
UHOPT_API uhopt_status uhopt_ce_difference(const uhopt_samples* a, const uhopt_samples* b,
                                           const uhopt_contract* contract, uhopt_estimate* out);
UHOPT_API uhopt_status uhopt_variance_difference(const uhopt_samples* a, const uhopt_samples* b,
                                                 uhopt_estimate* out);

typedef struct uhopt_comparison {
    double t_tilde;
    double nu_fixed;
    uhopt_estimate eu_uncertain;
    uhopt_estimate eu_fixed;
    uhopt_estimate ce_uncertain;
    uhopt_estimate ce_fixed;
    uhopt_estimate ce_difference;
    uhopt_estimate var_uncertain;
    uhopt_estimate var_fixed;
    uhopt_estimate var_difference;
} uhopt_comparison;

/* t_tilde must equal E[tau] and lie on the solution's simulation grid. */
UHOPT_API uhopt_status uhopt_compare_to_fixed(const uhopt_problem* problem,
                                              const uhopt_solution* solution, double t_tilde,
                                              uhopt_comparison* out);

#ifdef __cplusplus
}
#endif

#endif /* UHOPT_H */
