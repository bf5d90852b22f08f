#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace uhopt {

// Single risky asset Black-Scholes market with constant coefficients.
class MarketParams {
public:
    MarketParams(double mu, double r, double sigma);

    double mu() const noexcept { return mu_; }
    double r() const noexcept { return r_; }
    double sigma() const noexcept { return sigma_; }
    // Market price of risk (mu - r) / sigma.
    double theta() const noexcept { return (mu_ - r_) / sigma_; }

private:
    double mu_;
    double r_;
    double sigma_;
};

// Discrete law of the stopping time: P(tau = dates[i]) = probs[i] and the
// remaining mass sits on the terminal date.
class HorizonDistribution {
public:
    HorizonDistribution(std::vector<double> dates, std::vector<double> probs,
                        double terminal);

    // Fixed horizon: all mass on `terminal`.
    static HorizonDistribution fixed(double terminal);

    std::span<const double> dates() const noexcept { return dates_; }
    std::span<const double> probs() const noexcept { return probs_; }
    double terminal() const noexcept { return terminal_; }
    std::size_t size() const noexcept { return dates_.size(); }
    double terminal_prob() const noexcept;
    double mean() const noexcept;
    double variance() const noexcept;

private:
    std::vector<double> dates_;
    std::vector<double> probs_;
    double terminal_;
};

struct PathState {
    double t = 0.0;
    double w = 0.0;
    double h = 1.0;

    PathState() = default;
    // Validates h against the closed form for (params, t, w).
    PathState(const MarketParams& params, double t, double w, double h);

    static PathState at(const MarketParams& params, double t, double w);
};

double state_price_density(const MarketParams& params, double t, double w);

// Standard normal cdf and density.
double normal_cdf(double x);
double normal_pdf(double x);

// E[(H_T / H_t)^q | F_t].
double f_factor(double q, double t, double T, const MarketParams& params);

// E[(H_T / H_t)^q 1{nu_T H_T <= threshold} | F_t] given W_t = w_t, with nu_T
// known at t. At t == T it is the indicator itself.
double g_factor(double q, double t, double T, const MarketParams& params,
                double nu_T, double threshold, double w_t);

// Derivative of g_factor with respect to w_t (t < T).
double g_factor_dw(double q, double t, double T, const MarketParams& params,
                   double nu_T, double threshold, double w_t);

// Brownian level a such that {nu_T H_T <= threshold} = {W_T >= a} when
// theta > 0 and {W_T <= a} when theta < 0.
double exercise_boundary(double T, const MarketParams& params, double nu_T,
                         double threshold);

// Paths sampled exactly at the grid dates (no time stepping in between).
// Row-major: path i, date j lives at index i * grid.size() + j.
class PathMatrix {
public:
    PathMatrix() = default;
    PathMatrix(std::vector<double> grid, std::size_t n_paths);

    std::span<const double> grid() const noexcept { return grid_; }
    std::size_t n_paths() const noexcept { return n_paths_; }
    std::size_t n_dates() const noexcept { return grid_.size(); }
    // Column of `t` in the grid; throws if absent.
    std::size_t column(double t) const;

    double w(std::size_t path, std::size_t date) const {
        return w_[path * grid_.size() + date];
    }
    double h(std::size_t path, std::size_t date) const {
        return h_[path * grid_.size() + date];
    }
    PathState state(std::size_t path, std::size_t date) const {
        PathState s;
        s.t = grid_[date];
        s.w = w(path, date);
        s.h = h(path, date);
        return s;
    }

    void set(std::size_t path, std::size_t date, double w, double h) {
        w_[path * grid_.size() + date] = w;
        h_[path * grid_.size() + date] = h;
    }

private:
    std::vector<double> grid_;
    std::size_t n_paths_ = 0;
    std::vector<double> w_;
    std::vector<double> h_;
};

// Per-path substreams: path i draws from a generator seeded by (seed, i) so
// the result does not depend on the worker count.
PathMatrix simulate_paths(const MarketParams& params, std::span<const double> grid,
                          std::size_t n_paths, std::uint64_t seed,
                          unsigned workers = 0);

// Seed for the substream of `index` under `seed`.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace uhopt
