#include "uhopt/market.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "uhopt/error.hpp"
#include "uhopt/parallel.hpp"

namespace uhopt {

MarketParams::MarketParams(double mu, double r, double sigma)
    : mu_(mu), r_(r), sigma_(sigma) {
    require(std::isfinite(mu) && std::isfinite(r), "market: mu and r must be finite");
    require(std::isfinite(sigma) && sigma > 0.0, "market: sigma must be positive");
}

HorizonDistribution::HorizonDistribution(std::vector<double> dates,
                                         std::vector<double> probs, double terminal)
    : dates_(std::move(dates)), probs_(std::move(probs)), terminal_(terminal) {
    require(std::isfinite(terminal) && terminal > 0.0, "horizon: terminal date must be positive");
    require(dates_.size() == probs_.size(), "horizon: dates and probs differ in length");
    double prev = 0.0;
    double mass = 0.0;
    for (std::size_t i = 0; i < dates_.size(); ++i) {
        require(dates_[i] > prev, "horizon: dates must be strictly increasing and positive");
        require(probs_[i] > 0.0 && probs_[i] < 1.0, "horizon: probabilities must lie in (0, 1)");
        prev = dates_[i];
        mass += probs_[i];
    }
    require(prev < terminal, "horizon: stopping dates must precede the terminal date");
    require(mass < 1.0, "horizon: terminal probability must be positive");
}

HorizonDistribution HorizonDistribution::fixed(double terminal) {
    return HorizonDistribution({}, {}, terminal);
}

double HorizonDistribution::terminal_prob() const noexcept {
    double mass = 0.0;
    for (double p : probs_) mass += p;
    return 1.0 - mass;
}

double HorizonDistribution::mean() const noexcept {
    double m = terminal_prob() * terminal_;
    for (std::size_t i = 0; i < dates_.size(); ++i) m += probs_[i] * dates_[i];
    return m;
}

double HorizonDistribution::variance() const noexcept {
    const double m = mean();
    double v = terminal_prob() * (terminal_ - m) * (terminal_ - m);
    for (std::size_t i = 0; i < dates_.size(); ++i)
        v += probs_[i] * (dates_[i] - m) * (dates_[i] - m);
    return v;
}

double state_price_density(const MarketParams& params, double t, double w) {
    const double theta = params.theta();
    return std::exp(-(params.r() + 0.5 * theta * theta) * t - theta * w);
}

PathState::PathState(const MarketParams& params, double t_, double w_, double h_)
    : t(t_), w(w_), h(h_) {
    require(t_ >= 0.0, "path state: negative time");
    const double expected = state_price_density(params, t_, w_);
    require(std::abs(h_ - expected) <= 1e-12 * expected,
            "path state: h inconsistent with the state-price density");
}

PathState PathState::at(const MarketParams& params, double t, double w) {
    PathState s;
    s.t = t;
    s.w = w;
    s.h = state_price_density(params, t, w);
    return s;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double f_factor(double q, double t, double T, const MarketParams& params) {
    require(0.0 <= t && t <= T, "f_factor: requires 0 <= t <= T");
    const double theta = params.theta();
    const double tau = T - t;
    return std::exp(-q * (params.r() + 0.5 * theta * theta) * tau +
                    0.5 * q * q * theta * theta * tau);
}

double exercise_boundary(double T, const MarketParams& params, double nu_T,
                         double threshold) {
    const double theta = params.theta();
    const double c = std::log(threshold) - std::log(nu_T) +
                     (params.r() + 0.5 * theta * theta) * T;
    return -c / theta;
}

namespace {

// Standardized distance of the exercise event under the measure tilted by
// (H_T/H_t)^q; g = f * Phi(d) with d returned here. The sign of theta fixes
// the direction of the event.
double tilted_distance(double q, double t, double T, const MarketParams& params,
                       double nu_T, double threshold, double w_t) {
    const double theta = params.theta();
    const double tau = T - t;
    const double a = exercise_boundary(T, params, nu_T, threshold);
    const double mean = w_t - tau * q * theta;
    const double d = -(a - mean) / std::sqrt(tau);
    return theta > 0.0 ? d : -d;
}

void check_g_args(double t, double T, double nu_T, double threshold) {
    require(0.0 <= t && t <= T, "g_factor: requires 0 <= t <= T");
    require(nu_T > 0.0 && threshold > 0.0, "g_factor: nu_T and threshold must be positive");
}

}  // namespace

double g_factor(double q, double t, double T, const MarketParams& params,
                double nu_T, double threshold, double w_t) {
    check_g_args(t, T, nu_T, threshold);
    if (std::isinf(nu_T)) return 0.0;
    const double theta = params.theta();
    if (t == T) {
        return nu_T * state_price_density(params, T, w_t) <= threshold ? 1.0 : 0.0;
    }
    const double f = f_factor(q, t, T, params);
    if (theta == 0.0) {
        return nu_T * std::exp(-params.r() * T) <= threshold ? f : 0.0;
    }
    return f * normal_cdf(tilted_distance(q, t, T, params, nu_T, threshold, w_t));
}

double g_factor_dw(double q, double t, double T, const MarketParams& params,
                   double nu_T, double threshold, double w_t) {
    check_g_args(t, T, nu_T, threshold);
    require(t < T, "g_factor_dw: requires t < T");
    const double theta = params.theta();
    if (theta == 0.0 || std::isinf(nu_T)) return 0.0;
    const double tau = T - t;
    const double d = tilted_distance(q, t, T, params, nu_T, threshold, w_t);
    const double sign = theta > 0.0 ? 1.0 : -1.0;
    return sign * f_factor(q, t, T, params) * normal_pdf(d) / std::sqrt(tau);
}

PathMatrix::PathMatrix(std::vector<double> grid, std::size_t n_paths)
    : grid_(std::move(grid)),
      n_paths_(n_paths),
      w_(grid_.size() * n_paths),
      h_(grid_.size() * n_paths) {}

std::size_t PathMatrix::column(double t) const {
    for (std::size_t j = 0; j < grid_.size(); ++j)
        if (grid_[j] == t) return j;
    fail(ErrorCode::invalid_argument, "path matrix: date " + std::to_string(t) + " not on grid");
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 finalizer over a mix of seed and index
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(seed) ^ mix(index + 0x632be59bd9b4e019ULL));
}

PathMatrix simulate_paths(const MarketParams& params, std::span<const double> grid,
                          std::size_t n_paths, std::uint64_t seed, unsigned workers) {
    require(!grid.empty(), "simulate_paths: empty date grid");
    require(n_paths >= 1, "simulate_paths: need at least one path");
    require(grid.front() >= 0.0, "simulate_paths: negative date");
    for (std::size_t j = 1; j < grid.size(); ++j)
        require(grid[j] > grid[j - 1], "simulate_paths: grid must be strictly increasing");

    PathMatrix paths(std::vector<double>(grid.begin(), grid.end()), n_paths);
    parallel_for(n_paths, workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            std::mt19937_64 rng(substream_seed(seed, i));
            std::normal_distribution<double> normal;
            double w = 0.0;
            double t_prev = 0.0;
            for (std::size_t j = 0; j < grid.size(); ++j) {
                const double dt = grid[j] - t_prev;
                if (dt > 0.0) w += std::sqrt(dt) * normal(rng);
                paths.set(i, j, w, state_price_density(params, grid[j], w));
                t_prev = grid[j];
            }
        }
    });
    return paths;
}

}  // namespace uhopt
