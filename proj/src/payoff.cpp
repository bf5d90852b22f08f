#include "uhopt/payoff.hpp"

#include <algorithm>
#include <cmath>

#include "uhopt/error.hpp"
#include "uhopt/root_finding.hpp"

namespace uhopt {

PowerUtility::PowerUtility(double gamma) : gamma_(gamma) {
    require(std::isfinite(gamma) && gamma > 0.0, "power utility: gamma must be positive");
    require(gamma != 1.0, "power utility: gamma = 1 (log utility) is not supported");
}

double PowerUtility::value(double x) const {
    if (x < 0.0) return neg_infinity;
    if (x == 0.0) return gamma_ > 1.0 ? neg_infinity : 0.0;
    return std::pow(x, 1.0 - gamma_) / (1.0 - gamma_);
}

double PowerUtility::marginal(double x) const { return std::pow(x, -gamma_); }

double PowerUtility::inverse_marginal(double y) const { return std::pow(y, -1.0 / gamma_); }

double PowerUtility::inverse(double v) const {
    return std::pow((1.0 - gamma_) * v, 1.0 / (1.0 - gamma_));
}

ContractUtility::ContractUtility(double gamma, double alpha, double B, double K)
    : base_(gamma), alpha_(alpha), B_(B), K_(K), x_hat_(0.0), threshold_(0.0) {
    require(alpha > 0.0 && alpha <= 1.0, "contract: alpha must lie in (0, 1]");
    require(std::isfinite(B) && B > 0.0, "contract: B must be positive");
    require(std::isfinite(K) && K > 0.0, "contract: K must be positive");

    // u(x) - u(0) - u'(x) x on x > B, written in y = alpha (x - B) + K.
    const double u0 = base_.value(K_);
    auto tangency = [&](double x) {
        const double y = alpha_ * (x - B_) + K_;
        return base_.value(y) - u0 - alpha_ * base_.marginal(y) * x;
    };
    const double lo = B_ * (1.0 + 1e-9);
    const double f_lo = tangency(lo);
    if (!(f_lo < 0.0)) fail(ErrorCode::no_bracket, "contract: tangency function not negative at B");
    double hi = 2.0 * B_;
    double f_hi = tangency(hi);
    for (int k = 0; k < 2000 && !(f_hi > 0.0); ++k) {
        hi *= 2.0;
        f_hi = tangency(hi);
        if (!std::isfinite(hi)) break;
    }
    if (!(f_hi > 0.0))
        fail(ErrorCode::no_bracket, "contract: tangency point could not be bracketed");
    x_hat_ = solve_bracketed(tangency, Bracket{lo, hi, f_lo, f_hi}).x;
    threshold_ = marginal(x_hat_);
}

double ContractUtility::value(double x) const {
    if (x < 0.0) return neg_infinity;
    return base_.value(alpha_ * std::max(x - B_, 0.0) + K_);
}

double ContractUtility::marginal(double x) const {
    if (x < B_) return 0.0;
    return alpha_ * base_.marginal(alpha_ * (x - B_) + K_);
}

double ContractUtility::envelope(double x) const {
    if (x < 0.0) return neg_infinity;
    if (x <= x_hat_) return value(0.0) + threshold_ * x;
    return value(x);
}

Interval ContractUtility::subdifferential(double x) const {
    require(x >= 0.0, "subdifferential: requires x >= 0");
    if (x == 0.0) return {threshold_, pos_infinity};
    if (x <= x_hat_) return {threshold_, threshold_};
    const double m = marginal(x);
    return {m, m};
}

double ContractUtility::inverse_marginal(double y) const {
    require(y > 0.0, "inverse_marginal: requires y > 0");
    if (y > threshold_) return 0.0;
    return (base_.inverse_marginal(y / alpha_) - K_) / alpha_ + B_;
}

double ContractUtility::tangency_residual(double x) const {
    const double u0 = value(0.0);
    const double ux = value(x);
    const double slope_term = marginal(x) * x;
    return std::abs(ux - u0 - slope_term) / (std::abs(ux) + std::abs(u0) + std::abs(slope_term));
}

double payoff_value(const ContractUtility& c, double x) { return c.value(x); }
double tangency_point(const ContractUtility& c) { return c.x_hat(); }
double envelope_value(const ContractUtility& c, double x) { return c.envelope(x); }
Interval subdifferential(const ContractUtility& c, double x) { return c.subdifferential(x); }
double inverse_marginal(const ContractUtility& c, double y) { return c.inverse_marginal(y); }

}  // namespace uhopt
