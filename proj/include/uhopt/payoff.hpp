#pragma once

#include <cmath>
#include <limits>

namespace uhopt {

inline constexpr double neg_infinity = -std::numeric_limits<double>::infinity();
inline constexpr double pos_infinity = std::numeric_limits<double>::infinity();

// U(x) = x^(1-gamma) / (1-gamma).
class PowerUtility {
public:
    explicit PowerUtility(double gamma);

    double gamma() const noexcept { return gamma_; }
    double value(double x) const;
    double marginal(double x) const;
    // (U')^{-1}(y) = y^(-1/gamma)
    double inverse_marginal(double y) const;
    // U^{-1}(v), defined for v in the range of U.
    double inverse(double v) const;

private:
    double gamma_;
};

// Closed interval [lo, hi]; hi may be +infinity.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double y, double rel_tol = 0.0) const {
        return y >= lo - rel_tol * std::abs(lo) && y <= hi + rel_tol * std::abs(hi);
    }
};

// u(x) = U(alpha (x - B)^+ + K) for x >= 0, -infinity below zero, together
// with its concave envelope. Immutable after construction.
class ContractUtility {
public:
    ContractUtility(double gamma, double alpha, double B, double K);

    const PowerUtility& base() const noexcept { return base_; }
    double gamma() const noexcept { return base_.gamma(); }
    double alpha() const noexcept { return alpha_; }
    double B() const noexcept { return B_; }
    double K() const noexcept { return K_; }

    // Tangency point: smallest x > 0 where u meets its envelope.
    double x_hat() const noexcept { return x_hat_; }
    // u'(x_hat), the slope of the affine part of the envelope.
    double threshold() const noexcept { return threshold_; }

    double value(double x) const;
    // Right derivative of u for x > B.
    double marginal(double x) const;
    double envelope(double x) const;
    Interval subdifferential(double x) const;
    double inverse_marginal(double y) const;

    // Residual of u(x) - u(0) - u'(x) x relative to |u(0)| + |u'(x) x|.
    double tangency_residual(double x) const;

private:
    PowerUtility base_;
    double alpha_;
    double B_;
    double K_;
    double x_hat_;
    double threshold_;
};

double payoff_value(const ContractUtility& c, double x);
double tangency_point(const ContractUtility& c);
double envelope_value(const ContractUtility& c, double x);
Interval subdifferential(const ContractUtility& c, double x);
double inverse_marginal(const ContractUtility& c, double y);

}  // namespace uhopt
