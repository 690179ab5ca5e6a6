#pragma once

// Central and noncentral t / F distributions, built on the regularized
// incomplete beta function. All functions are pure and thread-safe.

#include <cmath>

#include "powerwb/errors.hpp"

namespace powerwb {

// Degrees of freedom. Real-valued: sphericity corrections produce fractional df.
class Dof {
public:
    explicit Dof(double value) : value_(value) {
        if (!(value > 0.0) || !std::isfinite(value))
            throw DomainError("degrees of freedom must be positive and finite");
    }
    double value() const noexcept { return value_; }

private:
    double value_;
};

// Noncentrality: delta for t (any sign), lambda for F (nonnegative, checked
// by the F functions).
class Noncentrality {
public:
    explicit Noncentrality(double value) : value_(value) {
        if (!std::isfinite(value)) throw DomainError("noncentrality must be finite");
    }
    double value() const noexcept { return value_; }

private:
    double value_;
};

// Shared iteration budget for every series, continued fraction and root search.
inline constexpr int kMaxIterations = 10000;

// Regularized incomplete beta I_x(a, b).
double reg_inc_beta(double x, double a, double b);

// Standard normal CDF.
double normal_cdf(double x);

double t_cdf(double x, Dof df);
double t_quantile(double p, Dof df);

// Noncentral t CDF. Equals t_cdf exactly when delta == 0.
double nct_cdf(double x, Dof df, Noncentrality delta);

double f_cdf(double x, Dof df1, Dof df2);
double f_quantile(double p, Dof df1, Dof df2);

// Noncentral F CDF as a Poisson(lambda/2) mixture of incomplete beta terms.
double ncf_cdf(double x, Dof df1, Dof df2, Noncentrality lambda);

}  // namespace powerwb
