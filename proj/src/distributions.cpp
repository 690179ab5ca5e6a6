#include "powerwb/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>

namespace powerwb {

namespace {

constexpr double kEps = 1e-15;
constexpr double kTiny = 1e-300;
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

// lgamma(z) minus the leading Stirling terms (z - 1/2) log z - z + log(2 pi)/2.
double stirling_remainder(double z) {
    if (z >= 10.0) {
        const double r = 1.0 / z;
        const double r2 = r * r;
        return r * (1.0 / 12.0 -
                    r2 * (1.0 / 360.0 -
                          r2 * (1.0 / 1260.0 -
                                r2 * (1.0 / 1680.0 -
                                      r2 * (1.0 / 1188.0 - r2 * (691.0 / 360360.0))))));
    }
    return std::lgamma(z) - ((z - 0.5) * std::log(z) - z + kHalfLog2Pi);
}

// log(x^a * y^b / B(a, b)) with y = 1 - x supplied separately so that
// neither endpoint loses precision. Large shape parameters go through the
// Stirling form to avoid cancellation between huge lgamma values.
double log_beta_kernel(double x, double y, double a, double b) {
    const double c = a + b;
    const double log_x = (y < 0.5) ? std::log1p(-y) : std::log(x);
    const double log_y = (x < 0.5) ? std::log1p(-x) : std::log(y);
    const bool a_big = a >= 10.0;
    const bool b_big = b >= 10.0;

    if (a_big && b_big) {
        // x c / a = 1 + t / a and y c / b = 1 - t / b
        const double t = (x <= y) ? std::fma(x, c, -a) : -std::fma(y, c, -b);
        return 0.5 * std::log(a * b / (2.0 * std::numbers::pi * c)) + a * std::log1p(t / a) +
               b * std::log1p(-t / b) + stirling_remainder(c) - stirling_remainder(a) -
               stirling_remainder(b);
    }
    if (b_big) {
        // lgamma(c) - lgamma(b) expanded around b
        return a * (log_x + std::log(c)) + b * log_y + (b - 0.5) * std::log1p(a / b) - a -
               std::lgamma(a) + stirling_remainder(c) - stirling_remainder(b);
    }
    if (a_big) {
        return b * (log_y + std::log(c)) + a * log_x + (a - 0.5) * std::log1p(b / a) - b -
               std::lgamma(b) + stirling_remainder(c) - stirling_remainder(a);
    }
    return a * log_x + b * log_y - (std::lgamma(a) + std::lgamma(b) - std::lgamma(c));
}

// Continued fraction for I_x(a, b), modified Lentz.
double beta_continued_fraction(double x, double a, double b) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIterations; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw InternalError("incomplete beta continued fraction did not converge (a=" +
                        std::to_string(a) + ", b=" + std::to_string(b) + ")");
}

// I_x(a, b), or its complement 1 - I_x(a, b) when upper is set.
double ibeta_pair(double x, double y, double a, double b, bool upper) {
    if (x <= 0.0) return upper ? 1.0 : 0.0;
    if (y <= 0.0) return upper ? 0.0 : 1.0;
    if (x < (a + 1.0) / (a + b + 2.0)) {
        const double v = std::exp(log_beta_kernel(x, y, a, b)) * beta_continued_fraction(x, a, b) / a;
        return upper ? 1.0 - v : v;
    }
    const double v = std::exp(log_beta_kernel(y, x, b, a)) * beta_continued_fraction(y, b, a) / b;
    return upper ? v : 1.0 - v;
}

double clamp_probability(double p) { return std::clamp(p, 0.0, 1.0); }

void check_probability_open(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile probability must lie in (0, 1)");
}

// Doubling bracket then bisection; `cdf` must be nondecreasing.
double invert_cdf(const std::function<double(double)>& cdf, double p, double lo, double hi,
                  bool grow_down, const char* name) {
    int iterations = 0;
    if (grow_down) {
        while (cdf(lo) > p) {
            hi = lo;
            lo *= 2.0;
            if (++iterations > kMaxIterations)
                throw InternalError(std::string(name) + ": could not bracket quantile");
        }
    } else {
        while (cdf(hi) < p) {
            lo = hi;
            hi *= 2.0;
            if (++iterations > kMaxIterations || !std::isfinite(hi))
                throw InternalError(std::string(name) + ": could not bracket quantile");
        }
    }
    // Relative tolerance: quantiles of F(1, nu) near p = 0 are of order p^2.
    while (hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::fabs(lo), std::fabs(hi))) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (cdf(mid) < p)
            lo = mid;
        else
            hi = mid;
        if (++iterations > kMaxIterations)
            throw InternalError(std::string(name) + ": bisection did not converge");
    }
    const double q = 0.5 * (lo + hi);
    if (std::fabs(cdf(q) - p) > 1e-10)
        throw InternalError(std::string(name) + ": quantile failed the CDF round-trip check");
    return q;
}

// P(T <= x) for x >= 0 under noncentral t, as the normal term plus a
// Poisson-weighted sum of incomplete beta terms. Summation starts at the
// mode of the Poisson weights and walks outwards so that large delta does
// not underflow exp(-delta^2 / 2).
double nct_cdf_nonnegative(double x, double nu, double delta) {
    const double base = normal_cdf(-delta);
    if (x == 0.0) return base;
    const double x2 = x * x;
    const double z = x2 / (x2 + nu);
    const double w = nu / (x2 + nu);
    const double lambda = 0.5 * delta * delta;
    const double half_nu = 0.5 * nu;
    const double log_lambda = std::log(lambda);
    const double q_scale = delta / std::numbers::sqrt2;

    auto p_weight = [&](double j) { return std::exp(-lambda + (j == 0.0 ? 0.0 : j * log_lambda) - std::lgamma(j + 1.0)); };
    auto q_weight = [&](double j) { return q_scale * std::exp(-lambda + (j == 0.0 ? 0.0 : j * log_lambda) - std::lgamma(j + 1.5)); };

    const auto mode = static_cast<long>(std::floor(lambda));
    double sum = 0.0;
    int evaluations = 0;

    for (long j = mode; j >= 0; --j) {
        const double pj = p_weight(static_cast<double>(j));
        const double qj = q_weight(static_cast<double>(j));
        sum += pj * ibeta_pair(z, w, j + 0.5, half_nu, false) + qj * ibeta_pair(z, w, j + 1.0, half_nu, false);
        if (++evaluations > kMaxIterations) throw InternalError("nct_cdf: series budget exceeded");
        // Remaining lower terms shrink at least geometrically with ratio r.
        const double r = (j + 0.5) / lambda;
        if (r < 1.0 && (pj + std::fabs(qj)) * r / (1.0 - r) < 1e-16) break;
    }
    for (long j = mode + 1;; ++j) {
        const double pj = p_weight(static_cast<double>(j));
        const double qj = q_weight(static_cast<double>(j));
        const double ib = ibeta_pair(z, w, j + 0.5, half_nu, false);
        sum += pj * ib + qj * ibeta_pair(z, w, j + 1.0, half_nu, false);
        if (++evaluations > kMaxIterations) throw InternalError("nct_cdf: series budget exceeded");
        // I_z(a, b) decreases in a, and the weights decay with ratio r past the mode.
        const double r = lambda / (j + 1.0);
        if (r < 1.0 && (pj + std::fabs(qj)) * ib / (1.0 - r) < 1e-16) break;
    }
    return base + 0.5 * sum;
}

}  // namespace

double reg_inc_beta(double x, double a, double b) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("reg_inc_beta: x must lie in [0, 1]");
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
        throw DomainError("reg_inc_beta: shape parameters must be positive and finite");
    return clamp_probability(ibeta_pair(x, 1.0 - x, a, b, false));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double t_cdf(double x, Dof df) {
    if (std::isnan(x)) throw DomainError("t_cdf: x is NaN");
    if (x == 0.0) return 0.5;
    if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
    const double nu = df.value();
    const double x2 = x * x;
    // P(T > |x|) = I_{nu/(nu+x^2)}(nu/2, 1/2) / 2
    const double tail = 0.5 * ibeta_pair(nu / (nu + x2), x2 / (nu + x2), 0.5 * nu, 0.5, false);
    return clamp_probability(x < 0.0 ? tail : 1.0 - tail);
}

double t_quantile(double p, Dof df) {
    check_probability_open(p);
    if (p == 0.5) return 0.0;
    auto cdf = [&](double t) { return t_cdf(t, df); };
    if (p > 0.5) return invert_cdf(cdf, p, 0.0, 1.0, false, "t_quantile");
    return invert_cdf(cdf, p, -1.0, 0.0, true, "t_quantile");
}

double nct_cdf(double x, Dof df, Noncentrality delta) {
    if (std::isnan(x)) throw DomainError("nct_cdf: x is NaN");
    const double d = delta.value();
    if (d == 0.0) return t_cdf(x, df);
    if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
    if (x >= 0.0) return clamp_probability(nct_cdf_nonnegative(x, df.value(), d));
    return clamp_probability(1.0 - nct_cdf_nonnegative(-x, df.value(), -d));
}

double f_cdf(double x, Dof df1, Dof df2) {
    if (std::isnan(x)) throw DomainError("f_cdf: x is NaN");
    if (x <= 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    const double a = df1.value() * x;
    const double denom = a + df2.value();
    return clamp_probability(ibeta_pair(a / denom, df2.value() / denom, 0.5 * df1.value(), 0.5 * df2.value(), false));
}

double f_quantile(double p, Dof df1, Dof df2) {
    check_probability_open(p);
    auto cdf = [&](double f) { return f_cdf(f, df1, df2); };
    return invert_cdf(cdf, p, 0.0, 1.0, false, "f_quantile");
}

double ncf_cdf(double x, Dof df1, Dof df2, Noncentrality lambda) {
    if (std::isnan(x)) throw DomainError("ncf_cdf: x is NaN");
    const double lam = lambda.value();
    if (lam < 0.0) throw DomainError("ncf_cdf: noncentrality must be nonnegative");
    if (lam == 0.0) return f_cdf(x, df1, df2);
    if (x <= 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;

    const double a = df1.value() * x;
    const double denom = a + df2.value();
    const double z = a / denom;
    const double w = df2.value() / denom;
    const double half1 = 0.5 * df1.value();
    const double half2 = 0.5 * df2.value();
    const double mu = 0.5 * lam;
    const double log_mu = std::log(mu);
    auto weight = [&](double j) { return std::exp(-mu + (j == 0.0 ? 0.0 : j * log_mu) - std::lgamma(j + 1.0)); };

    // Truncate once the Poisson mass not yet summed is below 1e-14 on each side.
    constexpr double kResidual = 1e-14;
    const auto mode = static_cast<long>(std::floor(mu));
    double sum = 0.0;
    int evaluations = 0;
    for (long j = mode; j >= 0; --j) {
        const double wj = weight(static_cast<double>(j));
        sum += wj * ibeta_pair(z, w, half1 + j, half2, false);
        if (++evaluations > kMaxIterations) throw InternalError("ncf_cdf: series budget exceeded");
        const double r = j / mu;
        if (r < 1.0 && wj * r / (1.0 - r) < kResidual) break;
    }
    for (long j = mode + 1;; ++j) {
        const double wj = weight(static_cast<double>(j));
        sum += wj * ibeta_pair(z, w, half1 + j, half2, false);
        if (++evaluations > kMaxIterations) throw InternalError("ncf_cdf: series budget exceeded");
        const double r = mu / (j + 1.0);
        if (r < 1.0 && wj * r / (1.0 - r) < kResidual) break;
    }
    return clamp_probability(sum);
}

}  // namespace powerwb
