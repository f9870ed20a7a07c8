#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "qexp/error.hpp"

namespace qexp {

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 1000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
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
    return h;
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
inline double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw Error("incomplete beta requires a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
    if (std::isinf(t)) return 0.0;
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    std::size_t df = 0;
    double mean_diff = 0.0;
};

/// Two-sided paired t-test on d = a - b. With zero spread the result is
/// t = 0, p = 1 when the mean difference is zero and t = ±inf, p = 0 otherwise.
inline TTestResult paired_ttest(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw Error("paired t-test needs equally sized samples");
    const std::size_t n = a.size();
    if (n < 2) throw Error("paired t-test needs at least 2 pairs");
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dev = (a[i] - b[i]) - mean;
        ss += dev * dev;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    TTestResult r;
    r.df = n - 1;
    r.mean_diff = mean;
    if (sd == 0.0) {
        if (mean == 0.0) return r;
        r.t = mean > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        r.p = 0.0;
        return r;
    }
    r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
    r.p = std::min(1.0, std::max(0.0, student_t_two_sided_p(r.t, static_cast<double>(r.df))));
    return r;
}

}  // namespace qexp
