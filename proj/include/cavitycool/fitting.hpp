#pragma once

// Small curve fits and interval estimates used by the ensemble analysis.

#include "cavitycool/errors.hpp"

#include <boost/math/distributions/beta.hpp>
#include <boost/math/tools/minima.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace cavitycool {

/// y(t) = plateau + amplitude * exp(-rate * t).
struct ExponentialFit {
    double plateau = 0.0;
    double amplitude = 0.0;
    double rate = 0.0;
    double plateau_sigma = 0.0;
    double amplitude_sigma = 0.0;
    double rate_sigma = 0.0;
    bool ok = false;
};

/// Least squares by variable projection: for fixed rate the model is linear in
/// (plateau, amplitude); the rate is found by Brent on log(rate).
inline ExponentialFit fit_exponential_relaxation(std::span<const double> t, std::span<const double> y,
    double rate_lo, double rate_hi)
{
    ExponentialFit fit;
    const std::size_t n = t.size();
    if (n < 4 || y.size() != n || !(rate_lo > 0.0) || !(rate_hi > rate_lo))
        return fit;

    Eigen::VectorXd yv(n);
    for (std::size_t i = 0; i < n; ++i)
        yv(i) = y[i];

    auto linear = [&](double rate, Eigen::Vector2d& coef) {
        Eigen::MatrixXd a(n, 2);
        for (std::size_t i = 0; i < n; ++i) {
            a(i, 0) = 1.0;
            a(i, 1) = std::exp(-rate * t[i]);
        }
        coef = a.colPivHouseholderQr().solve(yv);
        return (a * coef - yv).squaredNorm();
    };
    auto objective = [&](double log_rate) {
        Eigen::Vector2d coef;
        return linear(std::exp(log_rate), coef);
    };
    const double lo = std::log(rate_lo), hi = std::log(rate_hi);
    const auto [log_rate, sse] = boost::math::tools::brent_find_minima(objective, lo, hi, 52);
    const double rate = std::exp(log_rate);
    Eigen::Vector2d coef;
    linear(rate, coef);
    fit.plateau = coef(0);
    fit.amplitude = coef(1);
    fit.rate = rate;

    // Covariance from the full three-parameter Jacobian.
    Eigen::MatrixXd jac(n, 3);
    for (std::size_t i = 0; i < n; ++i) {
        const double e = std::exp(-rate * t[i]);
        jac(i, 0) = 1.0;
        jac(i, 1) = e;
        jac(i, 2) = -fit.amplitude * t[i] * e;
    }
    const double dof = double(n) - 3.0;
    const Eigen::Matrix3d jtj = jac.transpose() * jac;
    const double s2 = sse / dof;
    const Eigen::Matrix3d cov = jtj.inverse() * s2;
    fit.plateau_sigma = std::sqrt(std::max(0.0, cov(0, 0)));
    fit.amplitude_sigma = std::sqrt(std::max(0.0, cov(1, 1)));
    fit.rate_sigma = std::sqrt(std::max(0.0, cov(2, 2)));

    const double edge = 1e-3 * (hi - lo);
    fit.ok = std::isfinite(fit.rate_sigma) && log_rate > lo + edge && log_rate < hi - edge
        && std::abs(fit.amplitude) > 2.0 * fit.amplitude_sigma;
    return fit;
}

struct BinomialInterval {
    double lower = 0.0;
    double upper = 1.0;
};

/// Exact (Clopper-Pearson) two-sided interval.
inline BinomialInterval clopper_pearson(std::size_t successes, std::size_t trials, double confidence = 0.95)
{
    require(trials > 0 && successes <= trials, "clopper_pearson: need 0 <= successes <= trials, trials > 0");
    const double alpha = 1.0 - confidence;
    BinomialInterval ci;
    const double k = double(successes), n = double(trials);
    if (successes > 0)
        ci.lower = boost::math::quantile(boost::math::beta_distribution<>(k, n - k + 1.0), alpha / 2.0);
    if (successes < trials)
        ci.upper = boost::math::quantile(boost::math::beta_distribution<>(k + 1.0, n - k), 1.0 - alpha / 2.0);
    return ci;
}

/// P(E) = p0 * exp(-E / scale), fitted to binomial counts by maximum likelihood.
struct DecayingProbabilityFit {
    double p0 = 0.0;
    double scale = 0.0; // same unit as the abscissa
    double p0_sigma = 0.0;
    double scale_sigma = 0.0;
    bool ok = false;
};

inline DecayingProbabilityFit fit_decaying_probability(std::span<const double> x, std::span<const std::size_t> successes,
    std::span<const std::size_t> trials)
{
    DecayingProbabilityFit fit;
    const std::size_t m = x.size();
    std::size_t total_success = 0;
    for (auto s : successes)
        total_success += s;
    if (m < 2 || successes.size() != m || trials.size() != m || total_success == 0)
        return fit;

    // Parameters: (log p0, 1/scale). Negative log-likelihood with Newton steps.
    auto nll = [&](double lp, double inv) {
        double f = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double p = std::exp(lp - inv * x[i]);
            if (!(p < 1.0))
                return std::numeric_limits<double>::infinity();
            f -= double(successes[i]) * std::log(p) + double(trials[i] - successes[i]) * std::log1p(-p);
        }
        return f;
    };

    // Start from a weighted log-linear regression.
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double p = (double(successes[i]) + 0.5) / (double(trials[i]) + 1.0);
        const double w = double(trials[i]) * p;
        sw += w;
        sx += w * x[i];
        sy += w * std::log(p);
        sxx += w * x[i] * x[i];
        sxy += w * x[i] * std::log(p);
    }
    const double denom = sw * sxx - sx * sx;
    double inv = denom != 0.0 ? -(sw * sxy - sx * sy) / denom : 0.0;
    double lp = (sy + inv * sx) / sw;
    if (!(inv > 0.0))
        inv = 1.0 / (x[m - 1] - x[0] + 1e-300);

    Eigen::Matrix2d hess = Eigen::Matrix2d::Identity();
    for (int iter = 0; iter < 200; ++iter) {
        Eigen::Vector2d grad = Eigen::Vector2d::Zero();
        hess.setZero();
        for (std::size_t i = 0; i < m; ++i) {
            const double p = std::exp(lp - inv * x[i]);
            const double k = double(successes[i]), n = double(trials[i]);
            // d nll / d eta with eta = log p: -(k - n p)/(1 - p) ; second derivative n p/(1-p)^2 * (1 - k/n ... )
            const double one_minus = 1.0 - p;
            const double g_eta = -(k - n * p) / one_minus;
            const double h_eta = (n - k) * p / (one_minus * one_minus);
            const Eigen::Vector2d d(1.0, -x[i]);
            grad += g_eta * d;
            hess += h_eta * d * d.transpose();
        }
        Eigen::Vector2d step = -hess.ldlt().solve(grad);
        double f0 = nll(lp, inv);
        double lambda = 1.0;
        while (lambda > 1e-8 && !(nll(lp + lambda * step(0), inv + lambda * step(1)) <= f0))
            lambda *= 0.5;
        lp += lambda * step(0);
        inv += lambda * step(1);
        if ((lambda * step).norm() < 1e-12 * (1.0 + std::abs(lp) + std::abs(inv)))
            break;
    }
    fit.p0 = std::exp(lp);
    fit.scale = 1.0 / inv;
    // Observed information for uncertainties (delta method).
    const Eigen::Matrix2d cov = hess.inverse();
    fit.p0_sigma = fit.p0 * std::sqrt(std::max(0.0, cov(0, 0)));
    fit.scale_sigma = std::sqrt(std::max(0.0, cov(1, 1))) / (inv * inv);
    fit.ok = inv > 0.0 && std::isfinite(fit.p0) && fit.p0 < 1.0;
    return fit;
}

/// Centered moving average over `window` samples (shrinks at the edges).
inline std::vector<double> moving_average(std::span<const double> y, std::size_t window)
{
    std::vector<double> out(y.size(), 0.0);
    if (window <= 1) {
        out.assign(y.begin(), y.end());
        return out;
    }
    const std::size_t half = window / 2;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(y.size(), i + half + 1);
        double s = 0.0;
        for (std::size_t j = lo; j < hi; ++j)
            s += y[j];
        out[i] = s / double(hi - lo);
    }
    return out;
}

} // namespace cavitycool
