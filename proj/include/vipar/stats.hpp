#pragma once

// Validation statistics: logistic regression by iteratively reweighted
// least squares with Wald tests, Pearson and Spearman correlation, and
// pairwise collinearity screening.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vipar/error.hpp"
#include "vipar/format.hpp"

namespace vipar::stats {

inline double sigmoid(double t) {
    if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

// log(1 + exp(t)) without overflow.
inline double log1p_exp(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

// Two-sided p-value of a standard normal statistic.
inline double two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

// Exp(B) of a logit coefficient.
inline double odds_ratio(double b) { return std::exp(b); }

// Design matrix rows are observations; column 0 is the intercept when the
// caller adds one. The ridge penalty (ridge/2)*|beta|^2 skips column 0 when
// `penalize_first` is false.
struct Penalty {
    double ridge = 0.0;
    bool penalize_first = false;
};

inline double log_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                             Penalty pen = {}) {
    const Eigen::VectorXd eta = X * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y[i] * eta[i] - log1p_exp(eta[i]);
    for (Eigen::Index j = pen.penalize_first ? 0 : 1; j < beta.size(); ++j) ll -= 0.5 * pen.ridge * beta[j] * beta[j];
    return ll;
}

inline Eigen::VectorXd gradient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                                Penalty pen = {}) {
    const Eigen::VectorXd eta = X * beta;
    Eigen::VectorXd resid(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) resid[i] = y[i] - sigmoid(eta[i]);
    Eigen::VectorXd g = X.transpose() * resid;
    for (Eigen::Index j = pen.penalize_first ? 0 : 1; j < beta.size(); ++j) g[j] -= pen.ridge * beta[j];
    return g;
}

struct LogitFit {
    std::vector<std::string> names; // "(intercept)" first
    std::vector<double> coefficients;
    std::vector<double> std_errors;
    std::vector<double> z_values;
    std::vector<double> p_values;
    std::vector<double> odds_ratios;
    double log_likelihood = 0.0;
    bool converged = false;
    int iterations = 0;
};

struct LogitOptions {
    double ridge = 0.0;
    double tolerance = 1e-8; // max absolute coefficient change
    int max_iterations = 100;
    // With ridge == 0, a coefficient beyond this magnitude is treated as
    // divergence caused by separation.
    double divergence_bound = 30.0;
};

// Fits P(y=1) = sigmoid(b0 + X b). `design` excludes the intercept column;
// one is added. Standard errors come from the inverse of the penalized
// information matrix at the optimum.
inline LogitFit logit_fit(const Eigen::MatrixXd& design, const std::vector<double>& outcome,
                          const std::vector<std::string>& predictor_names, const LogitOptions& opt = {}) {
    const Eigen::Index n = design.rows(), p = design.cols() + 1;
    if (static_cast<std::size_t>(n) != outcome.size())
        throw StatsError("design has " + std::to_string(n) + " rows but outcome has " +
                         std::to_string(outcome.size()));
    if (predictor_names.size() != static_cast<std::size_t>(design.cols()))
        throw StatsError("predictor name count does not match design columns");
    std::size_t positives = 0;
    for (double v : outcome) {
        if (v != 0.0 && v != 1.0) throw StatsError("outcome must be binary");
        positives += v == 1.0;
    }
    if (positives == 0 || positives == outcome.size()) throw StatsError("no outcome variation");

    Eigen::MatrixXd X(n, p);
    X.col(0).setOnes();
    X.rightCols(p - 1) = design;
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(outcome.data(), n);
    const Penalty pen{opt.ridge, false};

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    const double mean = static_cast<double>(positives) / static_cast<double>(n);
    beta[0] = std::log(mean / (1.0 - mean));

    Eigen::MatrixXd info(p, p);
    auto information = [&](const Eigen::VectorXd& b) {
        const Eigen::VectorXd eta = X * b;
        Eigen::VectorXd w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mu = sigmoid(eta[i]);
            w[i] = std::max(mu * (1.0 - mu), 1e-12);
        }
        Eigen::MatrixXd h = X.transpose() * w.asDiagonal() * X;
        for (Eigen::Index j = 1; j < p; ++j) h(j, j) += opt.ridge;
        return h;
    };

    LogitFit fit;
    double ll = log_likelihood(X, y, beta, pen);
    for (int iter = 1; iter <= opt.max_iterations; ++iter) {
        fit.iterations = iter;
        info = information(beta);
        const Eigen::VectorXd g = gradient(X, y, beta, pen);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
            throw StatsError("information matrix is singular (collinear or constant predictor?)");
        Eigen::VectorXd step = ldlt.solve(g);
        // Step halving keeps the penalized likelihood non-decreasing.
        double new_ll = log_likelihood(X, y, beta + step, pen);
        for (int half = 0; half < 30 && !(new_ll >= ll - 1e-12); ++half) {
            step *= 0.5;
            new_ll = log_likelihood(X, y, beta + step, pen);
        }
        beta += step;
        ll = new_ll;
        if (opt.ridge == 0.0 && beta.cwiseAbs().maxCoeff() > opt.divergence_bound)
            throw StatsError("coefficients diverge (perfect separation?); refit with ridge > 0");
        if (step.cwiseAbs().maxCoeff() < opt.tolerance) {
            fit.converged = true;
            break;
        }
    }
    if (!fit.converged && opt.ridge == 0.0)
        throw StatsError("IRLS did not converge in " + std::to_string(opt.max_iterations) +
                         " iterations (possible separation); refit with ridge > 0");

    info = information(beta);
    const Eigen::MatrixXd cov = info.inverse();
    fit.names.push_back("(intercept)");
    fit.names.insert(fit.names.end(), predictor_names.begin(), predictor_names.end());
    fit.log_likelihood = ll;
    for (Eigen::Index j = 0; j < p; ++j) {
        const double b = beta[j];
        const double se = std::sqrt(cov(j, j));
        const double z = b / se;
        fit.coefficients.push_back(b);
        fit.std_errors.push_back(se);
        fit.z_values.push_back(z);
        fit.p_values.push_back(two_sided_p(z));
        fit.odds_ratios.push_back(odds_ratio(b));
    }
    return fit;
}

// Columns: predictor, b, S.E., p-value, Exp(B).
inline void write_logit_report(std::ostream& out, const LogitFit& fit) {
    out << "predictor,b,S.E.,p-value,Exp(B)\n";
    for (std::size_t j = 0; j < fit.names.size(); ++j)
        out << fit.names[j] << ',' << format_fixed(fit.coefficients[j], 3) << ','
            << format_fixed(fit.std_errors[j], 3) << ',' << format_fixed(fit.p_values[j], 3) << ','
            << format_fixed(fit.odds_ratios[j], 3) << '\n';
}

// ---------------------------------------------------------------------------
// Correlation

// Single-pass (Welford) product-moment correlation.
inline double pearson_r(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw StatsError("pearson_r: length mismatch");
    if (x.size() < 2) throw StatsError("pearson_r: need at least two observations");
    double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double k = static_cast<double>(i + 1);
        const double dx = x[i] - mx, dy = y[i] - my;
        mx += dx / k;
        my += dy / k;
        sxx += dx * (x[i] - mx);
        syy += dy * (y[i] - my);
        sxy += dx * (y[i] - my);
    }
    if (sxx <= 0 || syy <= 0) throw StatsError("pearson_r: zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// 1-based ranks; ties share their average rank.
inline std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

inline double spearman_rho(std::span<const double> x, std::span<const double> y) {
    const auto rx = average_ranks(x), ry = average_ranks(y);
    return pearson_r(rx, ry);
}

enum class CollinearityLevel { ok, warn, flag };

inline std::string_view to_string(CollinearityLevel l) {
    switch (l) {
    case CollinearityLevel::ok: return "ok";
    case CollinearityLevel::warn: return "warn";
    case CollinearityLevel::flag: return "flag";
    }
    return "?";
}

struct CollinearityPair {
    std::string a, b;
    double r = 0.0;
    CollinearityLevel level = CollinearityLevel::ok;
};

inline constexpr double kCollinearityWarn = 0.5;
inline constexpr double kCollinearityFlag = 0.7;

// All column pairs; constant columns are skipped.
inline std::vector<CollinearityPair> screen_collinearity(const Eigen::MatrixXd& design,
                                                         const std::vector<std::string>& names) {
    std::vector<CollinearityPair> out;
    const auto n = static_cast<std::size_t>(design.rows());
    std::vector<std::vector<double>> cols(static_cast<std::size_t>(design.cols()));
    for (Eigen::Index j = 0; j < design.cols(); ++j)
        cols[static_cast<std::size_t>(j)].assign(design.col(j).data(), design.col(j).data() + n);
    for (std::size_t a = 0; a < cols.size(); ++a) {
        for (std::size_t b = a + 1; b < cols.size(); ++b) {
            double r;
            try {
                r = pearson_r(cols[a], cols[b]);
            } catch (const StatsError&) {
                continue;
            }
            const double m = std::abs(r);
            const auto level = m > kCollinearityFlag   ? CollinearityLevel::flag
                               : m > kCollinearityWarn ? CollinearityLevel::warn
                                                       : CollinearityLevel::ok;
            out.push_back({names[a], names[b], r, level});
        }
    }
    return out;
}

inline void write_collinearity_report(std::ostream& out, std::span<const CollinearityPair> pairs) {
    out << "predictor_a,predictor_b,r,level\n";
    for (const auto& p : pairs)
        out << p.a << ',' << p.b << ',' << format_fixed(p.r, 3) << ',' << to_string(p.level) << '\n';
}

} // namespace vipar::stats
