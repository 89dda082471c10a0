#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace qnd {

struct T1FitResult {
    double amplitude = 0.0;   // A
    double baseline = 0.0;    // B
    double t1 = 0.0;          // T1 [s]
    double amplitude_stderr = 0.0;
    double baseline_stderr = 0.0;
    double t1_stderr = 0.0;
    double residual_norm = 0.0;
    bool converged = false;
    bool degenerate = false;  // flat curve, T1 unidentifiable
};

namespace detail {

// Solve a symmetric positive-definite 3x3 system by Gaussian elimination
// with partial pivoting. Returns false when the matrix is singular.
inline bool solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3>& b) {
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int row = col + 1; row < 3; ++row)
            if (std::abs(a[row][col]) > std::abs(a[pivot][col])) pivot = row;
        if (std::abs(a[pivot][col]) < 1e-300) return false;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (int row = col + 1; row < 3; ++row) {
            const double f = a[row][col] / a[col][col];
            for (int k = col; k < 3; ++k) a[row][k] -= f * a[col][k];
            b[row] -= f * b[col];
        }
    }
    for (int col = 2; col >= 0; --col) {
        for (int k = col + 1; k < 3; ++k) b[col] -= a[col][k] * b[k];
        b[col] /= a[col][col];
    }
    return true;
}

inline bool invert3(const std::array<std::array<double, 3>, 3>& a,
                    std::array<std::array<double, 3>, 3>& inv) {
    for (int col = 0; col < 3; ++col) {
        std::array<double, 3> e{0.0, 0.0, 0.0};
        e[col] = 1.0;
        auto copy = a;
        if (!solve3(copy, e)) return false;
        for (int row = 0; row < 3; ++row) inv[row][col] = e[row];
    }
    return true;
}

}  // namespace detail

// Joint least-squares fit of P1(t) = A exp(-t/T1) + B and P0(t) = B by
// Levenberg-damped Gauss-Newton with an analytic Jacobian.
inline T1FitResult fit_t1(std::span<const double> p1, std::span<const double> times1,
                          std::span<const double> p0, std::span<const double> times0) {
    if (p1.size() != times1.size() || p0.size() != times0.size())
        throw std::invalid_argument("fit_t1: value/time length mismatch");
    if (p1.size() < 4 || p0.size() < 4)
        throw std::invalid_argument("fit_t1: need at least 4 points per curve");

    T1FitResult fit;

    // Initial guess: baseline from the flat curve, amplitude from the
    // first decaying point, T1 from the time span.
    double b = 0.0;
    for (double v : p0) b += v;
    b /= static_cast<double>(p0.size());
    double a = p1.front() - b;
    double t1 = std::max(times1.back() - times1.front(), 1e-9);

    const std::size_t n = p1.size() + p0.size();
    auto residuals = [&](double pa, double pb, double pt1, std::vector<double>& r) {
        r.clear();
        for (std::size_t i = 0; i < p1.size(); ++i)
            r.push_back(p1[i] - (pa * std::exp(-times1[i] / pt1) + pb));
        for (std::size_t i = 0; i < p0.size(); ++i) r.push_back(p0[i] - pb);
    };

    std::vector<double> r;
    residuals(a, b, t1, r);
    double ssr = 0.0;
    for (double v : r) ssr += v * v;

    double lambda = 1e-3;
    std::array<std::array<double, 3>, 3> jtj{};
    for (int iter = 0; iter < 200; ++iter) {
        jtj = {};
        std::array<double, 3> jtr{0.0, 0.0, 0.0};
        for (std::size_t i = 0; i < p1.size(); ++i) {
            const double e = std::exp(-times1[i] / t1);
            const std::array<double, 3> row{e, 1.0, a * e * times1[i] / (t1 * t1)};
            const double ri = p1[i] - (a * e + b);
            for (int x = 0; x < 3; ++x) {
                jtr[x] += row[x] * ri;
                for (int y = 0; y < 3; ++y) jtj[x][y] += row[x] * row[y];
            }
        }
        for (std::size_t i = 0; i < p0.size(); ++i) {
            jtr[1] += p0[i] - b;
            jtj[1][1] += 1.0;
        }

        auto damped = jtj;
        for (int x = 0; x < 3; ++x) damped[x][x] *= 1.0 + lambda;
        auto step = jtr;
        if (!detail::solve3(damped, step)) {
            fit.degenerate = true;
            break;
        }

        const double a_new = a + step[0];
        const double b_new = b + step[1];
        const double t1_new = t1 + step[2];
        if (!(t1_new > 0.0)) {
            lambda *= 10.0;
            continue;
        }
        residuals(a_new, b_new, t1_new, r);
        double ssr_new = 0.0;
        for (double v : r) ssr_new += v * v;

        if (ssr_new <= ssr) {
            const double delta = std::abs(step[0]) + std::abs(step[1]) + std::abs(step[2]);
            a = a_new;
            b = b_new;
            t1 = t1_new;
            ssr = ssr_new;
            lambda = std::max(lambda * 0.3, 1e-12);
            if (delta < 1e-10) {
                fit.converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if (lambda > 1e12) break;
        }
    }

    fit.amplitude = a;
    fit.baseline = b;
    fit.t1 = t1;
    fit.residual_norm = std::sqrt(ssr);

    // Covariance from the undamped normal matrix at the optimum.
    std::array<std::array<double, 3>, 3> cov{};
    if (detail::invert3(jtj, cov)) {
        const double dof = static_cast<double>(n > 3 ? n - 3 : 1);
        const double s2 = ssr / dof;
        fit.amplitude_stderr = std::sqrt(std::max(0.0, cov[0][0] * s2));
        fit.baseline_stderr = std::sqrt(std::max(0.0, cov[1][1] * s2));
        fit.t1_stderr = std::sqrt(std::max(0.0, cov[2][2] * s2));
    } else {
        fit.degenerate = true;
    }
    if (std::abs(a) < 1e-9) fit.degenerate = true;
    return fit;
}

struct PrepErrorFitResult {
    double eta = 0.0;
    double eta_stderr = 0.0;
    double residual_norm = 0.0;
};

// Scalar least-squares fit of the error composition relation
// eps_exp = (1 - 2 eta) eps_sim + eta, i.e. eps_exp - eps_sim =
// eta (1 - 2 eps_sim).
inline PrepErrorFitResult fit_preparation_error(std::span<const double> eps_experiment,
                                                std::span<const double> eps_simulated) {
    if (eps_experiment.size() != eps_simulated.size() || eps_experiment.empty())
        throw std::invalid_argument("fit_preparation_error: curves must share a non-empty grid");

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < eps_simulated.size(); ++i) {
        if (eps_simulated[i] >= 0.5)
            throw std::invalid_argument("fit_preparation_error: eps_sim >= 1/2");
        const double x = 1.0 - 2.0 * eps_simulated[i];
        num += (eps_experiment[i] - eps_simulated[i]) * x;
        den += x * x;
    }
    PrepErrorFitResult fit;
    const double eta_raw = num / den;
    fit.eta = std::clamp(eta_raw, 0.0, 0.5 - 1e-12);

    double ssr = 0.0;
    for (std::size_t i = 0; i < eps_simulated.size(); ++i) {
        const double predicted = (1.0 - 2.0 * fit.eta) * eps_simulated[i] + fit.eta;
        const double residual = eps_experiment[i] - predicted;
        ssr += residual * residual;
    }
    fit.residual_norm = std::sqrt(ssr);
    const double dof = static_cast<double>(eps_simulated.size() > 1 ? eps_simulated.size() - 1 : 1);
    fit.eta_stderr = std::sqrt(ssr / dof / den);
    return fit;
}

}  // namespace qnd
