#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "qnd/histogram.hpp"
#include "qnd/observation.hpp"
#include "qnd/sim.hpp"

namespace qnd {

// Peak signal I_p: maximum sample within the readout window t <= t_r,
// where sample i sits at time (i+1)*dt_sample.
inline double peak_signal(const Trace& trace, double t_r) {
    const double dt = trace.dt_sample;
    const auto covered = static_cast<std::size_t>(std::floor(t_r / dt * (1.0 + 1e-12)));
    if (covered < 1) throw std::invalid_argument("peak_signal: t_r shorter than one sample period");
    const std::size_t n = std::min(covered, trace.samples.size());
    if (trace.samples.empty()) throw std::invalid_argument("peak_signal: empty trace");
    return *std::max_element(trace.samples.begin(), trace.samples.begin() + static_cast<long>(n));
}

inline double binomial_stderr(double eps, std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("binomial_stderr: n must be >= 1");
    if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("binomial_stderr: eps outside [0, 1]");
    return std::sqrt(eps * (1.0 - eps) / static_cast<double>(n));
}

// Conditional peak-signal histograms for the two prepared states on
// shared uniform edges spanning the pooled range.
inline std::pair<EmpiricalDistribution, EmpiricalDistribution> build_distributions(
    std::span<const double> peaks1, std::span<const double> peaks0, std::size_t n_bins,
    double pseudo_count) {
    if (peaks1.empty() || peaks0.empty())
        throw std::invalid_argument("build_distributions: empty trace set");

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (auto peaks : {peaks1, peaks0}) {
        for (double p : peaks) {
            lo = std::min(lo, p);
            hi = std::max(hi, p);
        }
    }
    if (hi <= lo) {
        // Degenerate pooled range (all peaks identical): widen symmetrically.
        const double pad = std::max(1e-12, std::abs(lo) * 1e-9);
        lo -= pad;
        hi += pad;
    }

    EmpiricalDistribution dist1(lo, hi, n_bins, pseudo_count);
    EmpiricalDistribution dist0(lo, hi, n_bins, pseudo_count);
    dist1.add_all(peaks1);
    dist0.add_all(peaks0);
    return {std::move(dist1), std::move(dist0)};
}

// Per-bin log-likelihood ratio ln(p1/p0) on smoothed probabilities.
inline std::vector<double> llr_table(const EmpiricalDistribution& dist1,
                                     const EmpiricalDistribution& dist0, double llr_clamp) {
    if (!dist1.same_edges(dist0)) throw std::invalid_argument("llr_table: bin edge mismatch");
    std::vector<double> table(dist1.n_bins());
    for (std::size_t i = 0; i < table.size(); ++i) {
        const double p1 = dist1.bin_probability(i);
        const double p0 = dist0.bin_probability(i);
        double llr;
        if (p1 <= 0.0 && p0 <= 0.0)
            llr = 0.0;
        else if (p0 <= 0.0)
            llr = llr_clamp;
        else if (p1 <= 0.0)
            llr = -llr_clamp;
        else
            llr = std::log(p1 / p0);
        table[i] = std::clamp(llr, -llr_clamp, llr_clamp);
    }
    return table;
}

struct SingleRepErrors {
    double eps1 = 0.0;
    double eps0 = 0.0;
    double eps_avg = 0.0;
};

// Marginal single-repetition error rates under the sign(lambda) decision
// rule; lambda = 0 bins decide 0 and therefore count toward eps1. Raw
// (unsmoothed) frequencies are used so the result equals the
// trace-by-trace misclassification frequency exactly.
inline SingleRepErrors single_rep_errors(const EmpiricalDistribution& dist1,
                                         const EmpiricalDistribution& dist0,
                                         double llr_clamp = 50.0) {
    const auto table = llr_table(dist1, dist0, llr_clamp);
    // Raw counts, divided once: the marginals then equal trace-by-trace
    // misclassification frequencies exactly.
    std::uint64_t miss1 = 0, miss0 = 0;
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (table[i] <= 0.0) miss1 += dist1.counts()[i];
        if (table[i] > 0.0) miss0 += dist0.counts()[i];
    }
    SingleRepErrors errors;
    errors.eps1 = static_cast<double>(miss1) / static_cast<double>(dist1.total());
    errors.eps0 = static_cast<double>(miss0) / static_cast<double>(dist0.total());
    errors.eps_avg = 0.5 * (errors.eps1 + errors.eps0);
    return errors;
}

struct CalibrationResult {
    double t_r_opt = 0.0;
    double eps1 = 0.0, eps0 = 0.0, eps_avg = 0.0;
    double stderr1 = 0.0, stderr0 = 0.0;
    EmpiricalDistribution dist1, dist0;
    std::vector<double> llr;
    double llr_clamp = 50.0;
    std::optional<double> threshold_equivalent;

    ObservationModel observation_model() const {
        return ObservationModel::empirical(dist1, dist0, llr_clamp);
    }
};

struct SweepPoint {
    double t_r = 0.0;
    double eps1 = 0.0, eps0 = 0.0, eps_avg = 0.0;
};

namespace detail {

// If sign(lambda) is a single low-to-high step over the bins, the soft
// decision reduces to thresholding I_p at that edge.
inline std::optional<double> step_threshold(const std::vector<double>& llr,
                                            const EmpiricalDistribution& dist) {
    std::size_t first_pos = llr.size();
    for (std::size_t i = 0; i < llr.size(); ++i) {
        if (llr[i] > 0.0) {
            first_pos = i;
            break;
        }
    }
    for (std::size_t i = first_pos; i < llr.size(); ++i)
        if (llr[i] <= 0.0) return std::nullopt;
    if (first_pos == llr.size() || first_pos == 0) return std::nullopt;
    return dist.bin_edges()[first_pos];
}

}  // namespace detail

inline CalibrationResult calibrate_at(std::span<const Trace> traces1, std::span<const Trace> traces0,
                                      double t_r, std::size_t n_bins, double pseudo_count,
                                      double llr_clamp = 50.0) {
    std::vector<double> peaks1, peaks0;
    peaks1.reserve(traces1.size());
    peaks0.reserve(traces0.size());
    for (const Trace& t : traces1) peaks1.push_back(peak_signal(t, t_r));
    for (const Trace& t : traces0) peaks0.push_back(peak_signal(t, t_r));

    auto [dist1, dist0] = build_distributions(peaks1, peaks0, n_bins, pseudo_count);
    const auto errors = single_rep_errors(dist1, dist0, llr_clamp);

    CalibrationResult result;
    result.t_r_opt = t_r;
    result.eps1 = errors.eps1;
    result.eps0 = errors.eps0;
    result.eps_avg = errors.eps_avg;
    result.stderr1 = binomial_stderr(errors.eps1, dist1.total());
    result.stderr0 = binomial_stderr(errors.eps0, dist0.total());
    result.llr = llr_table(dist1, dist0, llr_clamp);
    result.llr_clamp = llr_clamp;
    result.threshold_equivalent = detail::step_threshold(result.llr, dist1);
    result.dist1 = std::move(dist1);
    result.dist0 = std::move(dist0);
    return result;
}

// Readout-time grid covering every sample instant.
inline std::vector<double> default_t_r_grid(double dt_sample, double trace_length) {
    std::vector<double> grid;
    const auto n = static_cast<std::size_t>(std::llround(trace_length / dt_sample));
    grid.reserve(n);
    for (std::size_t i = 1; i <= n; ++i) grid.push_back(static_cast<double>(i) * dt_sample);
    return grid;
}

inline std::vector<SweepPoint> sweep_readout_times(std::span<const Trace> traces1,
                                                   std::span<const Trace> traces0,
                                                   std::span<const double> t_r_grid,
                                                   std::size_t n_bins, double pseudo_count,
                                                   double llr_clamp = 50.0) {
    if (t_r_grid.empty()) throw std::invalid_argument("sweep_readout_times: empty grid");
    std::vector<SweepPoint> sweep;
    sweep.reserve(t_r_grid.size());
    for (double t_r : t_r_grid) {
        std::vector<double> peaks1, peaks0;
        peaks1.reserve(traces1.size());
        peaks0.reserve(traces0.size());
        for (const Trace& t : traces1) peaks1.push_back(peak_signal(t, t_r));
        for (const Trace& t : traces0) peaks0.push_back(peak_signal(t, t_r));
        auto [dist1, dist0] = build_distributions(peaks1, peaks0, n_bins, pseudo_count);
        const auto errors = single_rep_errors(dist1, dist0, llr_clamp);
        sweep.push_back({t_r, errors.eps1, errors.eps0, errors.eps_avg});
    }
    return sweep;
}

// Full calibration: minimize eps_avg over the readout-time grid, ties
// resolved toward the smallest t_r.
inline CalibrationResult optimize_readout_time(std::span<const Trace> traces1,
                                               std::span<const Trace> traces0,
                                               std::span<const double> t_r_grid,
                                               std::size_t n_bins, double pseudo_count,
                                               double llr_clamp = 50.0) {
    const auto sweep = sweep_readout_times(traces1, traces0, t_r_grid, n_bins, pseudo_count, llr_clamp);
    const SweepPoint* best = &sweep.front();
    for (const auto& point : sweep) {
        if (point.eps_avg < best->eps_avg ||
            (point.eps_avg == best->eps_avg && point.t_r < best->t_r))
            best = &point;
    }
    return calibrate_at(traces1, traces0, best->t_r, n_bins, pseudo_count, llr_clamp);
}

}  // namespace qnd
