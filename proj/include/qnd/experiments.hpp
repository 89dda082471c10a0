#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "qnd/calibration.hpp"
#include "qnd/decoder.hpp"
#include "qnd/fit.hpp"
#include "qnd/sim.hpp"

namespace qnd {

enum class DecodeMode { Hard, Soft, Majority };

struct ExperimentConfig {
    SimConfig sim;
    std::size_t n_trials_per_state = 10000;
    std::size_t max_cycles = 15;
    bool mode_hard = true;
    bool mode_soft = true;
    bool mode_majority = false;
    double added_noise_sigma = 0.0;
    // Histograms are always built from an independently seeded trace set;
    // this sets its size relative to n_trials_per_state.
    double calibration_fraction = 1.0;
    double prep_error_eta1 = 0.0;
    double prep_error_eta0 = 0.0;
    std::size_t n_bins = 60;
    double pseudo_count = 0.5;
    double llr_clamp = 50.0;
    // Replaces the trace pipeline by a direct binary channel with the
    // given error rates (analytic cross-checks only).
    bool forced_binary = false;
    double forced_eps1 = 0.25;
    double forced_eps0 = 0.25;
    unsigned threads = 1;

    std::size_t n_calibration_per_state() const {
        return static_cast<std::size_t>(
            std::llround(calibration_fraction * static_cast<double>(n_trials_per_state)));
    }

    void validate() const {
        sim.validate();
        if (n_trials_per_state < 100)
            throw std::invalid_argument("experiment config: n_trials_per_state must be >= 100");
        if (max_cycles < 1) throw std::invalid_argument("experiment config: max_cycles must be >= 1");
        if (!(added_noise_sigma >= 0.0))
            throw std::invalid_argument("experiment config: added_noise_sigma must be >= 0");
        if (!(calibration_fraction > 0.0 && calibration_fraction <= 1.0))
            throw std::invalid_argument("experiment config: calibration_fraction outside (0, 1]");
        for (double eta : {prep_error_eta1, prep_error_eta0})
            if (!(eta >= 0.0 && eta <= 1.0))
                throw std::invalid_argument("experiment config: preparation error outside [0, 1]");
        if (n_bins == 0) throw std::invalid_argument("experiment config: n_bins must be > 0");
        if (!(pseudo_count >= 0.0))
            throw std::invalid_argument("experiment config: pseudo_count must be >= 0");
        if (!mode_hard && !mode_soft && !mode_majority)
            throw std::invalid_argument("experiment config: no decode mode selected");
        if (forced_binary) {
            for (double eps : {forced_eps1, forced_eps0})
                if (!(eps >= 0.0 && eps < 0.5))
                    throw std::invalid_argument("experiment config: forced eps outside [0, 0.5)");
        }
    }
};

struct ModeCurve {
    // Indexed by N - 1, N = 1..max_cycles.
    std::vector<double> eps1, eps0, eps_avg;
    std::vector<double> stderr1, stderr0;

    double fidelity(std::size_t n) const { return 1.0 - eps_avg.at(n - 1); }
    double visibility(std::size_t n) const { return 1.0 - 2.0 * eps_avg.at(n - 1); }
};

struct CycleProbabilities {
    // Single-repetition spin-up frequencies per cycle and cumulative
    // hard-decode decision frequencies after N cycles, per prepared state.
    std::vector<double> single_rep_p1_prep1, single_rep_p1_prep0;
    std::vector<double> cumulative_p1_prep1, cumulative_p1_prep0;

    double cumulative_visibility(std::size_t n) const {
        return cumulative_p1_prep1.at(n - 1) - cumulative_p1_prep0.at(n - 1);
    }
};

struct ErrorCurve {
    std::size_t max_cycles = 0;
    std::size_t n_trials_per_state = 0;
    ModeCurve hard, soft, majority;
    bool has_hard = false, has_soft = false, has_majority = false;
    CycleProbabilities cycle_probabilities;
    CalibrationResult calibration;  // unset in forced-binary mode
    bool has_calibration = false;
    double hard_eps1 = 0.0, hard_eps0 = 0.0;  // binary channel fed to the hard decoder
};

namespace detail {

// Error counts for one prepared state, accumulated per trial.
struct StateCounts {
    std::vector<std::uint64_t> hard_err, soft_err, majority_err;
    std::vector<std::uint64_t> single_rep_ones, cumulative_ones;

    explicit StateCounts(std::size_t max_cycles)
        : hard_err(max_cycles, 0),
          soft_err(max_cycles, 0),
          majority_err(max_cycles, 0),
          single_rep_ones(max_cycles, 0),
          cumulative_ones(max_cycles, 0) {}

    void merge(const StateCounts& other) {
        for (std::size_t i = 0; i < hard_err.size(); ++i) {
            hard_err[i] += other.hard_err[i];
            soft_err[i] += other.soft_err[i];
            majority_err[i] += other.majority_err[i];
            single_rep_ones[i] += other.single_rep_ones[i];
            cumulative_ones[i] += other.cumulative_ones[i];
        }
    }
};

inline void parallel_trials(std::size_t n_trials, unsigned threads,
                            const std::function<void(std::size_t begin, std::size_t end,
                                                     StateCounts& local)>& body,
                            StateCounts& total) {
    if (threads <= 1) {
        body(0, n_trials, total);
        return;
    }
    std::vector<StateCounts> locals(threads, StateCounts(total.hard_err.size()));
    std::vector<std::thread> workers;
    const std::size_t chunk = (n_trials + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t begin = std::min<std::size_t>(t * chunk, n_trials);
        const std::size_t end = std::min<std::size_t>(begin + chunk, n_trials);
        workers.emplace_back([&, begin, end, t] { body(begin, end, locals[t]); });
    }
    for (auto& w : workers) w.join();
    for (const auto& local : locals) total.merge(local);
}

// Seed-space separation between the calibration, evaluation, and
// auxiliary (preparation/noise) streams of one experiment.
inline constexpr std::uint64_t kCalibTag = 0xCA11B;
inline constexpr std::uint64_t kPrepTag = 0x9193;
inline constexpr std::uint64_t kNoiseTag = 0x2015E;

inline std::uint64_t derived_seed(std::uint64_t master, std::uint64_t tag) {
    return splitmix64(splitmix64(master ^ tag) + tag);
}

}  // namespace detail

// Simulates the calibration trace set (perfect preparation, single
// repetition per trial) and runs the readout-time optimization.
inline CalibrationResult run_calibration(const ExperimentConfig& cfg) {
    SimConfig calib_sim = cfg.sim;
    calib_sim.master_seed = detail::derived_seed(cfg.sim.master_seed, detail::kCalibTag);

    const std::size_t n = cfg.n_calibration_per_state();
    std::vector<Trace> traces1(n), traces0(n);
    auto generate = [&](QubitState state, std::vector<Trace>& out, std::uint64_t base) {
        for (std::size_t trial = 0; trial < n; ++trial) {
            RunRecord run = simulate_run(state, 1, calib_sim, base + trial);
            Trace trace = std::move(run.traces[0]);
            if (cfg.added_noise_sigma > 0.0) {
                auto rng = make_stream(calib_sim.master_seed, base + trial, 0, detail::kNoiseTag);
                trace = add_gaussian_noise(trace, cfg.added_noise_sigma, rng);
            }
            out[trial] = std::move(trace);
        }
    };
    generate(QubitState::Up, traces1, 0);
    generate(QubitState::Down, traces0, n);

    const auto grid = default_t_r_grid(cfg.sim.dt_sample, cfg.sim.trace_length);
    return optimize_readout_time(traces1, traces0, grid, cfg.n_bins, cfg.pseudo_count,
                                 cfg.llr_clamp);
}

// Monte Carlo logical error curves for every enabled decode mode. Ties
// (lambda^log = 0) decide 0 everywhere, so they count as errors for
// preparation in state 1. Results are independent of the thread count.
inline ErrorCurve run_error_curve(const ExperimentConfig& cfg) {
    cfg.validate();

    ErrorCurve curve;
    curve.max_cycles = cfg.max_cycles;
    curve.n_trials_per_state = cfg.n_trials_per_state;
    curve.has_hard = cfg.mode_hard;
    curve.has_soft = cfg.mode_soft && !cfg.forced_binary;
    curve.has_majority = cfg.mode_majority;

    ObservationModel soft_model;
    ObservationModel hard_model;
    double t_r_opt = 0.0;

    if (cfg.forced_binary) {
        hard_model = ObservationModel::binary(cfg.forced_eps1, cfg.forced_eps0);
        curve.hard_eps1 = cfg.forced_eps1;
        curve.hard_eps0 = cfg.forced_eps0;
    } else {
        curve.calibration = run_calibration(cfg);
        curve.has_calibration = true;
        soft_model = curve.calibration.observation_model();
        hard_model = ObservationModel::binary(std::min(curve.calibration.eps1, 0.5 - 1e-9),
                                              std::min(curve.calibration.eps0, 0.5 - 1e-9));
        curve.hard_eps1 = hard_model.eps1;
        curve.hard_eps0 = hard_model.eps0;
        t_r_opt = curve.calibration.t_r_opt;
    }

    const std::size_t n_cycles = cfg.max_cycles;
    const std::size_t n_trials = cfg.n_trials_per_state;
    SimConfig eval_sim = cfg.sim;

    // One trial: produce the per-cycle hard bits and peak signals.
    auto run_trial = [&](QubitState prepared, std::size_t trial, std::vector<int>& bits,
                         std::vector<double>& peaks) {
        const double eta =
            prepared == QubitState::Up ? cfg.prep_error_eta1 : cfg.prep_error_eta0;
        QubitState x0 = prepared;
        if (eta > 0.0) {
            auto prep_rng = make_stream(eval_sim.master_seed, trial, 0, detail::kPrepTag);
            if (std::uniform_real_distribution<double>(0.0, 1.0)(prep_rng) < eta)
                x0 = x0 == QubitState::Up ? QubitState::Down : QubitState::Up;
        }

        bits.resize(n_cycles);
        peaks.resize(n_cycles);
        if (cfg.forced_binary) {
            // Direct binary channel over the hidden relaxation chain.
            QubitState x = x0;
            const double survive = std::isinf(eval_sim.t1_logical)
                                       ? 1.0
                                       : std::exp(-eval_sim.dt_rep / eval_sim.t1_logical);
            for (std::size_t k = 0; k < n_cycles; ++k) {
                auto rng = make_stream(eval_sim.master_seed, trial, k, 0);
                std::uniform_real_distribution<double> uni(0.0, 1.0);
                if (k > 0 && x == QubitState::Up && uni(rng) >= survive) x = QubitState::Down;
                const double flip = x == QubitState::Up ? cfg.forced_eps1 : cfg.forced_eps0;
                int bit = bit_of(x);
                if (uni(rng) < flip) bit ^= 1;
                bits[k] = bit;
                peaks[k] = bit;
            }
            return;
        }

        const RunRecord run = simulate_run(x0, n_cycles, eval_sim, trial);
        for (std::size_t k = 0; k < n_cycles; ++k) {
            Trace trace = run.traces[k];
            if (cfg.added_noise_sigma > 0.0) {
                auto rng = make_stream(eval_sim.master_seed, trial, k, detail::kNoiseTag);
                trace = add_gaussian_noise(trace, cfg.added_noise_sigma, rng);
            }
            const double peak = peak_signal(trace, t_r_opt);
            peaks[k] = peak;
            bits[k] = single_cycle_llr(soft_model, peak) > 0.0 ? 1 : 0;
        }
    };

    auto decode_state = [&](QubitState prepared, std::uint64_t trial_base,
                            detail::StateCounts& counts) {
        auto body = [&](std::size_t begin, std::size_t end, detail::StateCounts& local) {
            std::vector<int> bits;
            std::vector<double> peaks;
            ReadoutRecord hard_record{ObservationKind::Binary, {}, eval_sim.dt_rep};
            ReadoutRecord soft_record{ObservationKind::Peak, {}, eval_sim.dt_rep};
            for (std::size_t i = begin; i < end; ++i) {
                run_trial(prepared, trial_base + i, bits, peaks);

                for (std::size_t k = 0; k < n_cycles; ++k)
                    local.single_rep_ones[k] += static_cast<std::uint64_t>(bits[k]);
                if (cfg.mode_hard) {
                    hard_record.observations.assign(bits.begin(), bits.end());
                    const DecodeResult result =
                        decode(hard_record, hard_model, eval_sim.t1_logical);
                    for (std::size_t k = 0; k < n_cycles; ++k) {
                        const QubitState decision =
                            decision_from_lambda(result.per_cycle_lambda[k]);
                        if (decision == QubitState::Up) ++local.cumulative_ones[k];
                        if (decision != prepared) ++local.hard_err[k];
                    }
                }
                if (curve.has_soft) {
                    soft_record.observations.assign(peaks.begin(), peaks.end());
                    const DecodeResult result =
                        decode(soft_record, soft_model, eval_sim.t1_logical);
                    for (std::size_t k = 0; k < n_cycles; ++k)
                        if (decision_from_lambda(result.per_cycle_lambda[k]) != prepared)
                            ++local.soft_err[k];
                }
                if (cfg.mode_majority) {
                    long ones = 0;
                    for (std::size_t k = 0; k < n_cycles; ++k) {
                        ones += bits[k];
                        const QubitState decision =
                            2 * ones > static_cast<long>(k + 1) ? QubitState::Up : QubitState::Down;
                        if (decision != prepared) ++local.majority_err[k];
                    }
                }
            }
        };
        detail::parallel_trials(n_trials, cfg.threads, body, counts);
    };

    detail::StateCounts counts1(n_cycles), counts0(n_cycles);
    decode_state(QubitState::Up, 0, counts1);
    decode_state(QubitState::Down, n_trials, counts0);

    auto fill = [&](const std::vector<std::uint64_t>& err1, const std::vector<std::uint64_t>& err0,
                    ModeCurve& mode) {
        mode.eps1.resize(n_cycles);
        mode.eps0.resize(n_cycles);
        mode.eps_avg.resize(n_cycles);
        mode.stderr1.resize(n_cycles);
        mode.stderr0.resize(n_cycles);
        for (std::size_t k = 0; k < n_cycles; ++k) {
            mode.eps1[k] = static_cast<double>(err1[k]) / static_cast<double>(n_trials);
            mode.eps0[k] = static_cast<double>(err0[k]) / static_cast<double>(n_trials);
            mode.eps_avg[k] = 0.5 * (mode.eps1[k] + mode.eps0[k]);
            mode.stderr1[k] = binomial_stderr(mode.eps1[k], n_trials);
            mode.stderr0[k] = binomial_stderr(mode.eps0[k], n_trials);
        }
    };
    if (cfg.mode_hard) fill(counts1.hard_err, counts0.hard_err, curve.hard);
    if (curve.has_soft) fill(counts1.soft_err, counts0.soft_err, curve.soft);
    if (cfg.mode_majority) fill(counts1.majority_err, counts0.majority_err, curve.majority);

    auto frequencies = [&](const std::vector<std::uint64_t>& ones) {
        std::vector<double> f(n_cycles);
        for (std::size_t k = 0; k < n_cycles; ++k)
            f[k] = static_cast<double>(ones[k]) / static_cast<double>(n_trials);
        return f;
    };
    curve.cycle_probabilities.single_rep_p1_prep1 = frequencies(counts1.single_rep_ones);
    curve.cycle_probabilities.single_rep_p1_prep0 = frequencies(counts0.single_rep_ones);
    curve.cycle_probabilities.cumulative_p1_prep1 = frequencies(counts1.cumulative_ones);
    curve.cycle_probabilities.cumulative_p1_prep0 = frequencies(counts0.cumulative_ones);

    return curve;
}

// Fits T1 from the single-repetition spin-up frequencies of an error
// curve, with cycle k at time t = k * dt_rep.
inline T1FitResult fit_t1_from_cycles(const CycleProbabilities& probs, double dt_rep) {
    const std::size_t n = probs.single_rep_p1_prep1.size();
    std::vector<double> times(n);
    for (std::size_t k = 0; k < n; ++k) times[k] = static_cast<double>(k + 1) * dt_rep;
    return fit_t1(probs.single_rep_p1_prep1, times, probs.single_rep_p1_prep0, times);
}

// Bisection on the added-noise sigma so that the calibrated average
// single-repetition error rate hits `eps_avg_target`.
inline double tune_added_noise(ExperimentConfig cfg, double eps_avg_target,
                               double tolerance = 0.005, std::size_t max_iter = 24) {
    cfg.validate();
    auto eps_at = [&](double sigma) {
        ExperimentConfig probe = cfg;
        probe.added_noise_sigma = sigma;
        return run_calibration(probe).eps_avg;
    };

    double lo = 0.0;
    double eps_lo = eps_at(lo);
    if (eps_lo >= eps_avg_target) return lo;

    double hi = std::max(4.0 * (cfg.sim.i_high - cfg.sim.i_low), 8.0 * cfg.sim.sigma_noise);
    double eps_hi = eps_at(hi);
    std::size_t expand = 0;
    while (eps_hi < eps_avg_target && expand++ < 8) {
        hi *= 2.0;
        eps_hi = eps_at(hi);
    }
    if (eps_hi < eps_avg_target)
        throw std::runtime_error("tune_added_noise: target error rate unreachable");

    double mid = hi;
    for (std::size_t i = 0; i < max_iter; ++i) {
        mid = 0.5 * (lo + hi);
        const double eps = eps_at(mid);
        if (std::abs(eps - eps_avg_target) < tolerance) return mid;
        if (eps < eps_avg_target)
            lo = mid;
        else
            hi = mid;
    }
    return mid;
}

// Simulator preset whose calibrated single-repetition error rates land
// near (eps1, eps0) = (32.9%, 16.2%) with T1 = 1.8 s.
inline SimConfig paper_matched_sim() {
    SimConfig sim;
    sim.t1_logical = 1.8;
    sim.t1_ancilla = 1.0e-3;
    sim.gamma_out = 1.0e4;
    sim.gamma_in = 1.0e4;
    sim.gamma_dark = 0.0;
    sim.p_crot_flip = 0.19;
    sim.sigma_noise = 0.15;
    return sim;
}

}  // namespace qnd
