#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "qnd/rng.hpp"
#include "qnd/types.hpp"

namespace qnd {

struct SimConfig {
    double dt_sample = 16.38e-6;   // sensor sampling interval [s]
    double trace_length = 2.01e-3; // readout trace duration [s]
    double dt_rep = 3.263e-3;      // cycle period [s]
    double t1_logical = 1.8;       // logical qubit relaxation [s]
    double t1_ancilla = 1e-3;      // ancilla relaxation during readout [s]
    double gamma_out = 1e4;        // spin-up tunnel-out rate [1/s]
    double gamma_in = 1e4;         // tunnel-back-in rate [1/s]
    double gamma_dark = 0.0;       // spin-down escape rate [1/s]
    double p_crot_flip = 0.0;      // mapping bit-flip probability
    double p_ancilla_init = 0.0;   // ancilla reinitialization error
    double i_low = 0.0;            // sensor level, dot occupied [a.u.]
    double i_high = 1.0;           // sensor level, dot empty [a.u.]
    double sigma_noise = 0.15;     // Gaussian noise std per sample [a.u.]
    std::uint64_t master_seed = 0;

    std::size_t n_samples() const {
        return static_cast<std::size_t>(std::llround(trace_length / dt_sample));
    }

    void validate() const {
        auto pos_or_inf = [](double v) { return v > 0.0; };  // +inf passes
        if (!(dt_sample > 0.0)) throw std::invalid_argument("sim config: dt_sample must be > 0");
        if (!(trace_length > 0.0)) throw std::invalid_argument("sim config: trace_length must be > 0");
        if (!(dt_rep > 0.0)) throw std::invalid_argument("sim config: dt_rep must be > 0");
        if (!pos_or_inf(t1_logical)) throw std::invalid_argument("sim config: t1_logical must be > 0");
        if (!pos_or_inf(t1_ancilla)) throw std::invalid_argument("sim config: t1_ancilla must be > 0");
        if (!(gamma_out >= 0.0) || !(gamma_in >= 0.0) || !(gamma_dark >= 0.0))
            throw std::invalid_argument("sim config: tunnel rates must be >= 0");
        for (double p : {p_crot_flip, p_ancilla_init})
            if (!(p >= 0.0 && p <= 1.0))
                throw std::invalid_argument("sim config: probabilities must lie in [0, 1]");
        if (!(sigma_noise >= 0.0)) throw std::invalid_argument("sim config: sigma_noise must be >= 0");
        if (n_samples() < 1) throw std::invalid_argument("sim config: trace shorter than one sample");
        const double remainder =
            std::abs(trace_length - static_cast<double>(n_samples()) * dt_sample);
        if (remainder > dt_sample)
            throw std::invalid_argument("sim config: dt_sample must divide trace_length");
    }
};

struct Trace {
    std::vector<double> samples;  // sample i records the level at time (i+1)*dt_sample
    double dt_sample = 16.38e-6;
};

struct RunRecord {
    QubitState x0 = QubitState::Down;
    std::vector<QubitState> hidden_states;  // logical state at each cycle start
    std::vector<QubitState> ancilla_bits;   // post-mapping ancilla states
    std::vector<Trace> traces;
};

namespace detail {

// Exponential waiting time; rate 0 never fires, rate +inf fires immediately.
inline double exp_wait(double rate, std::mt19937_64& rng) {
    if (rate <= 0.0) return std::numeric_limits<double>::infinity();
    if (std::isinf(rate)) return 0.0;
    return std::exponential_distribution<double>(rate)(rng);
}

enum class DotState { OccupiedUp, OccupiedDown, Empty };

}  // namespace detail

// Piecewise-constant event times of the charge-sensor signal for one
// ancilla readout, before sampling and noise. Returns the (time, level)
// breakpoints starting at t = 0.
inline std::vector<std::pair<double, double>> sample_sensor_events(QubitState ancilla_state,
                                                                   const SimConfig& cfg,
                                                                   std::mt19937_64& rng) {
    using detail::DotState;
    const double relax_rate = std::isinf(cfg.t1_ancilla) ? 0.0 : 1.0 / cfg.t1_ancilla;

    DotState dot = ancilla_state == QubitState::Up ? DotState::OccupiedUp : DotState::OccupiedDown;
    double t = 0.0;
    std::vector<std::pair<double, double>> events;
    events.emplace_back(0.0, dot == DotState::Empty ? cfg.i_high : cfg.i_low);

    while (t < cfg.trace_length) {
        double wait;
        DotState next;
        switch (dot) {
            case DotState::OccupiedUp: {
                // Tunnel-out competes with ancilla spin relaxation.
                const double t_out = detail::exp_wait(cfg.gamma_out, rng);
                const double t_relax = detail::exp_wait(relax_rate, rng);
                if (t_out <= t_relax) {
                    wait = t_out;
                    next = DotState::Empty;
                } else {
                    wait = t_relax;
                    next = DotState::OccupiedDown;
                }
                break;
            }
            case DotState::OccupiedDown:
                wait = detail::exp_wait(cfg.gamma_dark, rng);
                next = DotState::Empty;
                break;
            case DotState::Empty:
            default:
                wait = detail::exp_wait(cfg.gamma_in, rng);
                next = DotState::OccupiedDown;
                break;
        }
        if (std::isinf(wait) || t + wait >= cfg.trace_length) break;
        t += wait;
        const double prev_level = events.back().second;
        dot = next;
        const double level = dot == DotState::Empty ? cfg.i_high : cfg.i_low;
        if (level != prev_level) events.emplace_back(t, level);
    }
    return events;
}

// One noisy charge-sensor trace for a given ancilla state.
inline Trace sample_ancilla_trace(QubitState ancilla_state, const SimConfig& cfg,
                                  std::mt19937_64& rng) {
    const auto events = sample_sensor_events(ancilla_state, cfg, rng);

    Trace trace;
    trace.dt_sample = cfg.dt_sample;
    trace.samples.resize(cfg.n_samples());

    std::size_t ev = 0;
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        const double t = static_cast<double>(i + 1) * cfg.dt_sample;
        while (ev + 1 < events.size() && events[ev + 1].first <= t) ++ev;
        double value = events[ev].second;
        if (cfg.sigma_noise > 0.0) value += cfg.sigma_noise * noise(rng);
        trace.samples[i] = value;
    }
    return trace;
}

// Full repetitive-readout run: logical relaxation between cycles, a
// bit-copy mapping with independent flip channels, one trace per cycle.
inline RunRecord simulate_run(QubitState x0, std::size_t n_cycles, const SimConfig& cfg,
                              std::uint64_t trial_index) {
    cfg.validate();
    if (n_cycles < 1) throw std::invalid_argument("simulate_run: n_cycles must be >= 1");

    RunRecord record;
    record.x0 = x0;
    record.hidden_states.reserve(n_cycles);
    record.ancilla_bits.reserve(n_cycles);
    record.traces.reserve(n_cycles);

    QubitState x = x0;
    for (std::size_t cycle = 0; cycle < n_cycles; ++cycle) {
        auto events_rng = make_stream(cfg.master_seed, trial_index, cycle, 0);
        auto trace_rng = make_stream(cfg.master_seed, trial_index, cycle, 1);

        // First cycle reads the prepared state with no prior relaxation.
        if (cycle > 0 && x == QubitState::Up && !std::isinf(cfg.t1_logical)) {
            const double survive = std::exp(-cfg.dt_rep / cfg.t1_logical);
            if (std::uniform_real_distribution<double>(0.0, 1.0)(events_rng) >= survive)
                x = QubitState::Down;
        }
        record.hidden_states.push_back(x);

        int ancilla = bit_of(x);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        if (uni(events_rng) < cfg.p_crot_flip) ancilla ^= 1;
        if (uni(events_rng) < cfg.p_ancilla_init) ancilla ^= 1;
        const QubitState ancilla_state = state_from_bit(ancilla);
        record.ancilla_bits.push_back(ancilla_state);

        record.traces.push_back(sample_ancilla_trace(ancilla_state, cfg, trace_rng));
    }
    return record;
}

// Adds i.i.d. N(0, sigma_extra^2) to each sample; input left unmodified.
inline Trace add_gaussian_noise(const Trace& trace, double sigma_extra, std::mt19937_64& rng) {
    if (!(sigma_extra >= 0.0)) throw std::invalid_argument("add_gaussian_noise: sigma_extra < 0");
    Trace out = trace;
    if (sigma_extra == 0.0) return out;
    std::normal_distribution<double> noise(0.0, sigma_extra);
    for (double& s : out.samples) s += noise(rng);
    return out;
}

}  // namespace qnd
