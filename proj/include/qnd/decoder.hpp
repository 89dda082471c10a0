#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "qnd/observation.hpp"
#include "qnd/transition.hpp"
#include "qnd/types.hpp"

namespace qnd {

// Normalized belief over the logical state plus the accumulated
// log-likelihood of the observations so far.
struct BeliefState {
    Vec2 rho{1.0, 0.0};
    double log_likelihood = 0.0;
    std::size_t cycle_index = 0;
};

// One forward-filter update with the combined matrix v[x][y] = w[x][y] * P(o|y).
// Throws when the propagated belief is identically zero (degenerate model).
inline BeliefState forward_step(const BeliefState& belief, const Mat2& v) {
    const Vec2 unnormalized = mat_vec(v, belief.rho);
    const double norm = unnormalized[0] + unnormalized[1];
    if (!(norm > 0.0))
        throw std::domain_error("forward_step: zero propagated belief (degenerate observation model)");
    return BeliefState{{unnormalized[0] / norm, unnormalized[1] / norm},
                       belief.log_likelihood + std::log(norm),
                       belief.cycle_index + 1};
}

struct DecodeResult {
    double lambda_log = 0.0;
    QubitState decision = QubitState::Down;
    // Filter trajectories for the two delta-prior hypotheses x0 = 1 and x0 = 0.
    std::vector<BeliefState> trajectory_given_up;
    std::vector<BeliefState> trajectory_given_down;
    // Cumulative lambda^log after each cycle.
    std::vector<double> per_cycle_lambda;
};

inline QubitState decision_from_lambda(double lambda_log) {
    // Ties decide 0.
    return lambda_log > 0.0 ? QubitState::Up : QubitState::Down;
}

namespace detail {

// A filter hypothesis whose belief mass has vanished (possible with
// eps = 0 channels) stays dead; decode reports a clamped lambda instead
// of -inf.
struct Filter {
    BeliefState belief;
    bool alive = true;

    void step(const Mat2& v) {
        if (!alive) return;
        const Vec2 unnormalized = mat_vec(v, belief.rho);
        const double norm = unnormalized[0] + unnormalized[1];
        if (!(norm > 0.0)) {
            alive = false;
            belief.cycle_index += 1;
            return;
        }
        belief = BeliefState{{unnormalized[0] / norm, unnormalized[1] / norm},
                             belief.log_likelihood + std::log(norm),
                             belief.cycle_index + 1};
    }
};

inline double clamped_log_ratio(double num, double den, double clamp) {
    if (num <= 0.0 && den <= 0.0) return 0.0;
    if (den <= 0.0) return clamp;
    if (num <= 0.0) return -clamp;
    return std::clamp(std::log(num / den), -clamp, clamp);
}

}  // namespace detail

// Maximum-likelihood inference of the pre-measurement logical state.
// Runs two forward filters with delta initial beliefs and reports
// lambda^log = ln L(x0=1) - ln L(x0=0) + ln(prior1/prior0).
inline DecodeResult decode(const ReadoutRecord& record, const ObservationModel& model,
                           double t1, Vec2 priors = {0.5, 0.5}) {
    if (record.kind != model.kind)
        throw std::invalid_argument("decode: record kind does not match observation model kind");
    if (std::abs(priors[0] + priors[1] - 1.0) > 1e-9)
        throw std::invalid_argument("decode: priors must sum to 1");

    const double clamp = model.llr_clamp;
    const double prior_offset = detail::clamped_log_ratio(priors[0], priors[1], clamp);
    const TransitionMatrix w = relaxation_transition(record.cycle_duration_s, t1);

    detail::Filter given_up{BeliefState{{1.0, 0.0}, 0.0, 0}};
    detail::Filter given_down{BeliefState{{0.0, 1.0}, 0.0, 0}};

    DecodeResult result;
    result.per_cycle_lambda.reserve(record.observations.size());

    for (std::size_t k = 0; k < record.observations.size(); ++k) {
        const Vec2 p = observation_vector(model, record.observations[k]);
        // Emission from the current state, then relaxation into the next
        // cycle; the first cycle therefore reads x0 directly, and the
        // trailing transition cannot change the likelihood (w is
        // column-stochastic).
        Mat2 v{};
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y) v[x][y] = w.w[x][y] * p[y];

        given_up.step(v);
        given_down.step(v);
        result.trajectory_given_up.push_back(given_up.belief);
        result.trajectory_given_down.push_back(given_down.belief);

        double lambda;
        if (given_up.alive && given_down.alive) {
            lambda = given_up.belief.log_likelihood - given_down.belief.log_likelihood +
                     prior_offset;
        } else if (given_up.alive) {
            lambda = clamp;
        } else if (given_down.alive) {
            lambda = -clamp;
        } else {
            lambda = 0.0;
        }
        result.per_cycle_lambda.push_back(lambda);
    }

    result.lambda_log = record.observations.empty() ? prior_offset : result.per_cycle_lambda.back();
    result.decision = decision_from_lambda(result.lambda_log);
    return result;
}

// Unweighted majority vote over hard bits; ties decide 0.
inline QubitState majority_vote(const std::vector<int>& bits) {
    if (bits.empty()) throw std::invalid_argument("majority_vote: empty sequence");
    long ones = 0;
    for (int b : bits) {
        if (b != 0 && b != 1) throw std::invalid_argument("majority_vote: bits must be 0 or 1");
        ones += b;
    }
    const long zeros = static_cast<long>(bits.size()) - ones;
    return ones > zeros ? QubitState::Up : QubitState::Down;
}

}  // namespace qnd
