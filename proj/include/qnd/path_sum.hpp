#pragma once

#include <cstddef>
#include <stdexcept>

#include "qnd/decoder.hpp"
#include "qnd/observation.hpp"
#include "qnd/transition.hpp"

namespace qnd {

// Exact likelihood P(O | x0) by explicit enumeration of all 2^N hidden
// state paths. Exponential-time oracle for the forward filter; N <= 20.
// Uses the same cycle convention as decode(): the first cycle reads x0
// directly, relaxation over one cycle period precedes each later cycle.
inline double brute_force_likelihood(const ReadoutRecord& record, const ObservationModel& model,
                                     double t1, QubitState x0) {
    const std::size_t n = record.observations.size();
    if (n > 20) throw std::invalid_argument("brute_force_likelihood: record too long (N > 20)");
    if (n == 0) return 1.0;
    if (record.kind != model.kind)
        throw std::invalid_argument("brute_force_likelihood: record/model kind mismatch");

    const TransitionMatrix w = relaxation_transition(record.cycle_duration_s, t1);

    double total = 0.0;
    for (std::uint64_t path = 0; path < (std::uint64_t{1} << n); ++path) {
        double prob = 1.0;
        std::size_t prev = basis_index(x0);
        for (std::size_t k = 0; k < n; ++k) {
            // Bit k of `path` selects the state at cycle k+1 (0 -> up in
            // the (1, 0) basis).
            const std::size_t cur = (path >> k) & 1u;
            if (k == 0) {
                if (cur != prev) {
                    prob = 0.0;
                    break;
                }
            } else {
                prob *= w.w[cur][prev];
            }
            const Vec2 p = observation_vector(model, record.observations[k]);
            prob *= p[cur];
            prev = cur;
        }
        total += prob;
    }
    return total;
}

}  // namespace qnd
