#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "qnd/histogram.hpp"
#include "qnd/types.hpp"

namespace qnd {

enum class ObservationKind { Binary, Peak };

// Per-cycle observation statistics: either a binary channel given by the
// conditional single-repetition error rates (eps1, eps0), or empirical
// peak-signal histograms per state.
struct ObservationModel {
    ObservationKind kind = ObservationKind::Binary;

    // Binary channel.
    double eps1 = 0.0;  // P(outcome 0 | state 1)
    double eps0 = 0.0;  // P(outcome 1 | state 0)

    // Empirical channel, shared bin edges.
    EmpiricalDistribution dist1;
    EmpiricalDistribution dist0;
    double llr_clamp = 50.0;

    static ObservationModel binary(double eps1, double eps0) {
        if (!(eps1 >= 0.0 && eps1 < 0.5) || !(eps0 >= 0.0 && eps0 < 0.5))
            throw std::invalid_argument("binary model: eps must lie in [0, 0.5)");
        ObservationModel m;
        m.kind = ObservationKind::Binary;
        m.eps1 = eps1;
        m.eps0 = eps0;
        return m;
    }

    static ObservationModel empirical(EmpiricalDistribution dist1, EmpiricalDistribution dist0,
                                      double llr_clamp = 50.0) {
        if (!dist1.same_edges(dist0))
            throw std::invalid_argument("empirical model: histograms must share bin edges");
        if (!(llr_clamp > 0.0)) throw std::invalid_argument("empirical model: llr_clamp must be > 0");
        ObservationModel m;
        m.kind = ObservationKind::Peak;
        m.dist1 = std::move(dist1);
        m.dist0 = std::move(dist0);
        m.llr_clamp = llr_clamp;
        return m;
    }
};

// (P(o | 1), P(o | 0)) in the (1, 0) basis. For binary models `o` must be
// exactly 0 or 1; for empirical models any real peak signal is accepted.
inline Vec2 observation_vector(const ObservationModel& model, double o) {
    if (model.kind == ObservationKind::Binary) {
        if (o != 0.0 && o != 1.0)
            throw std::invalid_argument("observation_vector: binary model expects outcome 0 or 1");
        if (o == 1.0) return {1.0 - model.eps1, model.eps0};
        return {model.eps1, 1.0 - model.eps0};
    }
    return {model.dist1.probability(o), model.dist0.probability(o)};
}

// Single-cycle log-likelihood ratio lambda(o) = ln P(o|1)/P(o|0), clamped.
inline double single_cycle_llr(const ObservationModel& model, double o) {
    const Vec2 p = observation_vector(model, o);
    const double clamp = model.llr_clamp;
    if (p[0] <= 0.0 && p[1] <= 0.0) return 0.0;
    if (p[1] <= 0.0) return clamp;
    if (p[0] <= 0.0) return -clamp;
    const double llr = std::log(p[0] / p[1]);
    return std::clamp(llr, -clamp, clamp);
}

// One readout run: per-cycle observations (all binary or all peak
// signals) plus the cycle period.
struct ReadoutRecord {
    ObservationKind kind = ObservationKind::Binary;
    std::vector<double> observations;
    double cycle_duration_s = 0.0;
};

}  // namespace qnd
