#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "qnd/types.hpp"

namespace qnd {

// Column-stochastic transition matrix w[x][y] = P(x_{k+1} = x | x_k = y)
// in the (1, 0) basis.
struct TransitionMatrix {
    Mat2 w;

    double survival_up() const { return w[0][0]; }
};

// One-cycle relaxation channel: exp(G * dt / t1) for the 2x2 relaxation
// generator, evaluated in closed form. Excitation is absent, so state 0
// is absorbing. t1 may be +infinity (no relaxation).
inline TransitionMatrix relaxation_transition(double dt, double t1) {
    if (!(dt >= 0.0)) throw std::invalid_argument("relaxation_transition: dt must be >= 0");
    const bool infinite_t1 = std::isinf(t1) && t1 > 0.0;
    if (!infinite_t1 && !(t1 > 0.0))
        throw std::invalid_argument("relaxation_transition: t1 must be positive or +inf");

    const double survive = infinite_t1 ? 1.0 : std::exp(-dt / t1);
    return TransitionMatrix{{{{survive, 0.0}, {1.0 - survive, 1.0}}}};
}

}  // namespace qnd
