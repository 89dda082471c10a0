#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

namespace qnd {

// Logical/ancilla qubit state. 1 is spin-up, 0 is spin-down.
enum class QubitState : std::uint8_t { Down = 0, Up = 1 };

// All 2-vectors and 2x2 matrices in this library are indexed in the
// fixed basis order (1, 0): index 0 <-> state 1, index 1 <-> state 0.
inline constexpr std::size_t basis_index(QubitState s) {
    return s == QubitState::Up ? 0 : 1;
}

inline constexpr QubitState state_from_bit(int bit) {
    if (bit != 0 && bit != 1) throw std::invalid_argument("bit must be 0 or 1");
    return bit == 1 ? QubitState::Up : QubitState::Down;
}

inline constexpr int bit_of(QubitState s) { return s == QubitState::Up ? 1 : 0; }

using Vec2 = std::array<double, 2>;

// mat[to][from], column-stochastic in the (1, 0) basis.
using Mat2 = std::array<std::array<double, 2>, 2>;

inline constexpr Mat2 identity2() { return {{{1.0, 0.0}, {0.0, 1.0}}}; }

inline Vec2 mat_vec(const Mat2& m, const Vec2& v) {
    return {m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]};
}

inline Mat2 mat_mat(const Mat2& a, const Mat2& b) {
    Mat2 c{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
    return c;
}

}  // namespace qnd
