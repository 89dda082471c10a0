#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "qnd/decoder.hpp"
#include "qnd/path_sum.hpp"

using namespace qnd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ObservationModel two_plateau_model(double pseudo = 0.0) {
    // lambda(o) is a step function: ratio p1/p0 constant on each side of 0.5.
    EmpiricalDistribution d1(0.0, 1.0, 10, pseudo), d0(0.0, 1.0, 10, pseudo);
    for (std::size_t i = 0; i < 10; ++i) {
        const bool high = i >= 5;
        for (int c = 0; c < (high ? 9 : 1); ++c) d1.add((i + 0.5) / 10.0);
        for (int c = 0; c < (high ? 1 : 9); ++c) d0.add((i + 0.5) / 10.0);
    }
    return ObservationModel::empirical(std::move(d1), std::move(d0));
}

ReadoutRecord binary_record(std::vector<double> bits, double dt = 0.003263) {
    return ReadoutRecord{ObservationKind::Binary, std::move(bits), dt};
}

}  // namespace

TEST_CASE("observation vector for binary channels") {
    const auto sym = ObservationModel::binary(0.25, 0.25);
    const Vec2 v1 = observation_vector(sym, 1.0);
    CHECK(v1[0] == 0.75);
    CHECK(v1[1] == 0.25);

    const auto asym = ObservationModel::binary(0.329, 0.162);
    const Vec2 v0 = observation_vector(asym, 0.0);
    CHECK(v0[0] == Catch::Approx(0.329).margin(1e-15));
    CHECK(v0[1] == Catch::Approx(0.838).margin(1e-15));

    CHECK_THROWS_AS(observation_vector(sym, 0.5), std::invalid_argument);
}

TEST_CASE("identical empirical histograms give an uninformative vector") {
    EmpiricalDistribution d1(0.0, 1.0, 8, 0.5), d0(0.0, 1.0, 8, 0.5);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int i = 0; i < 500; ++i) {
        const double v = uni(rng);
        d1.add(v);
        d0.add(v);
    }
    const auto model = ObservationModel::empirical(d1, d0);
    for (double o : {-1.0, 0.1, 0.5, 0.93, 2.0}) {
        const Vec2 v = observation_vector(model, o);
        CHECK(v[0] == v[1]);
        CHECK(v[0] > 0.0);
        CHECK(single_cycle_llr(model, o) == 0.0);
    }
}

TEST_CASE("forward_step hand-evaluated examples") {
    const BeliefState start{{1.0, 0.0}, 0.0, 0};

    SECTION("identity step") {
        const auto next = forward_step(start, identity2());
        CHECK(next.rho[0] == 1.0);
        CHECK(next.rho[1] == 0.0);
        CHECK(next.log_likelihood == 0.0);
        CHECK(next.cycle_index == 1);
    }
    SECTION("diagonal observation step") {
        const Mat2 v{{{0.75, 0.0}, {0.0, 0.25}}};
        const auto next = forward_step(start, v);
        CHECK(next.rho[0] == 1.0);
        CHECK(next.rho[1] == 0.0);
        CHECK(next.log_likelihood == Catch::Approx(std::log(0.75)).margin(1e-15));
    }
    SECTION("Bayes update from a uniform belief") {
        const BeliefState uniform{{0.5, 0.5}, 0.0, 0};
        const Mat2 v{{{0.75, 0.0}, {0.0, 0.25}}};  // w = identity, P = (0.75, 0.25)
        const auto next = forward_step(uniform, v);
        CHECK(next.rho[0] == Catch::Approx(0.75).margin(1e-15));
        CHECK(next.rho[1] == Catch::Approx(0.25).margin(1e-15));
        CHECK(next.log_likelihood == Catch::Approx(std::log(0.5)).margin(1e-15));
    }
    SECTION("zero propagated belief throws") {
        const BeliefState dead{{0.0, 1.0}, 0.0, 0};
        const Mat2 v{{{1.0, 0.0}, {0.0, 0.0}}};
        CHECK_THROWS_AS(forward_step(dead, v), std::domain_error);
    }
}

TEST_CASE("brute-force path sum, frozen hand values") {
    const auto model = ObservationModel::binary(0.3, 0.1);

    CHECK(brute_force_likelihood(binary_record({}), model, 1.8, QubitState::Up) == 1.0);

    const auto single = ObservationModel::binary(0.25, 0.25);
    CHECK(brute_force_likelihood(binary_record({1.0}), single, kInf, QubitState::Up) ==
          Catch::Approx(0.75).margin(1e-15));

    // N=2, outcomes (1,1), x0 = 1: first cycle factor 0.7, then either
    // survive (prob s, emit 0.7) or decay (prob 1-s, emit 0.1).
    const double s = std::exp(-0.003263 / 1.8);
    const double expected = 0.7 * (s * 0.7 + (1.0 - s) * 0.1);
    CHECK(brute_force_likelihood(binary_record({1.0, 1.0}), model, 1.8, QubitState::Up) ==
          Catch::Approx(expected).margin(1e-15));
}

TEST_CASE("decode: trivial and hand-evaluated cases") {
    const auto sym = ObservationModel::binary(0.25, 0.25);

    SECTION("empty record ties to 0") {
        const auto result = decode(binary_record({}), sym, kInf);
        CHECK(result.lambda_log == 0.0);
        CHECK(result.decision == QubitState::Down);
    }
    SECTION("single outcome 1 gives lambda = ln 3") {
        const auto result = decode(binary_record({1.0}), sym, kInf);
        CHECK(result.lambda_log == Catch::Approx(std::log(3.0)).margin(1e-12));
        CHECK(result.decision == QubitState::Up);
    }
    SECTION("three-cycle record matches the path-sum oracle") {
        const auto model = ObservationModel::binary(0.329, 0.162);
        const auto record = binary_record({1.0, 0.0, 1.0});
        const auto result = decode(record, model, 1.8);
        const double l1 = brute_force_likelihood(record, model, 1.8, QubitState::Up);
        const double l0 = brute_force_likelihood(record, model, 1.8, QubitState::Down);
        CHECK(result.lambda_log ==
              Catch::Approx(std::log(l1 / l0)).epsilon(1e-10));
    }
    SECTION("priors shift lambda by the log prior ratio") {
        const auto result = decode(binary_record({1.0}), sym, kInf, {0.25, 0.75});
        CHECK(result.lambda_log ==
              Catch::Approx(std::log(3.0) + std::log(0.25 / 0.75)).margin(1e-12));
    }
    SECTION("eps = 0 channel stays finite via clamping") {
        const auto hard0 = ObservationModel::binary(0.0, 0.0);
        const auto result = decode(binary_record({1.0, 1.0}), hard0, kInf);
        CHECK(result.lambda_log == hard0.llr_clamp);
        CHECK(std::isfinite(result.lambda_log));
        CHECK(result.decision == QubitState::Up);
        const auto contradictory = decode(binary_record({1.0, 0.0}), hard0, kInf);
        CHECK(contradictory.lambda_log == 0.0);
        CHECK(contradictory.decision == QubitState::Down);
    }
}

TEST_CASE("path-sum equivalence on random records") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::uniform_int_distribution<int> len(0, 10);

    const auto empirical = two_plateau_model(0.5);

    for (int rep = 0; rep < 400; ++rep) {
        const bool use_empirical = rep % 2 == 1;
        const bool finite_t1 = rep % 3 != 0;
        const double t1 = finite_t1 ? 0.05 + 3.0 * uni(rng) : kInf;
        const double eps1 = 0.01 + 0.45 * uni(rng);
        const double eps0 = 0.01 + 0.45 * uni(rng);
        const auto model = use_empirical ? empirical : ObservationModel::binary(eps1, eps0);

        ReadoutRecord record;
        record.kind = use_empirical ? ObservationKind::Peak : ObservationKind::Binary;
        record.cycle_duration_s = 0.003263;
        const int n = len(rng);
        for (int k = 0; k < n; ++k)
            record.observations.push_back(use_empirical ? uni(rng)
                                                         : (uni(rng) < 0.5 ? 0.0 : 1.0));

        for (QubitState x0 : {QubitState::Up, QubitState::Down}) {
            BeliefState belief;
            belief.rho = x0 == QubitState::Up ? Vec2{1.0, 0.0} : Vec2{0.0, 1.0};
            const auto w = relaxation_transition(record.cycle_duration_s, t1).w;
            for (std::size_t k = 0; k < record.observations.size(); ++k) {
                const Vec2 p = observation_vector(model, record.observations[k]);
                Mat2 v{};
                for (int x = 0; x < 2; ++x)
                    for (int y = 0; y < 2; ++y) v[x][y] = w[x][y] * p[y];
                belief = forward_step(belief, v);
                REQUIRE(std::abs(belief.rho[0] + belief.rho[1] - 1.0) <= 1e-12);
                REQUIRE(belief.rho[0] >= 0.0);
                REQUIRE(belief.rho[1] >= 0.0);
                REQUIRE(std::isfinite(belief.log_likelihood));
            }
            const double filtered = std::exp(belief.log_likelihood);
            const double exact = brute_force_likelihood(record, model, t1, x0);
            REQUIRE(std::abs(filtered - exact) <= 1e-10 * std::max(exact, 1e-300));
        }
    }
}

TEST_CASE("scaling each step matrix leaves lambda unchanged") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(0.01, 1.0);
    const auto model = ObservationModel::binary(0.3, 0.12);
    const auto w = relaxation_transition(0.003263, 1.8).w;

    BeliefState up{{1.0, 0.0}, 0.0, 0}, down{{0.0, 1.0}, 0.0, 0};
    BeliefState up_scaled = up, down_scaled = down;
    for (int k = 0; k < 12; ++k) {
        const double outcome = k % 2 == 0 ? 1.0 : 0.0;
        const Vec2 p = observation_vector(model, outcome);
        Mat2 v{}, scaled{};
        const double c = 0.1 + 5.0 * uni(rng);
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y) {
                v[x][y] = w[x][y] * p[y];
                scaled[x][y] = c * v[x][y];
            }
        up = forward_step(up, v);
        down = forward_step(down, v);
        up_scaled = forward_step(up_scaled, scaled);
        down_scaled = forward_step(down_scaled, scaled);

        const double lambda = up.log_likelihood - down.log_likelihood;
        const double lambda_scaled = up_scaled.log_likelihood - down_scaled.log_likelihood;
        REQUIRE(std::abs(lambda - lambda_scaled) <= 1e-12);
    }
}

TEST_CASE("LLR additivity with identity transitions") {
    const auto model = ObservationModel::binary(0.329, 0.162);
    const auto record = binary_record({1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0});
    const auto result = decode(record, model, kInf);
    double sum = 0.0;
    std::size_t k = 0;
    for (double o : record.observations) {
        sum += single_cycle_llr(model, o);
        CHECK(result.per_cycle_lambda[k] == Catch::Approx(sum).margin(1e-12));
        ++k;
    }
    CHECK(result.lambda_log == Catch::Approx(sum).margin(1e-12));
}

TEST_CASE("symmetric-eps channel reduces to counting") {
    const double eps = 0.25;
    const auto model = ObservationModel::binary(eps, eps);
    const double weight = std::log((1.0 - eps) / eps);

    for (int n : {1, 3, 5, 7, 9, 11}) {
        for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
            ReadoutRecord record = binary_record({});
            int ones = 0;
            std::vector<int> bits;
            for (int k = 0; k < n; ++k) {
                const int bit = (mask >> k) & 1u;
                ones += bit;
                bits.push_back(bit);
                record.observations.push_back(bit);
            }
            const auto result = decode(record, model, kInf);
            const double expected = (2 * ones - n) * weight;
            REQUIRE(std::abs(result.lambda_log - expected) <= 1e-10);
            REQUIRE(result.decision == majority_vote(bits));
        }
    }
}

TEST_CASE("majority vote basics") {
    CHECK(majority_vote({1, 1, 0}) == QubitState::Up);
    CHECK(majority_vote({0, 0, 1, 1}) == QubitState::Down);  // tie -> 0
    CHECK(majority_vote({0}) == QubitState::Down);
    CHECK_THROWS_AS(majority_vote({}), std::invalid_argument);
}

TEST_CASE("step-function lambda makes soft and hard decoding agree") {
    const auto soft = two_plateau_model(0.0);
    // Hard channel with the same per-cycle error rates as the plateaus.
    const auto hard = ObservationModel::binary(0.1, 0.1);

    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int rep = 0; rep < 300; ++rep) {
        const double t1 = rep % 2 == 0 ? kInf : 1.8;
        ReadoutRecord peaks{ObservationKind::Peak, {}, 0.003263};
        ReadoutRecord bits{ObservationKind::Binary, {}, 0.003263};
        const int n = 1 + static_cast<int>(uni(rng) * 12);
        for (int k = 0; k < n; ++k) {
            const double o = uni(rng);
            peaks.observations.push_back(o);
            bits.observations.push_back(o >= 0.5 ? 1.0 : 0.0);
        }
        const auto soft_result = decode(peaks, soft, t1);
        const auto hard_result = decode(bits, hard, t1);
        // Exact ties land within rounding noise of zero under either
        // model; the decision there is not meaningful to compare.
        if (std::abs(hard_result.lambda_log) < 1e-9) continue;
        REQUIRE(soft_result.decision == hard_result.decision);
    }
}
