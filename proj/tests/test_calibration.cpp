#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "qnd/calibration.hpp"

using namespace qnd;

namespace {

Trace constant_trace(double level, std::size_t n = 8, double dt = 16.38e-6) {
    return Trace{std::vector<double>(n, level), dt};
}

EmpiricalDistribution from_counts(std::vector<std::uint64_t> counts, double pseudo) {
    EmpiricalDistribution dist(0.0, static_cast<double>(counts.size()), counts.size(), pseudo);
    dist.set_counts(std::move(counts));
    return dist;
}

}  // namespace

TEST_CASE("peak signal is a prefix max") {
    const Trace trace{{0.1, 0.5, 0.3}, 1.0};
    CHECK(peak_signal(trace, 3.0) == 0.5);
    CHECK(peak_signal(trace, 1.0) == 0.1);
    CHECK_THROWS_AS(peak_signal(trace, 0.5), std::invalid_argument);
}

TEST_CASE("peak signal is non-decreasing in the readout time") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        Trace trace{{}, 1.0};
        for (int i = 0; i < 20; ++i) trace.samples.push_back(uni(rng));
        double previous = -std::numeric_limits<double>::infinity();
        for (int n = 1; n <= 20; ++n) {
            const double peak = peak_signal(trace, static_cast<double>(n));
            REQUIRE(peak >= previous);
            previous = peak;
        }
    }
}

TEST_CASE("binomial stderr") {
    CHECK(binomial_stderr(0.5, 10000) == Catch::Approx(0.005).margin(1e-15));
    CHECK(binomial_stderr(0.329, 10000) == Catch::Approx(0.0047).margin(2e-4));
    CHECK(binomial_stderr(0.0, 123) == 0.0);
    CHECK_THROWS_AS(binomial_stderr(0.5, 0), std::invalid_argument);
}

TEST_CASE("identical peak sets give lambda = 0 and (eps1, eps0) = (1, 0)") {
    std::vector<double> peaks{0.1, 0.2, 0.2, 0.7, 0.9};
    auto [d1, d0] = build_distributions(peaks, peaks, 10, 0.5);
    const auto table = llr_table(d1, d0, 50.0);
    for (double llr : table) CHECK(llr == 0.0);

    const auto errors = single_rep_errors(d1, d0);
    CHECK(errors.eps1 == 1.0);  // lambda = 0 everywhere decides 0
    CHECK(errors.eps0 == 0.0);
    CHECK(errors.eps_avg == 0.5);
}

TEST_CASE("separated supports give clamped lambda and vanishing raw errors") {
    std::vector<double> peaks1(100, 1.0), peaks0(100, 0.0);
    auto [d1, d0] = build_distributions(peaks1, peaks0, 10, 0.5);
    const auto table = llr_table(d1, d0, 50.0);
    CHECK(table.front() < 0.0);
    CHECK(table.back() > 0.0);

    const auto errors = single_rep_errors(d1, d0);
    CHECK(errors.eps1 == 0.0);
    CHECK(errors.eps0 == 0.0);

    // With zero smoothing the empty-bin ratios hit the clamp.
    auto [r1, r0] = build_distributions(peaks1, peaks0, 10, 0.0);
    const auto raw_table = llr_table(r1, r0, 50.0);
    CHECK(raw_table.front() == -50.0);
    CHECK(raw_table.back() == 50.0);
}

TEST_CASE("hand-built 4-bin histograms, frozen error sums") {
    // Counts chosen before the build; with pseudo_count 0.5 the lambda
    // signs are (-, -, +, +), so eps1 = 3/10 and eps0 = 2/10.
    const auto d1 = from_counts({1, 2, 4, 3}, 0.5);
    const auto d0 = from_counts({5, 3, 1, 1}, 0.5);
    const auto errors = single_rep_errors(d1, d0);
    CHECK(errors.eps1 == Catch::Approx(0.3).margin(1e-15));
    CHECK(errors.eps0 == Catch::Approx(0.2).margin(1e-15));
    CHECK(errors.eps_avg == Catch::Approx(0.25).margin(1e-15));
}

TEST_CASE("smoothed probabilities sum to 1 and lambda is bounded") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss(0.5, 0.2);
    EmpiricalDistribution dist(0.0, 1.0, 60, 0.5);
    for (int i = 0; i < 5000; ++i) dist.add(gauss(rng));
    double sum = 0.0;
    for (std::size_t i = 0; i < dist.n_bins(); ++i) sum += dist.bin_probability(i);
    CHECK(sum == Catch::Approx(1.0).margin(1e-12));

    const auto table = llr_table(dist, dist, 7.0);
    for (double llr : table) {
        CHECK(llr <= 7.0);
        CHECK(llr >= -7.0);
    }
}

TEST_CASE("marginal error rates equal trace-by-trace misclassification") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> g1(0.8, 0.35), g0(0.2, 0.3);
    std::vector<double> peaks1, peaks0;
    for (int i = 0; i < 4000; ++i) {
        peaks1.push_back(g1(rng));
        peaks0.push_back(g0(rng));
    }
    auto [d1, d0] = build_distributions(peaks1, peaks0, 60, 0.5);
    const auto table = llr_table(d1, d0, 50.0);
    const auto errors = single_rep_errors(d1, d0);

    double miss1 = 0.0, miss0 = 0.0;
    for (double p : peaks1)
        if (table[d1.bin_index(p)] <= 0.0) miss1 += 1.0;
    for (double p : peaks0)
        if (table[d0.bin_index(p)] > 0.0) miss0 += 1.0;
    miss1 /= static_cast<double>(peaks1.size());
    miss0 /= static_cast<double>(peaks0.size());

    CHECK(errors.eps1 == miss1);
    CHECK(errors.eps0 == miss0);
}

TEST_CASE("lambda crosses zero at most once on Gaussian-dominated data") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> g1(1.0, 0.3), g0(0.0, 0.3);
    std::vector<double> peaks1, peaks0;
    for (int i = 0; i < 20000; ++i) {
        peaks1.push_back(g1(rng));
        peaks0.push_back(g0(rng));
    }
    auto [d1, d0] = build_distributions(peaks1, peaks0, 60, 0.5);
    const auto table = llr_table(d1, d0, 50.0);

    int sign_changes = 0;
    int previous = 0;
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (d1.counts()[i] + d0.counts()[i] < 20) continue;
        const int sign = table[i] > 0.0 ? 1 : -1;
        if (previous != 0 && sign != previous) ++sign_changes;
        previous = sign;
    }
    CHECK(sign_changes <= 1);
}

TEST_CASE("optimize_readout_time on noiseless separated traces") {
    // Label 1 steps up immediately, label 0 stays low; every readout time
    // separates perfectly, so the tie-break picks the smallest t_r.
    std::vector<Trace> traces1(50, constant_trace(1.0)), traces0(50, constant_trace(0.0));
    const auto grid = default_t_r_grid(16.38e-6, 8 * 16.38e-6);
    const auto result = optimize_readout_time(traces1, traces0, grid, 20, 0.5);
    CHECK(result.eps1 == 0.0);
    CHECK(result.eps0 == 0.0);
    CHECK(result.t_r_opt == grid.front());
    REQUIRE(result.threshold_equivalent.has_value());
    CHECK(*result.threshold_equivalent > 0.0);
    CHECK(*result.threshold_equivalent < 1.0);
}

TEST_CASE("sweep size matches the grid and empty grid is rejected") {
    std::vector<Trace> traces1(10, constant_trace(1.0)), traces0(10, constant_trace(0.0));
    const auto grid = default_t_r_grid(16.38e-6, 8 * 16.38e-6);
    CHECK(grid.size() == 8);
    const auto sweep = sweep_readout_times(traces1, traces0, grid, 10, 0.5);
    CHECK(sweep.size() == grid.size());
    CHECK_THROWS_AS(sweep_readout_times(traces1, traces0, std::vector<double>{}, 10, 0.5),
                    std::invalid_argument);
}

TEST_CASE("calibration is invariant under shared affine rescaling") {
    std::mt19937_64 rng(41);
    std::normal_distribution<double> g1(0.9, 0.25), g0(0.1, 0.25);
    std::vector<Trace> traces1, traces0;
    for (int i = 0; i < 500; ++i) {
        Trace t1{{}, 1.0}, t0{{}, 1.0};
        for (int s = 0; s < 6; ++s) {
            t1.samples.push_back(g1(rng));
            t0.samples.push_back(g0(rng));
        }
        traces1.push_back(std::move(t1));
        traces0.push_back(std::move(t0));
    }

    auto rescale = [](std::vector<Trace> traces, double scale, double offset) {
        for (auto& trace : traces)
            for (auto& s : trace.samples) s = scale * s + offset;
        return traces;
    };

    const auto grid = default_t_r_grid(1.0, 6.0);
    const auto base = optimize_readout_time(traces1, traces0, grid, 40, 0.5);
    const auto scaled = optimize_readout_time(rescale(traces1, 3.5, -2.0),
                                              rescale(traces0, 3.5, -2.0), grid, 40, 0.5);
    CHECK(base.eps1 == scaled.eps1);
    CHECK(base.eps0 == scaled.eps0);
    CHECK(base.t_r_opt == scaled.t_r_opt);
}

TEST_CASE("empty trace sets are rejected") {
    std::vector<double> peaks{0.5};
    std::vector<double> empty;
    CHECK_THROWS_AS(build_distributions(empty, peaks, 10, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(build_distributions(peaks, empty, 10, 0.5), std::invalid_argument);
}
