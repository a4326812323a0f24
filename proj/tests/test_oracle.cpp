#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "sqz/oracle.hpp"
#include "sqz/spectra.hpp"

using namespace sqz;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("philox4x32-10 known-answer vectors") {
    // Random123 kat_vectors, "philox4x32 10"
    const auto zero = Philox4x32::block({0, 0, 0, 0}, {0, 0});
    REQUIRE(zero == std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu,
                                                 0x9b00dbd8u});

    const auto ones = Philox4x32::block(
        {0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
        {0xffffffffu, 0xffffffffu});
    REQUIRE(ones == std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u,
                                                 0x6d5451fdu});

    const auto pi_digits = Philox4x32::block(
        {0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
        {0xa4093822u, 0x299f31d0u});
    REQUIRE(pi_digits == std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu,
                                                      0x5001e420u, 0x24126ea1u});
}

TEST_CASE("counter rng draws are addressable and in range") {
    const CounterRng rng(42, 7);
    const auto a = rng.uniform_pair(0);
    const auto b = rng.uniform_pair(1);
    REQUIRE(a != b);
    REQUIRE(a == rng.uniform_pair(0));
    for (double u : {a[0], a[1], b[0], b[1]}) {
        REQUIRE(u > 0.0);
        REQUIRE(u <= 1.0);
    }
    // different streams decorrelate
    REQUIRE(CounterRng(42, 8).uniform_pair(0) != a);
    REQUIRE(CounterRng(43, 7).uniform_pair(0) != a);
}

TEST_CASE("sampling is deterministic and thread-count invariant") {
    std::mt19937_64 state_rng(3);
    const TwoModeState state = test::random_physical_state(state_rng);

    SampleConfig config;
    config.sample_count = 50'000;
    config.seed = 12345;

    const EmpiricalStokes once = sample_stokes(state, 0, config);
    const EmpiricalStokes again = sample_stokes(state, 0, config);
    REQUIRE(once.means == again.means);
    REQUIRE(once.variances == again.variances);

    config.threads = 4;
    const EmpiricalStokes parallel = sample_stokes(state, 0, config);
    REQUIRE(once.means == parallel.means);
    REQUIRE(once.variances == parallel.variances);

    config.threads = 1;
    config.seed = 54321;
    const EmpiricalStokes reseeded = sample_stokes(state, 0, config);
    REQUIRE(once.variances != reseeded.variances);
}

TEST_CASE("config limits") {
    SampleConfig config;
    config.sample_count = 100;
    const TwoModeState state =
        make_single_frequency_state(1.0, 1.0, 0.0, {1, 1}, {1, 1});
    REQUIRE_THROWS_AS(sample_stokes(state, 0, config), std::invalid_argument);
    config.sample_count = 200'000'000;
    REQUIRE_THROWS_AS(sample_stokes(state, 0, config), std::invalid_argument);
    config.sample_count = 10'000;
    config.threads = 0;
    REQUIRE_THROWS_AS(sample_stokes(state, 0, config), std::invalid_argument);
}

TEST_CASE("coherent beam converges to shot noise in all four parameters") {
    const TwoModeState state = make_single_frequency_state(
        10.0 / std::sqrt(2.0), 10.0 / std::sqrt(2.0), kPi / 2.0, {1, 1}, {1, 1});
    SampleConfig config;
    config.sample_count = 1'000'000;
    config.seed = 2024;
    const EmpiricalStokes mc = sample_stokes(state, 0, config);
    for (std::size_t j = 0; j < 4; ++j) {
        REQUIRE_THAT(mc.variances[j], WithinRel(100.0, 5e-3));
        REQUIRE_THAT(mc.means[j],
                     WithinAbs(j == 0 || j == 3 ? 100.0 : 0.0, 0.1));
    }
}

TEST_CASE("the 3 dB cigar example converges to the engine values") {
    const TwoModeState state = make_single_frequency_state(
        1.0, 1.0, kPi / 2.0, {0.5, 2.0}, {0.5, 2.0});
    SampleConfig config;
    config.sample_count = 1'000'000;
    config.seed = 99;
    const EmpiricalStokes mc = sample_stokes(state, 0, config);
    const double shot = state.photon_number();
    REQUIRE_THAT(mc.variances[0] / shot, WithinRel(0.5, 0.02));
    REQUIRE_THAT(mc.variances[1] / shot, WithinRel(0.5, 0.02));
    REQUIRE_THAT(mc.variances[2] / shot, WithinRel(2.0, 0.02));
    REQUIRE_THAT(mc.variances[3] / shot, WithinRel(0.5, 0.02));
}

TEST_CASE("linearized sampling matches the engine within five standard errors") {
    std::mt19937_64 rng(17);
    SampleConfig config;
    config.sample_count = 100'000;
    for (int trial = 0; trial < 100; ++trial) {
        const TwoModeState state = test::random_physical_state(rng);
        config.seed = static_cast<std::uint64_t>(trial);
        const EmpiricalStokes mc = sample_stokes(state, 0, config);
        const StokesVariances v = stokes_variances(state, 0);
        for (std::size_t j = 0; j < 4; ++j) {
            const double z = (mc.variances[j] - v[j]) / mc.variance_std_error[j];
            REQUIRE(std::abs(z) < 5.0);
        }
    }
}

TEST_CASE("empirical uncertainty products hold within sampling error") {
    std::mt19937_64 rng(23);
    SampleConfig config;
    config.sample_count = 200'000;
    for (int trial = 0; trial < 20; ++trial) {
        const TwoModeState state = test::random_physical_state(rng);
        config.seed = static_cast<std::uint64_t>(trial);
        const EmpiricalStokes mc = sample_stokes(state, 0, config);
        const auto lhs_error = [&](std::size_t i, std::size_t j) {
            return std::sqrt(
                std::pow(mc.variances[j] * mc.variance_std_error[i], 2.0) +
                std::pow(mc.variances[i] * mc.variance_std_error[j], 2.0));
        };
        const StokesMeans m = stokes_means(state);
        REQUIRE(mc.variances[1] * mc.variances[2] - m.s3 * m.s3 >=
                -5.0 * lhs_error(1, 2));
        REQUIRE(mc.variances[2] * mc.variances[3] - m.s1 * m.s1 >=
                -5.0 * lhs_error(2, 3));
        REQUIRE(mc.variances[3] * mc.variances[1] - m.s2 * m.s2 >=
                -5.0 * lhs_error(3, 1));
    }
}

TEST_CASE("quadratic-mode corrections shrink as the beam gets brighter") {
    // common random numbers: same seed couples the two modes sample by
    // sample, so the correction is resolved far below the sampling noise
    SampleConfig lin;
    lin.sample_count = 200'000;
    lin.seed = 7;
    SampleConfig quad = lin;
    quad.mode = SampleMode::FullQuadratic;

    double previous = std::numeric_limits<double>::infinity();
    for (const double alpha : {10.0, 100.0, 1000.0}) {
        const TwoModeState state = make_single_frequency_state(
            alpha, alpha, kPi / 2.0, {0.5, 2.0}, {0.5, 2.0});
        const EmpiricalStokes l = sample_stokes(state, 0, lin);
        const EmpiricalStokes q = sample_stokes(state, 0, quad);
        double worst = 0.0;
        for (std::size_t j = 0; j < 4; ++j)
            worst = std::max(worst,
                             std::abs(q.variances[j] - l.variances[j]) / l.variances[j]);
        REQUIRE(worst < previous);
        previous = worst;
        if (alpha == 1000.0) REQUIRE(worst < 1e-3);  // alpha^2 = 10^6
    }
}

TEST_CASE("quadratic mode exposes the second-order offsets on a coherent beam") {
    // classical quadratic forms add (sum of four chi-square terms)/4: a mean
    // offset of exactly 1 on S0 and a variance offset of 0.5 on all four
    const double alpha = 10.0;
    const TwoModeState state = make_single_frequency_state(
        alpha / std::sqrt(2.0), alpha / std::sqrt(2.0), kPi / 2.0, {1, 1}, {1, 1});
    SampleConfig lin;
    lin.sample_count = 1'000'000;
    lin.seed = 31;
    SampleConfig quad = lin;
    quad.mode = SampleMode::FullQuadratic;
    const EmpiricalStokes l = sample_stokes(state, 0, lin);
    const EmpiricalStokes q = sample_stokes(state, 0, quad);
    REQUIRE_THAT(q.means[0] - l.means[0], WithinAbs(1.0, 0.05));
    for (std::size_t j = 0; j < 4; ++j)
        REQUIRE_THAT(q.variances[j] - l.variances[j], WithinAbs(0.5, 0.1));
}

TEST_CASE("photocurrent time series") {
    const FrequencyGrid grid = make_grid(1e6, 12e6, 23);

    SECTION("flat coherent spectrum: periodogram mean within 3%") {
        const TwoModeState state = combine_on_pbs(make_coherent(2.0, grid),
                                                  make_coherent(2.0, grid), kPi / 2.0);
        const DetectionSetup setup = canonical_setup("S0");
        const double fs = 40e6;
        const std::size_t segment = 2048;
        const double duration = 310.0 * static_cast<double>(segment) / fs;
        const TimeSeries ts =
            sample_photocurrent_timeseries(state, setup, duration, fs, 5, segment);
        REQUIRE_FALSE(ts.accuracy_warning);
        const NoiseSpectrum psd = welch_psd(ts.samples, fs, segment);
        const NoiseSpectrum band = band_limit(psd, 3e6, 10e6);
        double mean = 0.0;
        for (double v : band.values) mean += v;
        mean /= static_cast<double>(band.values.size());
        REQUIRE_THAT(mean, WithinRel(state.photon_number(), 0.03));
    }

    SECTION("lorentzian corner frequency recovered within 10%") {
        const double corner = 5e6;
        const FrequencyGrid wide = make_grid(0.2e6, 16e6, 80);
        const BeamMode sq = make_squeezed(
            3.0, Quadrature::Amplitude, SqueezeSpectrum::lorentzian(0.25, corner), wide);
        const TwoModeState state =
            combine_on_pbs(sq, make_squeezed(3.0, Quadrature::Amplitude,
                                             SqueezeSpectrum::lorentzian(0.25, corner),
                                             wide),
                           kPi / 2.0);
        const DetectionSetup setup = canonical_setup("S0");
        const double fs = 40e6;
        const std::size_t segment = 2048;
        const double duration = 400.0 * static_cast<double>(segment) / fs;
        const TimeSeries ts =
            sample_photocurrent_timeseries(state, setup, duration, fs, 11, segment);
        const NoiseSpectrum smoothed =
            smooth_rbw(band_limit(welch_psd(ts.samples, fs, segment), 0.4e6, 15e6),
                       300e3);

        // least-squares fit of the corner against the known model shape
        const double n = state.photon_number();
        double best_corner = 0.0;
        double best_cost = std::numeric_limits<double>::infinity();
        for (double fc = 2e6; fc <= 9e6; fc += 0.05e6) {
            double cost = 0.0;
            for (std::size_t i = 0; i < smoothed.size(); ++i) {
                const double x = smoothed.frequencies[i] / fc;
                const double model = n * (1.0 - 0.75 / (1.0 + x * x));
                const double diff = smoothed.values[i] - model;
                cost += diff * diff;
            }
            if (cost < best_cost) {
                best_cost = cost;
                best_corner = fc;
            }
        }
        REQUIRE_THAT(best_corner, WithinRel(corner, 0.10));
    }

    SECTION("degenerate durations are rejected") {
        const TwoModeState state = combine_on_pbs(make_coherent(2.0, grid),
                                                  make_coherent(2.0, grid), 0.0);
        const DetectionSetup setup = canonical_setup("S0");
        REQUIRE_THROWS_AS(
            sample_photocurrent_timeseries(state, setup, 0.0, 40e6, 1), std::domain_error);
        REQUIRE_THROWS_AS(
            sample_photocurrent_timeseries(state, setup, 1e-9, 40e6, 1), std::domain_error);
        // Nyquist guard
        REQUIRE_THROWS_AS(
            sample_photocurrent_timeseries(state, setup, 1.0, 20e6, 1), std::domain_error);
    }

    SECTION("short records carry an accuracy warning") {
        const TwoModeState state = combine_on_pbs(make_coherent(2.0, grid),
                                                  make_coherent(2.0, grid), 0.0);
        const TimeSeries ts = sample_photocurrent_timeseries(
            state, canonical_setup("S0"), 1e-4, 40e6, 1, 4096);
        REQUIRE(ts.accuracy_warning);
    }
}
