#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "sqz/csv.hpp"
#include "sqz/rng.hpp"
#include "sqz/spectra.hpp"

using namespace sqz;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

FrequencyGrid uniform_grid(double start, double step, std::size_t n) {
    FrequencyGrid g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = start + step * static_cast<double>(i);
    return g;
}

}  // namespace

TEST_CASE("rbw window length uses round-then-odd") {
    REQUIRE(rbw_window_length(300e3, 10e3) == 31);  // 30 rounds up to odd
    REQUIRE(rbw_window_length(310e3, 10e3) == 31);
    REQUIRE(rbw_window_length(10e3, 10e3) == 1);
    REQUIRE(rbw_window_length(50e3, 10e3) == 5);
    REQUIRE_THROWS_AS(rbw_window_length(5e3, 10e3), std::domain_error);
}

TEST_CASE("smoothing leaves flat spectra untouched") {
    const NoiseSpectrum flat = flat_spectrum(uniform_grid(3e6, 10e3, 701), 1.7);
    const NoiseSpectrum out = smooth_rbw(flat, 300e3);
    for (double v : out.values) REQUIRE_THAT(v, WithinRel(1.7, 1e-13));
    REQUIRE(out.meta.rbw_hz == 300e3);
}

TEST_CASE("a single-bin spike smears into a rectangle of height area/rbw") {
    const double df = 10e3;
    const double rbw = 310e3;  // exactly 31 bins
    NoiseSpectrum spectrum = flat_spectrum(uniform_grid(3e6, df, 401), 0.0);
    const double area = 2.0;
    spectrum.values[200] = area / df;  // unit-area impulse on the grid
    const NoiseSpectrum out = smooth_rbw(spectrum, rbw);
    REQUIRE_THAT(out.values[200], WithinRel(area / rbw, 1e-12));
    REQUIRE_THAT(out.values[200 - 15], WithinRel(area / rbw, 1e-12));
    REQUIRE(out.values[200 + 16] == 0.0);
}

TEST_CASE("trace averaging and darknoise correction") {
    const FrequencyGrid grid = uniform_grid(3e6, 100e3, 71);

    SECTION("identical traces with zero-ish darknoise average to themselves") {
        TraceBundle bundle;
        bundle.traces = {flat_spectrum(grid, 2.0), flat_spectrum(grid, 2.0),
                         flat_spectrum(grid, 2.0)};
        bundle.darknoise = flat_spectrum(grid, 1e-12);
        const NoiseSpectrum out = average_and_correct(bundle);
        for (double v : out.values) REQUIRE_THAT(v, WithinRel(2.0, 1e-9));
        REQUIRE(out.meta.averages == 3);
    }

    SECTION("linear subtraction") {
        TraceBundle bundle;
        bundle.traces = {flat_spectrum(grid, 2.0)};
        bundle.darknoise = flat_spectrum(grid, 0.5);
        const NoiseSpectrum out = average_and_correct(bundle);
        REQUIRE(out.values.front() == 1.5);
    }

    SECTION("darknoise exactly 4 dB down leaves 0.602 of the raw trace") {
        const double ratio = std::pow(10.0, -0.4);
        TraceBundle bundle;
        bundle.traces = {flat_spectrum(grid, 1.0)};
        bundle.darknoise = flat_spectrum(grid, ratio);
        const NoiseSpectrum out = average_and_correct(bundle);
        REQUIRE_THAT(out.values.front(), WithinRel(1.0 - ratio, 1e-12));
        REQUIRE_THAT(out.values.front(), WithinAbs(0.602, 5e-4));
        REQUIRE_THAT(out.darknoise_margin_db, WithinAbs(4.0, 1e-9));
    }

    SECTION("darknoise at or above the trace raises with offenders") {
        TraceBundle bundle;
        bundle.traces = {flat_spectrum(grid, 1.0)};
        NoiseSpectrum dark = flat_spectrum(grid, 0.1);
        dark.values[3] = 1.0;
        dark.values[7] = 2.0;
        bundle.darknoise = dark;
        try {
            average_and_correct(bundle);
            FAIL("expected CorrectionError");
        } catch (const CorrectionError& e) {
            REQUIRE(e.offending_frequencies() ==
                    std::vector<double>{grid[3], grid[7]});
        }
    }
}

TEST_CASE("shot-noise normalization") {
    const FrequencyGrid grid = uniform_grid(3e6, 100e3, 11);

    SECTION("reference maps to 0 dB, half maps to -3.01 dB") {
        NoiseSpectrum s = flat_spectrum(grid, 2.0);
        s.values[5] = 1.0;
        const NoiseSpectrum db = normalize_to_shot(s, 2.0, 0.04);
        REQUIRE(db.values[0] == 0.0);
        REQUIRE_THAT(db.values[5], WithinAbs(-3.0103, 1e-4));
        REQUIRE(db.is_db);
        REQUIRE(db.calibration_band_db == 0.04);
    }

    SECTION("round trip recovers linear values") {
        std::mt19937_64 rng(5);
        NoiseSpectrum s = flat_spectrum(grid, 1.0);
        for (double& v : s.values)
            v = std::uniform_real_distribution<double>(0.1, 10.0)(rng);
        const NoiseSpectrum back =
            denormalize_from_shot(normalize_to_shot(s, 3.7), 3.7);
        for (std::size_t i = 0; i < s.size(); ++i)
            REQUIRE_THAT(back.values[i], WithinRel(s.values[i], 1e-12));
    }

    SECTION("non-positive values are rejected") {
        NoiseSpectrum s = flat_spectrum(grid, 1.0);
        s.values[2] = 0.0;
        REQUIRE_THROWS_AS(normalize_to_shot(s, 1.0), std::domain_error);
        REQUIRE_THROWS_AS(normalize_to_shot(flat_spectrum(grid, 1.0), 0.0),
                          std::domain_error);
    }
}

TEST_CASE("smoothing and averaging commute") {
    std::mt19937_64 rng(11);
    const FrequencyGrid grid = uniform_grid(3e6, 10e3, 301);
    TraceBundle bundle;
    for (int t = 0; t < 3; ++t) {
        NoiseSpectrum s = flat_spectrum(grid, 1.0);
        for (double& v : s.values)
            v = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
        bundle.traces.push_back(s);
    }
    bundle.darknoise = flat_spectrum(grid, 1e-9);

    const NoiseSpectrum smooth_then_avg = [&] {
        TraceBundle smoothed = bundle;
        for (auto& t : smoothed.traces) t = smooth_rbw(t, 300e3);
        smoothed.darknoise = smooth_rbw(bundle.darknoise, 300e3);
        return average_and_correct(smoothed);
    }();
    const NoiseSpectrum avg_then_smooth = smooth_rbw(average_and_correct(bundle), 300e3);
    for (std::size_t i = 0; i < grid.size(); ++i)
        REQUIRE_THAT(smooth_then_avg.values[i],
                     WithinRel(avg_then_smooth.values[i], 1e-12));
}

TEST_CASE("a shot-noise trace normalizes to 0 dB everywhere") {
    const FrequencyGrid grid = uniform_grid(3e6, 100e3, 71);
    const NoiseSpectrum db = normalize_to_shot(flat_spectrum(grid, 4.0), 4.0, 0.04);
    for (double v : db.values) REQUIRE(std::abs(v) <= db.calibration_band_db);
}

TEST_CASE("welch psd estimates a known white level") {
    const double fs = 10e6;
    const double sigma2 = 3.0;
    const CounterRng rng(77, 0);
    std::vector<double> samples(1 << 18);
    for (std::size_t i = 0; i < samples.size(); i += 2) {
        const auto pair = rng.normal_pair(i / 2);
        samples[i] = std::sqrt(sigma2) * pair[0];
        samples[i + 1] = std::sqrt(sigma2) * pair[1];
    }
    const NoiseSpectrum psd = welch_psd(samples, fs, 1024);
    double mean = 0.0;
    for (double v : psd.values) mean += v;
    mean /= static_cast<double>(psd.values.size());
    // two-sided density of white noise is sigma^2 / fs
    REQUIRE_THAT(mean, WithinRel(sigma2 / fs, 0.02));
    REQUIRE(psd.meta.averages == 256);

    REQUIRE_THROWS_AS(welch_psd(samples, fs, 1000), std::invalid_argument);
    REQUIRE_THROWS_AS(welch_psd(std::vector<double>(10), fs, 1024),
                      std::invalid_argument);
}

TEST_CASE("pickup interference is additive and opt-in") {
    const FrequencyGrid grid = uniform_grid(3e6, 100e3, 71);
    const NoiseSpectrum base = flat_spectrum(grid, 1.0);
    const NoiseSpectrum spiked =
        add_pickup_interference(base, {4e6, 5e6, 6e6, 7e6, 8e6, 9e6}, 0.5);
    std::size_t spikes = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (spiked.values[i] > 1.25) ++spikes;
        REQUIRE(spiked.values[i] >= base.values[i]);
    }
    REQUIRE(spikes == 6);
}

TEST_CASE("db spectrum csv uses three decimals") {
    const FrequencyGrid grid{3e6, 4e6};
    NoiseSpectrum s = flat_spectrum(grid, 1.0);
    s.values = {0.5, 2.0};
    const std::string csv = db_spectrum_csv(normalize_to_shot(s, 1.0));
    REQUIRE(csv == "freq_hz,v_db\n3e+06,-3.010\n4e+06,3.010\n");
}
