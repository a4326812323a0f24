#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "sqz/apparatus.hpp"
#include "sqz/fft.hpp"
#include "sqz/gaussian.hpp"
#include "sqz/rng.hpp"
#include "sqz/stokes.hpp"

// Independent Monte-Carlo verification of the analytic Stokes statistics.
// Quadrature fluctuations are sampled from the stored covariance and pushed
// through either the linearized Stokes forms or the full quadratic
// expressions built from sampled complex amplitudes.
//
// The quadratic mode computes symmetric-ordered classical moments of the
// quadratic forms; operator-ordering corrections are not added. In the
// linearized regime (noise much smaller than the coherent amplitudes) those
// corrections are sub-leading.

namespace sqz {

enum class SampleMode { Linearized, FullQuadratic };

inline const char* to_string(SampleMode m) {
    return m == SampleMode::Linearized ? "linearized" : "full_quadratic";
}

struct SampleConfig {
    std::uint64_t sample_count = 1'000'000;
    std::uint64_t seed = 0;
    SampleMode mode = SampleMode::Linearized;
    unsigned threads = 1;
};

inline void validate(const SampleConfig& config) {
    if (config.sample_count < 10'000)
        throw std::invalid_argument("sample count below 10^4 is too noisy to verify anything");
    if (config.sample_count > 100'000'000)
        throw std::invalid_argument("sample count capped at 10^8");
    if (config.threads == 0) throw std::invalid_argument("threads must be >= 1");
}

/// Empirical Stokes statistics with standard errors.
struct EmpiricalStokes {
    double frequency_hz = 0.0;
    std::array<double, 4> means{};
    std::array<double, 4> variances{};
    std::array<double, 4> mean_std_error{};
    std::array<double, 4> variance_std_error{};
    double shot_noise = 0.0;
    SampleMode mode = SampleMode::Linearized;
    std::uint64_t seed = 0;
    std::uint64_t sample_count = 0;
};

namespace detail {

// Fixed stratification of the sample index space. Strata are accumulated
// independently and merged in stratum order, so the result is identical
// for any thread count.
inline constexpr std::size_t kStrata = 64;

struct MomentAccumulator {
    std::array<double, 4> sum{};
    std::array<double, 4> sum_sq{};

    void add(const std::array<double, 4>& x) {
        for (std::size_t j = 0; j < 4; ++j) {
            sum[j] += x[j];
            sum_sq[j] += x[j] * x[j];
        }
    }

    void merge(const MomentAccumulator& other) {
        for (std::size_t j = 0; j < 4; ++j) {
            sum[j] += other.sum[j];
            sum_sq[j] += other.sum_sq[j];
        }
    }
};

}  // namespace detail

/// Samples Stokes statistics at one grid frequency. Deterministic for a
/// given (seed, frequency index) and independent of `threads`.
inline EmpiricalStokes sample_stokes(const TwoModeState& state, std::size_t freq_index,
                                     const SampleConfig& config) {
    validate(config);
    const Mat4& cov = state.covariance.at(freq_index);
    if (!is_psd(cov)) throw std::domain_error("cannot sample a non-PSD covariance");
    const Mat4 factor = psd_factor(cov);

    const double alpha_h = state.alpha_h;
    const double alpha_v = state.alpha_v;
    const double theta = state.theta;
    const StokesMeans analytic = stokes_means(state);
    const std::array<double, 4> center{analytic.s0, analytic.s1, analytic.s2,
                                       analytic.s3};
    const std::array<Vec4, 4> coeff{
        stokes_coefficients(0, alpha_h, alpha_v, theta),
        stokes_coefficients(1, alpha_h, alpha_v, theta),
        stokes_coefficients(2, alpha_h, alpha_v, theta),
        stokes_coefficients(3, alpha_h, alpha_v, theta)};
    const std::complex<double> phase{std::cos(theta), std::sin(theta)};

    const CounterRng rng(config.seed, static_cast<std::uint64_t>(freq_index));
    const std::uint64_t n = config.sample_count;
    const bool quadratic = config.mode == SampleMode::FullQuadratic;

    std::array<detail::MomentAccumulator, detail::kStrata> strata{};
    auto run_stratum = [&](std::size_t s) {
        const std::uint64_t lo = n * s / detail::kStrata;
        const std::uint64_t hi = n * (s + 1) / detail::kStrata;
        detail::MomentAccumulator acc;
        for (std::uint64_t i = lo; i < hi; ++i) {
            const std::array<double, 4> g = rng.normal_quad(i);
            Vec4 x{};
            for (std::size_t r = 0; r < 4; ++r)
                x[r] = factor(r, 0) * g[0] + factor(r, 1) * g[1] +
                       factor(r, 2) * g[2] + factor(r, 3) * g[3];
            std::array<double, 4> centered;
            if (!quadratic) {
                for (std::size_t j = 0; j < 4; ++j) centered[j] = dot(coeff[j], x);
            } else {
                const std::complex<double> a_h{alpha_h + 0.5 * x[0], 0.5 * x[1]};
                const std::complex<double> a_v{alpha_v + 0.5 * x[2], 0.5 * x[3]};
                const double nh = std::norm(a_h);
                const double nv = std::norm(a_v);
                const std::complex<double> z = std::conj(a_h) * a_v * phase;
                centered = {nh + nv - center[0], nh - nv - center[1],
                            2.0 * z.real() - center[2], 2.0 * z.imag() - center[3]};
            }
            acc.add(centered);
        }
        strata[s] = acc;
    };

    if (config.threads <= 1) {
        for (std::size_t s = 0; s < detail::kStrata; ++s) run_stratum(s);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(config.threads);
        for (unsigned t = 0; t < config.threads; ++t) {
            pool.emplace_back([&, t]() {
                for (std::size_t s = t; s < detail::kStrata; s += config.threads)
                    run_stratum(s);
            });
        }
        for (auto& th : pool) th.join();
    }

    detail::MomentAccumulator total;
    for (const auto& acc : strata) total.merge(acc);

    EmpiricalStokes out;
    out.frequency_hz = state.frequencies.at(freq_index);
    out.shot_noise = state.photon_number();
    out.mode = config.mode;
    out.seed = config.seed;
    out.sample_count = n;
    const auto dn = static_cast<double>(n);
    for (std::size_t j = 0; j < 4; ++j) {
        const double mean_fluct = total.sum[j] / dn;
        const double var =
            (total.sum_sq[j] - total.sum[j] * total.sum[j] / dn) / (dn - 1.0);
        out.means[j] = center[j] + mean_fluct;
        out.variances[j] = var;
        out.mean_std_error[j] = std::sqrt(var / dn);
        out.variance_std_error[j] = var * std::sqrt(2.0 / (dn - 1.0));
    }
    return out;
}

inline std::vector<EmpiricalStokes> sample_stokes_spectrum(const TwoModeState& state,
                                                           const SampleConfig& config) {
    std::vector<EmpiricalStokes> out;
    out.reserve(state.frequencies.size());
    for (std::size_t k = 0; k < state.frequencies.size(); ++k)
        out.push_back(sample_stokes(state, k, config));
    return out;
}

/// Stationary Gaussian photocurrent record plus bookkeeping for the
/// spectrum-analyzer stage.
struct TimeSeries {
    double sample_rate_hz = 0.0;
    std::vector<double> samples;
    std::size_t suggested_segment = 4096;
    bool accuracy_warning = false;  // fewer than 100 periodogram segments
};

/// Synthesizes a photocurrent fluctuation time series whose power spectral
/// density follows the measured variance spectrum of `setup` applied to
/// `state` (linear interpolation across bins, flat extension outside the
/// state's grid). The Welch periodogram of the result converges to that
/// spectrum. Sampling uses substream = trace_seed so traces with different
/// seeds are independent.
inline TimeSeries sample_photocurrent_timeseries(const TwoModeState& state,
                                                 const DetectionSetup& setup,
                                                 double duration_s,
                                                 double sample_rate_hz,
                                                 std::uint64_t seed,
                                                 std::size_t segment_hint = 4096) {
    if (!(duration_s > 0.0)) throw std::domain_error("duration must be > 0");
    if (!(sample_rate_hz > 0.0)) throw std::domain_error("sample rate must be > 0");
    if (sample_rate_hz < 2.0 * state.frequencies.back())
        throw std::domain_error("sample rate must exceed twice the highest frequency");

    const auto requested =
        static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
    if (requested == 0) throw std::domain_error("duration shorter than one sample");

    const PhotocurrentStats measured = measure(setup, state);
    const auto& grid = measured.frequencies;
    const auto& target = measured.fluctuation_variance;

    auto psd_at = [&](double f) {
        if (f <= grid.front()) return target.front();
        if (f >= grid.back()) return target.back();
        auto hi = std::upper_bound(grid.begin(), grid.end(), f);
        const auto k = static_cast<std::size_t>(hi - grid.begin());
        const double t = (f - grid[k - 1]) / (grid[k] - grid[k - 1]);
        return target[k - 1] + t * (target[k] - target[k - 1]);
    };

    const std::size_t nfft = detail::next_power_of_two(requested);
    const CounterRng rng(seed, 0);
    std::vector<std::complex<double>> freq_data(nfft, {0.0, 0.0});
    const double fs = sample_rate_hz;
    for (std::size_t k = 1; k < nfft / 2; ++k) {
        const double f = fs * static_cast<double>(k) / static_cast<double>(nfft);
        const double sigma =
            std::sqrt(psd_at(f) * fs * static_cast<double>(nfft) / 2.0);
        const auto g = rng.normal_pair(k);
        freq_data[k] = {sigma * g[0], sigma * g[1]};
        freq_data[nfft - k] = std::conj(freq_data[k]);
    }
    {
        const double f = fs / 2.0;
        const double sigma = std::sqrt(psd_at(f) * fs * static_cast<double>(nfft));
        freq_data[nfft / 2] = {sigma * rng.normal_pair(nfft / 2)[0], 0.0};
    }
    detail::fft(freq_data, /*inverse=*/true);

    TimeSeries ts;
    ts.sample_rate_hz = fs;
    ts.samples.resize(requested);
    for (std::size_t i = 0; i < requested; ++i) ts.samples[i] = freq_data[i].real();
    ts.suggested_segment = segment_hint;
    ts.accuracy_warning = requested / segment_hint < 100;
    return ts;
}

}  // namespace sqz
