#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqz/fft.hpp"
#include "sqz/gaussian.hpp"

// Spectrum-analyzer emulation: resolution-bandwidth smoothing, trace
// averaging with darknoise correction, and shot-noise normalization into
// dB spectra. The video bandwidth is carried as metadata only; trace
// averaging already models its effect on displayed jitter.

namespace sqz {

struct SpectrumMeta {
    double rbw_hz = 0.0;
    double vbw_hz = 0.0;
    int averages = 1;
};

/// Variance (linear power) or dB values on a strictly increasing grid.
struct NoiseSpectrum {
    FrequencyGrid frequencies;
    std::vector<double> values;
    double reference = 0.0;  // shot-noise variance used (or to use) for dB
    SpectrumMeta meta;
    bool is_db = false;
    double calibration_band_db = 0.0;    // attached by normalize_to_shot
    double darknoise_margin_db = 0.0;    // attached by average_and_correct

    std::size_t size() const { return frequencies.size(); }
};

inline void validate(const NoiseSpectrum& s) {
    validate_grid(s.frequencies);
    if (s.values.size() != s.frequencies.size())
        throw std::invalid_argument("spectrum values do not match grid");
}

inline NoiseSpectrum make_spectrum(FrequencyGrid grid, std::vector<double> values,
                                   SpectrumMeta meta = {}) {
    NoiseSpectrum s;
    s.frequencies = std::move(grid);
    s.values = std::move(values);
    s.meta = meta;
    validate(s);
    return s;
}

inline NoiseSpectrum flat_spectrum(const FrequencyGrid& grid, double value,
                                   SpectrumMeta meta = {}) {
    return make_spectrum(grid, std::vector<double>(grid.size(), value), meta);
}

/// Traces to be averaged plus the recorded darknoise floor; all spectra
/// must share one grid.
struct TraceBundle {
    std::vector<NoiseSpectrum> traces;
    NoiseSpectrum darknoise;
};

/// Darknoise >= signal somewhere; carries the offending frequencies.
class CorrectionError : public std::runtime_error {
  public:
    CorrectionError(std::string message, std::vector<double> frequencies)
        : std::runtime_error(std::move(message)),
          offending_frequencies_(std::move(frequencies)) {}

    const std::vector<double>& offending_frequencies() const {
        return offending_frequencies_;
    }

  private:
    std::vector<double> offending_frequencies_;
};

/// Smoothing window length in bins: round(rbw / df), bumped to odd so the
/// window is centered.
inline std::size_t rbw_window_length(double rbw_hz, double bin_spacing_hz) {
    if (!(rbw_hz > 0.0)) throw std::domain_error("rbw must be > 0");
    if (rbw_hz < bin_spacing_hz)
        throw std::domain_error("rbw below grid spacing cannot be smoothed");
    auto window = static_cast<std::size_t>(std::llround(rbw_hz / bin_spacing_hz));
    if (window % 2 == 0) ++window;
    return window;
}

/// Moving average over the resolution bandwidth, in linear power units.
/// Endpoints use truncated windows.
inline NoiseSpectrum smooth_rbw(const NoiseSpectrum& spectrum, double rbw_hz) {
    validate(spectrum);
    if (spectrum.is_db)
        throw std::invalid_argument("smooth linear power, not dB values");
    if (spectrum.size() == 1) {
        NoiseSpectrum out = spectrum;
        out.meta.rbw_hz = rbw_hz;
        return out;
    }
    const double df = spectrum.frequencies[1] - spectrum.frequencies[0];
    const std::size_t window = rbw_window_length(rbw_hz, df);
    const std::size_t half = window / 2;
    const std::size_t n = spectrum.size();

    NoiseSpectrum out = spectrum;
    out.meta.rbw_hz = rbw_hz;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(i + half, n - 1);
        double acc = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) acc += spectrum.values[j];
        out.values[i] = acc / static_cast<double>(hi - lo + 1);
    }
    return out;
}

/// Pointwise mean of the traces minus the darknoise, in linear power.
/// Records how far (in dB) the darknoise sat below the averaged signal.
inline NoiseSpectrum average_and_correct(const TraceBundle& bundle) {
    if (bundle.traces.empty()) throw std::invalid_argument("no traces to average");
    const auto& grid = bundle.traces.front().frequencies;
    for (const auto& t : bundle.traces) {
        validate(t);
        if (t.frequencies != grid) throw std::invalid_argument("trace grids differ");
        if (t.is_db) throw std::invalid_argument("average linear power, not dB");
    }
    validate(bundle.darknoise);
    if (bundle.darknoise.frequencies != grid)
        throw std::invalid_argument("darknoise grid differs from traces");

    NoiseSpectrum out = bundle.traces.front();
    out.meta.averages = static_cast<int>(bundle.traces.size());
    const std::size_t n = grid.size();
    std::vector<double> offending;
    double min_margin_db = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0.0;
        for (const auto& t : bundle.traces) mean += t.values[i];
        mean /= static_cast<double>(bundle.traces.size());
        const double dark = bundle.darknoise.values[i];
        if (dark >= mean) {
            offending.push_back(grid[i]);
            continue;
        }
        if (dark > 0.0)
            min_margin_db = std::min(min_margin_db, 10.0 * std::log10(mean / dark));
        out.values[i] = mean - dark;
    }
    if (!offending.empty())
        throw CorrectionError("darknoise at or above signal at " +
                                  std::to_string(offending.size()) + " frequencies",
                              std::move(offending));
    out.darknoise_margin_db = std::isfinite(min_margin_db) ? min_margin_db : 0.0;
    return out;
}

/// 10 log10(value / reference) pointwise; attaches the calibration band.
inline NoiseSpectrum normalize_to_shot(const NoiseSpectrum& spectrum, double reference,
                                       double calibration_band_db = 0.0) {
    validate(spectrum);
    if (!(reference > 0.0)) throw std::domain_error("shot reference must be > 0");
    if (spectrum.is_db) throw std::invalid_argument("spectrum already in dB");
    NoiseSpectrum out = spectrum;
    out.reference = reference;
    out.is_db = true;
    out.calibration_band_db = calibration_band_db;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        if (!(spectrum.values[i] > 0.0))
            throw std::domain_error("non-positive value at " +
                                    std::to_string(spectrum.frequencies[i]) + " Hz");
        out.values[i] = 10.0 * std::log10(spectrum.values[i] / reference);
    }
    return out;
}

inline NoiseSpectrum denormalize_from_shot(const NoiseSpectrum& spectrum_db,
                                           double reference) {
    validate(spectrum_db);
    if (!spectrum_db.is_db) throw std::invalid_argument("spectrum is not in dB");
    NoiseSpectrum out = spectrum_db;
    out.is_db = false;
    out.reference = reference;
    for (double& v : out.values) v = reference * std::pow(10.0, v / 10.0);
    return out;
}

/// Welch PSD estimate with non-overlapping rectangular segments; returns
/// the two-sided density evaluated on bins 1..L/2 (DC dropped). Values are
/// in the same units the synthesizer targets, so a process generated from
/// variance spectrum V(f) averages back to V(f).
inline NoiseSpectrum welch_psd(const std::vector<double>& samples, double sample_rate_hz,
                               std::size_t segment_length) {
    if (!detail::is_power_of_two(segment_length) || segment_length < 8)
        throw std::invalid_argument("segment length must be a power of two >= 8");
    const std::size_t segments = samples.size() / segment_length;
    if (segments == 0) throw std::invalid_argument("time series shorter than one segment");

    const std::size_t bins = segment_length / 2;
    std::vector<double> power(bins, 0.0);
    std::vector<std::complex<double>> work(segment_length);
    for (std::size_t seg = 0; seg < segments; ++seg) {
        const double* base = samples.data() + seg * segment_length;
        for (std::size_t i = 0; i < segment_length; ++i) work[i] = base[i];
        detail::fft(work);
        for (std::size_t k = 1; k <= bins; ++k)
            power[k - 1] += std::norm(work[k]);
    }
    const double scale =
        1.0 / (static_cast<double>(segments) * static_cast<double>(segment_length) *
               sample_rate_hz);
    FrequencyGrid grid(bins);
    for (std::size_t k = 1; k <= bins; ++k) {
        grid[k - 1] = sample_rate_hz * static_cast<double>(k) /
                      static_cast<double>(segment_length);
        power[k - 1] *= scale;
    }
    NoiseSpectrum out = make_spectrum(std::move(grid), std::move(power));
    out.meta.averages = static_cast<int>(segments);
    return out;
}

/// Restricts a spectrum to [lo, hi] (inclusive).
inline NoiseSpectrum band_limit(const NoiseSpectrum& spectrum, double lo_hz, double hi_hz) {
    validate(spectrum);
    NoiseSpectrum out;
    out.reference = spectrum.reference;
    out.meta = spectrum.meta;
    out.is_db = spectrum.is_db;
    out.calibration_band_db = spectrum.calibration_band_db;
    out.darknoise_margin_db = spectrum.darknoise_margin_db;
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        if (spectrum.frequencies[i] < lo_hz || spectrum.frequencies[i] > hi_hz) continue;
        out.frequencies.push_back(spectrum.frequencies[i]);
        out.values.push_back(spectrum.values[i]);
    }
    if (out.frequencies.empty()) throw std::domain_error("band limit left no points");
    return out;
}

/// Optional cosmetic interference: narrow additive spikes at the given
/// frequencies (linear power `strength` spread over one bin each). Off by
/// default everywhere; exists to mimic laboratory pick-up structure.
inline NoiseSpectrum add_pickup_interference(const NoiseSpectrum& spectrum,
                                             const std::vector<double>& spike_hz,
                                             double strength) {
    validate(spectrum);
    if (spectrum.is_db) throw std::invalid_argument("add interference in linear power");
    NoiseSpectrum out = spectrum;
    for (double f : spike_hz) {
        auto it = std::lower_bound(out.frequencies.begin(), out.frequencies.end(), f);
        if (it == out.frequencies.end()) continue;
        if (it != out.frequencies.begin() &&
            f - *(it - 1) < *it - f)
            --it;
        out.values[static_cast<std::size_t>(it - out.frequencies.begin())] += strength;
    }
    return out;
}

}  // namespace sqz
