#pragma once

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "sqz/gaussian.hpp"
#include "sqz/spectra.hpp"
#include "sqz/stokes.hpp"

// CSV input/output. All parsing and formatting is locale-independent
// (from_chars/to_chars), so files are byte-reproducible across runs.

namespace sqz {

namespace detail {

inline bool parse_double(std::string_view text, double& out) {
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

/// Shortest representation that round-trips.
inline std::string format_double(double value) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc()) throw std::runtime_error("number formatting failed");
    return std::string(buf.data(), ptr);
}

inline std::string format_fixed(double value, int decimals) {
    std::array<char, 64> buf{};
    const int written =
        std::snprintf(buf.data(), buf.size(), "%.*f", decimals, value);
    if (written < 0) throw std::runtime_error("number formatting failed");
    return std::string(buf.data(), static_cast<std::size_t>(written));
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace detail

/// Reads a tabulated source spectrum: header `freq_hz,v_plus,v_minus`,
/// strictly increasing frequency, decimal-point floats.
inline std::vector<std::array<double, 3>> read_source_spectrum_csv(const std::string& text,
                                                                   const std::string& origin) {
    std::vector<std::array<double, 3>> rows;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "freq_hz,v_plus,v_minus")
                throw std::runtime_error(origin +
                                         ": expected header 'freq_hz,v_plus,v_minus'");
            continue;
        }
        const auto fields = detail::split(line, ',');
        if (fields.size() != 3)
            throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                     ": expected 3 columns");
        std::array<double, 3> row{};
        for (std::size_t i = 0; i < 3; ++i)
            if (!detail::parse_double(fields[i], row[i]))
                throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                         ": malformed number '" + std::string(fields[i]) +
                                         "'");
        if (!rows.empty() && row[0] <= rows.back()[0])
            throw std::runtime_error(origin + ":" + std::to_string(line_no) +
                                     ": frequencies must be strictly increasing");
        rows.push_back(row);
    }
    if (rows.empty()) throw std::runtime_error(origin + ": no data rows");
    return rows;
}

inline std::vector<std::array<double, 3>> read_source_spectrum_file(const std::string& path) {
    return read_source_spectrum_csv(detail::read_file(path), path);
}

/// dB variance spectra of all four Stokes parameters:
/// `freq_hz,v0_db,v1_db,v2_db,v3_db`, dB with 3 decimals.
inline std::string stokes_spectra_csv(const std::vector<StokesStats>& spectrum) {
    std::string out = "freq_hz,v0_db,v1_db,v2_db,v3_db\n";
    for (const StokesStats& s : spectrum) {
        out += detail::format_double(s.frequency_hz);
        for (std::size_t j = 0; j < 4; ++j) {
            out += ',';
            out += detail::format_fixed(
                10.0 * std::log10(s.variances[j] / s.shot_noise), 3);
        }
        out += '\n';
    }
    return out;
}

/// Single-measurement spectrum: absolute variance plus dB relative to the
/// reference. Optional Monte-Carlo verification columns.
struct MeasurementColumns {
    FrequencyGrid frequencies;
    std::vector<double> variance;
    double reference = 1.0;
    // present when oracle verification ran
    std::vector<double> mc_variance;
    std::vector<double> mc_std_error;
};

inline std::string measurement_csv(const MeasurementColumns& cols) {
    const bool with_mc = !cols.mc_variance.empty();
    std::string out = with_mc
                          ? "freq_hz,variance,variance_db,mc_variance,mc_std_error,z\n"
                          : "freq_hz,variance,variance_db\n";
    for (std::size_t i = 0; i < cols.frequencies.size(); ++i) {
        out += detail::format_double(cols.frequencies[i]);
        out += ',';
        out += detail::format_double(cols.variance[i]);
        out += ',';
        out += detail::format_fixed(10.0 * std::log10(cols.variance[i] / cols.reference), 3);
        if (with_mc) {
            const double z =
                (cols.mc_variance[i] - cols.variance[i]) / cols.mc_std_error[i];
            out += ',';
            out += detail::format_double(cols.mc_variance[i]);
            out += ',';
            out += detail::format_double(cols.mc_std_error[i]);
            out += ',';
            out += detail::format_fixed(z, 3);
        }
        out += '\n';
    }
    return out;
}

/// Generic dB spectrum (spectra-module output format).
inline std::string db_spectrum_csv(const NoiseSpectrum& spectrum) {
    if (!spectrum.is_db)
        throw std::invalid_argument("spectrum must be normalized to dB first");
    std::string out = "freq_hz,v_db\n";
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        out += detail::format_double(spectrum.frequencies[i]);
        out += ',';
        out += detail::format_fixed(spectrum.values[i], 3);
        out += '\n';
    }
    return out;
}

}  // namespace sqz
