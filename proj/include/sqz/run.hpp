#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "sqz/apparatus.hpp"
#include "sqz/csv.hpp"
#include "sqz/gaussian.hpp"
#include "sqz/netlist.hpp"
#include "sqz/oracle.hpp"
#include "sqz/stokes.hpp"

// Compiles parsed netlists into states, runs measurements and sweeps, and
// writes the CSV/JSON artifacts plus a reproducibility manifest.

namespace sqz::nl {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunOptions {
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = ".";
    std::filesystem::path input_dir = ".";  // for tabulated source files
    std::string format = "csv";             // csv | json
    bool oracle = false;
    std::uint64_t oracle_samples = 200'000;
    unsigned oracle_threads = 1;
    double oracle_sigma_gate = 5.0;
};

struct RunResult {
    std::vector<std::string> written;
    bool oracle_enabled = false;
    double oracle_max_abs_z = 0.0;
    bool oracle_pass = true;
    nlohmann::ordered_json manifest;
};

namespace detail {

inline std::runtime_error at_line(std::size_t line, const std::string& what) {
    return std::runtime_error("netlist line " + std::to_string(line) + ": " + what);
}

inline std::uint64_t fnv1a64(std::string_view text) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (const char c : text) {
        hash ^= static_cast<unsigned char>(c);
        hash *= 0x100000001b3ull;
    }
    return hash;
}

inline std::string hex64(std::uint64_t value) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

inline std::size_t nearest_index(const FrequencyGrid& grid, double freq_hz) {
    std::size_t best = 0;
    double best_dist = std::abs(grid[0] - freq_hz);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double dist = std::abs(grid[i] - freq_hz);
        if (dist < best_dist) {
            best = i;
            best_dist = dist;
        }
    }
    return best;
}

}  // namespace detail

inline FrequencyGrid resolve_grid(const NetlistDocument& document,
                                  const std::filesystem::path& input_dir) {
    if (document.grid)
        return make_grid(document.grid->start_hz, document.grid->stop_hz,
                         document.grid->points);
    for (const SourceSpec& src : document.sources) {
        if (src.kind != SourceSpec::Kind::Tabulated) continue;
        const auto rows = read_source_spectrum_file((input_dir / src.file).string());
        FrequencyGrid grid;
        grid.reserve(rows.size());
        for (const auto& row : rows) grid.push_back(row[0]);
        return grid;
    }
    throw std::runtime_error("document declares no grid and no tabulated source");
}

inline BeamMode build_source(const SourceSpec& src, const FrequencyGrid& grid,
                             const std::filesystem::path& input_dir) {
    try {
        switch (src.kind) {
            case SourceSpec::Kind::Coherent:
                return make_coherent(src.amplitude, grid);
            case SourceSpec::Kind::Squeezer: {
                const SqueezeSpectrum model =
                    src.corner_hz ? SqueezeSpectrum::lorentzian(src.v0, *src.corner_hz,
                                                                src.excess)
                                  : SqueezeSpectrum::flat(src.v0, src.excess);
                return make_squeezed(src.amplitude, src.quad, model, grid);
            }
            case SourceSpec::Kind::Tabulated: {
                const auto rows =
                    read_source_spectrum_file((input_dir / src.file).string());
                std::vector<std::array<double, 3>> points(rows.begin(), rows.end());
                return make_squeezed(src.amplitude, Quadrature::Amplitude,
                                     SqueezeSpectrum::tabulated(std::move(points)), grid);
            }
        }
        throw std::logic_error("unreachable source kind");
    } catch (const std::exception& e) {
        throw detail::at_line(src.line, e.what());
    }
}

/// Builds the measured two-mode state: sources, PBS combination, then the
/// ordered element chain. Errors carry the originating netlist line.
inline TwoModeState compile_state(const NetlistDocument& document,
                                  const std::filesystem::path& input_dir,
                                  std::optional<double> theta_override = {},
                                  std::optional<FrequencyGrid> grid_override = {}) {
    if (!document.combine) throw std::runtime_error("document has no pbs_combine");
    const FrequencyGrid grid =
        grid_override ? *grid_override : resolve_grid(document, input_dir);

    const SourceSpec* src_a = document.find_source(document.combine->a);
    const SourceSpec* src_b = document.find_source(document.combine->b);
    if (src_a == nullptr || src_b == nullptr)
        throw std::runtime_error("pbs_combine references undeclared sources");

    const BeamMode beam_a = build_source(*src_a, grid, input_dir);
    const BeamMode beam_b = build_source(*src_b, grid, input_dir);
    const double theta = theta_override.value_or(document.combine->theta);

    TwoModeState state = [&] {
        try {
            return combine_on_pbs(beam_a, beam_b, theta);
        } catch (const std::exception& e) {
            throw detail::at_line(document.combine->line, e.what());
        }
    }();

    for (const ElementSpec& el : document.elements) {
        try {
            switch (el.kind) {
                case ElementSpec::Kind::Waveplate:
                    state = apply_element(
                        state, waveplate_element(
                                   {el.half_wave ? PlateKind::Half : PlateKind::Quarter,
                                    el.angle}));
                    break;
                case ElementSpec::Kind::Loss:
                    state = apply_element(state, loss_element(el.eta));
                    break;
                case ElementSpec::Kind::Phase:
                    state = apply_element(state, phase_element(el.delta));
                    break;
                case ElementSpec::Kind::CorrelatedNoise:
                    state = add_correlated_classical_noise(state, el.quad, el.excess,
                                                           el.correlation);
                    break;
            }
        } catch (const std::exception& e) {
            throw detail::at_line(el.line, e.what());
        }
    }
    return state;
}

inline nlohmann::ordered_json ellipsoid_json(const NoiseEllipsoid& e) {
    nlohmann::ordered_json j;
    j["center"] = e.center;
    j["semi_axes"] = e.semi_axes;
    j["classification"] = to_string(e.shape);
    j["frequency_hz"] = e.frequency_hz;
    return j;
}

inline nlohmann::ordered_json oracle_report_json(const EmpiricalStokes& mc,
                                                 const StokesStats& analytic) {
    nlohmann::ordered_json j;
    j["means"] = mc.means;
    j["variances"] = mc.variances;
    j["std_errors"] = {{"means", mc.mean_std_error},
                       {"variances", mc.variance_std_error}};
    j["mode"] = to_string(mc.mode);
    j["seed"] = mc.seed;
    j["n"] = mc.sample_count;
    j["frequency_hz"] = mc.frequency_hz;
    j["analytic"] = {
        {"means",
         {analytic.means.s0, analytic.means.s1, analytic.means.s2, analytic.means.s3}},
        {"variances",
         {analytic.variances.v0, analytic.variances.v1, analytic.variances.v2,
          analytic.variances.v3}},
        {"shot_noise", analytic.shot_noise}};
    std::array<double, 4> z{};
    const std::array<double, 4> av{analytic.variances.v0, analytic.variances.v1,
                                   analytic.variances.v2, analytic.variances.v3};
    for (std::size_t k = 0; k < 4; ++k)
        z[k] = (mc.variances[k] - av[k]) / mc.variance_std_error[k];
    j["z_variances"] = z;
    return j;
}

namespace detail {

inline std::size_t setup_index(const std::string& name) {
    return static_cast<std::size_t>(name[1] - '0');
}

inline void write_artifact(const std::filesystem::path& path, const std::string& content,
                           RunResult& result) {
    std::filesystem::create_directories(path.parent_path().empty()
                                            ? std::filesystem::path(".")
                                            : path.parent_path());
    sqz::detail::write_file(path.string(), content);
    result.written.push_back(path.string());
}

}  // namespace detail

/// Executes every measurement and ellipsoid statement, writes the combined
/// Stokes dB spectra, per-measurement files, optional Monte-Carlo
/// verification columns, and the run manifest.
inline RunResult run(const NetlistDocument& document, const RunOptions& options) {
    RunResult result;
    result.oracle_enabled = options.oracle;
    const TwoModeState state = compile_state(document, options.input_dir);
    std::filesystem::create_directories(options.out_dir);

    // engine-level spectra of the measured state (ideal detection)
    if (!document.measurements.empty()) {
        const auto spectrum = stokes_spectrum(state);
        detail::write_artifact(options.out_dir / "stokes_spectra.csv",
                               stokes_spectra_csv(spectrum), result);
    }

    for (const MeasureSpec& ms : document.measurements) {
        const DetectionSetup setup = canonical_setup(ms.setup, ms.efficiency);
        const PhotocurrentStats stats = measure(setup, state);
        const double reference = ms.efficiency * state.photon_number();

        MeasurementColumns cols;
        cols.frequencies = stats.frequencies;
        cols.variance = stats.fluctuation_variance;
        cols.reference = reference;

        if (options.oracle) {
            TwoModeState detected = state;
            if (ms.efficiency < 1.0)
                detected = apply_element(state, loss_element(ms.efficiency));
            SampleConfig config;
            config.sample_count = options.oracle_samples;
            config.seed = options.seed;
            config.threads = options.oracle_threads;
            const std::size_t j = detail::setup_index(ms.setup);
            for (std::size_t k = 0; k < detected.frequencies.size(); ++k) {
                const EmpiricalStokes mc = sample_stokes(detected, k, config);
                cols.mc_variance.push_back(mc.variances[j]);
                cols.mc_std_error.push_back(mc.variance_std_error[j]);
                const double z =
                    (mc.variances[j] - stats.fluctuation_variance[k]) /
                    mc.variance_std_error[j];
                result.oracle_max_abs_z = std::max(result.oracle_max_abs_z, std::abs(z));
            }
        }

        if (options.format == "json") {
            nlohmann::ordered_json j;
            j["setup"] = ms.setup;
            j["efficiency"] = ms.efficiency;
            j["reference"] = reference;
            j["frequencies"] = cols.frequencies;
            j["variance"] = cols.variance;
            if (!cols.mc_variance.empty()) {
                j["mc_variance"] = cols.mc_variance;
                j["mc_std_error"] = cols.mc_std_error;
            }
            detail::write_artifact(options.out_dir / ms.out, j.dump(2) + "\n", result);
        } else {
            detail::write_artifact(options.out_dir / ms.out, measurement_csv(cols),
                                   result);
            const ShotNoiseCalibration cal = calibrate_shot_noise(reference);
            nlohmann::ordered_json sidecar;
            sidecar["setup"] = ms.setup;
            sidecar["efficiency"] = ms.efficiency;
            sidecar["reference"] = reference;
            sidecar["calibration_band_db"] = {{"computed", cal.computed_band_db},
                                              {"quoted", cal.quoted_band_db}};
            sidecar["band_hz"] = {state.frequencies.front(), state.frequencies.back()};
            detail::write_artifact(options.out_dir / (ms.out + ".meta.json"),
                                   sidecar.dump(2) + "\n", result);
        }
    }

    for (const EllipsoidSpec& es : document.ellipsoids) {
        const std::size_t k = detail::nearest_index(state.frequencies, es.at_hz);
        const NoiseEllipsoid e = classify_ellipsoid(stokes_stats(state, k));
        detail::write_artifact(options.out_dir / es.out, ellipsoid_json(e).dump(2) + "\n",
                               result);
    }

    if (options.oracle)
        result.oracle_pass = result.oracle_max_abs_z <= options.oracle_sigma_gate;

    nlohmann::ordered_json manifest;
    manifest["tool"] = "sqz";
    manifest["version"] = kToolVersion;
    manifest["config_hash"] =
        "fnv1a64:" + detail::hex64(detail::fnv1a64(format(document)));
    manifest["seed"] = options.seed;
    manifest["format"] = options.format;
    manifest["outputs"] = result.written;
    if (options.oracle) {
        manifest["oracle"] = {{"samples", options.oracle_samples},
                              {"sigma_gate", options.oracle_sigma_gate},
                              {"max_abs_z", result.oracle_max_abs_z},
                              {"pass", result.oracle_pass}};
    }
    result.manifest = manifest;
    detail::write_artifact(options.out_dir / "run_manifest.json",
                           manifest.dump(2) + "\n", result);
    return result;
}

// ---------------------------------------------------------------------------
// sweeps
// ---------------------------------------------------------------------------

struct SweepRow {
    double variable = 0.0;  // theta (rad) or frequency (Hz)
    StokesStats stats;
};

struct SweepTable {
    SweepSpec::Var var = SweepSpec::Var::Theta;
    std::vector<SweepRow> rows;
};

/// Stokes statistics versus theta on a uniform grid, evaluated at one
/// sideband frequency of the compiled state.
inline SweepTable sweep_theta(const NetlistDocument& document,
                              const std::filesystem::path& input_dir,
                              const std::vector<double>& thetas,
                              std::optional<double> at_hz = {}) {
    SweepTable table;
    table.var = SweepSpec::Var::Theta;
    for (const double theta : thetas) {
        const TwoModeState state = compile_state(document, input_dir, theta);
        const std::size_t k =
            at_hz ? detail::nearest_index(state.frequencies, *at_hz) : 0;
        table.rows.push_back({theta, stokes_stats(state, k)});
    }
    return table;
}

inline SweepTable sweep_frequency(const NetlistDocument& document,
                                  const std::filesystem::path& input_dir,
                                  double from_hz, double to_hz, std::size_t steps) {
    SweepTable table;
    table.var = SweepSpec::Var::Frequency;
    const TwoModeState state =
        compile_state(document, input_dir, {}, make_grid(from_hz, to_hz, steps));
    for (std::size_t k = 0; k < state.frequencies.size(); ++k)
        table.rows.push_back({state.frequencies[k], stokes_stats(state, k)});
    return table;
}

inline std::vector<double> uniform_sweep(double from, double to, std::size_t steps) {
    std::vector<double> out(steps);
    const double step = (to - from) / static_cast<double>(steps - 1);
    for (std::size_t i = 0; i < steps; ++i)
        out[i] = from + step * static_cast<double>(i);
    return out;
}

inline std::string sweep_csv(const SweepTable& table) {
    std::string out = table.var == SweepSpec::Var::Theta
                          ? "theta_rad,s0,s1,s2,s3,v0,v1,v2,v3,shot\n"
                          : "freq_hz,s0,s1,s2,s3,v0,v1,v2,v3,shot\n";
    for (const SweepRow& row : table.rows) {
        out += sqz::detail::format_double(row.variable);
        const auto& m = row.stats.means;
        const auto& v = row.stats.variances;
        for (const double value : {m.s0, m.s1, m.s2, m.s3, v.v0, v.v1, v.v2, v.v3,
                                   row.stats.shot_noise}) {
            out += ',';
            out += sqz::detail::format_double(value);
        }
        out += '\n';
    }
    return out;
}

/// Runs the document's sweep block, writing one table per `table` line.
inline RunResult run_sweep(const NetlistDocument& document, const RunOptions& options) {
    RunResult result;
    if (!document.sweep) throw std::runtime_error("document has no sweep block");
    const SweepSpec& sw = *document.sweep;
    std::filesystem::create_directories(options.out_dir);
    for (const TableSpec& spec : sw.tables) {
        SweepTable table;
        if (sw.var == SweepSpec::Var::Theta) {
            table = sweep_theta(document, options.input_dir,
                                uniform_sweep(sw.from, sw.to, sw.steps), spec.at_hz);
        } else {
            table = sweep_frequency(document, options.input_dir, sw.from, sw.to,
                                    sw.steps);
        }
        detail::write_artifact(options.out_dir / spec.out, sweep_csv(table), result);
    }
    return result;
}

}  // namespace sqz::nl
