#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "sqz/sqz.hpp"

// sqz: polarization-squeezing simulator CLI.
// Exit codes: 0 success, 1 netlist diagnostics, 2 runtime error.

namespace {

struct LoadedNetlist {
    sqz::nl::ParseResult parsed;
    std::filesystem::path path;
};

void print_diagnostics(const LoadedNetlist& loaded) {
    for (const auto& d : loaded.parsed.diagnostics) {
        std::cerr << loaded.path.filename().string();
        if (d.line > 0) {
            std::cerr << ':' << d.line;
            if (d.column > 0) std::cerr << ':' << d.column;
        }
        std::cerr << ": " << (d.severity == sqz::nl::Severity::Error ? "error" : "warning")
                  << '[' << sqz::nl::to_string(d.code) << "]: " << d.message;
        if (!d.hint.empty()) std::cerr << " (" << d.hint << ')';
        std::cerr << '\n';
    }
}

LoadedNetlist load(const std::string& path) {
    LoadedNetlist loaded;
    loaded.path = path;
    loaded.parsed = sqz::nl::parse(sqz::detail::read_file(path));
    return loaded;
}

/// loads and prints diagnostics; throws a sentinel when errors block a run
struct DiagnosticFailure {};

LoadedNetlist load_or_fail(const std::string& path) {
    LoadedNetlist loaded = load(path);
    print_diagnostics(loaded);
    if (!loaded.parsed.ok()) throw DiagnosticFailure{};
    return loaded;
}

std::filesystem::path input_dir(const LoadedNetlist& loaded) {
    const auto parent = loaded.path.parent_path();
    return parent.empty() ? std::filesystem::path(".") : parent;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Polarization-squeezing simulator for two-mode Gaussian beams"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    std::uint64_t seed = 0;
    std::string out_dir = ".";
    std::string format = "csv";
    app.add_option("--seed", seed, "Random seed for Monte-Carlo verification");
    app.add_option("--out-dir", out_dir, "Directory for output artifacts");
    app.add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}));

    std::string file;
    bool print_formatted = false;
    auto* cmd_parse = app.add_subcommand("parse", "Parse and check a netlist");
    cmd_parse->add_option("file", file, "Netlist file")->required();
    cmd_parse->add_flag("--print", print_formatted, "Print the canonical form");

    auto* cmd_run = app.add_subcommand("run", "Run a netlist's measurements");
    bool with_oracle = false;
    std::uint64_t samples = 200000;
    unsigned threads = 1;
    cmd_run->add_option("file", file, "Netlist file")->required();
    cmd_run->add_flag("--oracle", with_oracle,
                      "Verify every spectrum against the Monte-Carlo oracle (5-sigma gate)");
    cmd_run->add_option("--samples", samples, "Oracle sample count");
    cmd_run->add_option("--threads", threads, "Oracle sampling threads");

    auto* cmd_sweep = app.add_subcommand("sweep", "Run the netlist's sweep block");
    cmd_sweep->add_option("file", file, "Netlist file")->required();

    auto* cmd_oracle =
        app.add_subcommand("oracle", "Monte-Carlo report for the compiled state");
    std::string mode = "linearized";
    std::optional<double> at_hz;
    std::string oracle_out;
    cmd_oracle->add_option("file", file, "Netlist file")->required();
    cmd_oracle->add_option("--samples", samples, "Sample count");
    cmd_oracle->add_option("--threads", threads, "Sampling threads");
    cmd_oracle->add_option("--mode", mode, "Sampling mode")
        ->check(CLI::IsMember({"linearized", "quadratic"}));
    cmd_oracle->add_option("--at", at_hz, "Sideband frequency (Hz, nearest grid point)");
    cmd_oracle->add_option("--out", oracle_out, "Write the JSON report here");

    auto* cmd_ellipsoid =
        app.add_subcommand("ellipsoid", "Poincare noise ellipsoid of the compiled state");
    std::string ellipsoid_out;
    cmd_ellipsoid->add_option("file", file, "Netlist file")->required();
    cmd_ellipsoid->add_option("--at", at_hz, "Sideband frequency (Hz, nearest grid point)");
    cmd_ellipsoid->add_option("--out", ellipsoid_out, "Write the JSON here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_parse->parsed()) {
            LoadedNetlist loaded = load(file);
            print_diagnostics(loaded);
            if (print_formatted) std::cout << sqz::nl::format(loaded.parsed.document);
            return loaded.parsed.ok() ? 0 : 1;
        }

        sqz::nl::RunOptions options;
        options.seed = seed;
        options.out_dir = out_dir;
        options.format = format;
        options.oracle = with_oracle;
        options.oracle_samples = samples;
        options.oracle_threads = threads;

        if (cmd_run->parsed()) {
            LoadedNetlist loaded = load_or_fail(file);
            options.input_dir = input_dir(loaded);
            const sqz::nl::RunResult result =
                sqz::nl::run(loaded.parsed.document, options);
            for (const auto& path : result.written) std::cout << "wrote " << path << '\n';
            if (result.oracle_enabled) {
                std::cout << "oracle max |z| = " << result.oracle_max_abs_z << " -> "
                          << (result.oracle_pass ? "pass" : "FAIL") << '\n';
                if (!result.oracle_pass) return 2;
            }
            return 0;
        }

        if (cmd_sweep->parsed()) {
            LoadedNetlist loaded = load_or_fail(file);
            options.input_dir = input_dir(loaded);
            const sqz::nl::RunResult result =
                sqz::nl::run_sweep(loaded.parsed.document, options);
            for (const auto& path : result.written) std::cout << "wrote " << path << '\n';
            return 0;
        }

        if (cmd_oracle->parsed()) {
            LoadedNetlist loaded = load_or_fail(file);
            const sqz::TwoModeState state =
                sqz::nl::compile_state(loaded.parsed.document, input_dir(loaded));
            const std::size_t k =
                at_hz ? sqz::nl::detail::nearest_index(state.frequencies, *at_hz) : 0;
            sqz::SampleConfig config;
            config.sample_count = samples;
            config.seed = seed;
            config.threads = threads;
            config.mode = mode == "quadratic" ? sqz::SampleMode::FullQuadratic
                                              : sqz::SampleMode::Linearized;
            const sqz::EmpiricalStokes mc = sqz::sample_stokes(state, k, config);
            const auto report =
                sqz::nl::oracle_report_json(mc, sqz::stokes_stats(state, k));
            const std::string text = report.dump(2) + "\n";
            if (oracle_out.empty()) {
                std::cout << text;
            } else {
                const auto path = std::filesystem::path(out_dir) / oracle_out;
                std::filesystem::create_directories(std::filesystem::path(out_dir));
                sqz::detail::write_file(path.string(), text);
                std::cout << "wrote " << path.string() << '\n';
            }
            return 0;
        }

        if (cmd_ellipsoid->parsed()) {
            LoadedNetlist loaded = load_or_fail(file);
            const sqz::TwoModeState state =
                sqz::nl::compile_state(loaded.parsed.document, input_dir(loaded));
            const std::size_t k =
                at_hz ? sqz::nl::detail::nearest_index(state.frequencies, *at_hz) : 0;
            const sqz::NoiseEllipsoid e =
                sqz::classify_ellipsoid(sqz::stokes_stats(state, k));
            const std::string text = sqz::nl::ellipsoid_json(e).dump(2) + "\n";
            if (ellipsoid_out.empty()) {
                std::cout << text;
            } else {
                const auto path = std::filesystem::path(out_dir) / ellipsoid_out;
                std::filesystem::create_directories(std::filesystem::path(out_dir));
                sqz::detail::write_file(path.string(), text);
                std::cout << "wrote " << path.string() << '\n';
            }
            return 0;
        }
    } catch (const DiagnosticFailure&) {
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
