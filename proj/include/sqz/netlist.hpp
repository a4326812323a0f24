#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sqz/gaussian.hpp"

// Optical-circuit description language. Line-oriented: one statement per
// line, `key=value` arguments, `#` comments, and a single block construct
// (sweep ... end). The parser collects every diagnostic instead of stopping
// at the first problem, and the formatter reprints values exactly as typed,
// so formatting parsed text is idempotent.
//
// See the EBNF in the repository README for the grammar.

namespace sqz::nl {

enum class Severity { Error, Warning };

enum class DiagCode {
    UnknownStatement,
    UnknownArgument,
    DuplicateArgument,
    MissingArgument,
    MalformedNumber,
    UnknownUnit,
    BadValue,
    UnknownReference,
    ForwardReference,
    DuplicateName,
    MultipleCombine,
    MissingCombine,
    ElementBeforeCombine,
    UnknownSetup,
    UnknownSourceKind,
    MissingGrid,
    DuplicateStatement,
    UnterminatedSweep,
    EndOutsideSweep,
    NestedSweep,
    NotAllowedInSweep,
    TableOutsideSweep,
    NothingToSimulate,
};

inline const char* to_string(DiagCode code) {
    switch (code) {
        case DiagCode::UnknownStatement: return "unknown-statement";
        case DiagCode::UnknownArgument: return "unknown-argument";
        case DiagCode::DuplicateArgument: return "duplicate-argument";
        case DiagCode::MissingArgument: return "missing-argument";
        case DiagCode::MalformedNumber: return "malformed-number";
        case DiagCode::UnknownUnit: return "unknown-unit";
        case DiagCode::BadValue: return "bad-value";
        case DiagCode::UnknownReference: return "unknown-reference";
        case DiagCode::ForwardReference: return "forward-reference";
        case DiagCode::DuplicateName: return "duplicate-name";
        case DiagCode::MultipleCombine: return "multiple-combine";
        case DiagCode::MissingCombine: return "missing-combine";
        case DiagCode::ElementBeforeCombine: return "element-before-combine";
        case DiagCode::UnknownSetup: return "unknown-setup";
        case DiagCode::UnknownSourceKind: return "unknown-source-kind";
        case DiagCode::MissingGrid: return "missing-grid";
        case DiagCode::DuplicateStatement: return "duplicate-statement";
        case DiagCode::UnterminatedSweep: return "unterminated-sweep";
        case DiagCode::EndOutsideSweep: return "end-outside-sweep";
        case DiagCode::NestedSweep: return "nested-sweep";
        case DiagCode::NotAllowedInSweep: return "not-allowed-in-sweep";
        case DiagCode::TableOutsideSweep: return "table-outside-sweep";
        case DiagCode::NothingToSimulate: return "nothing-to-simulate";
    }
    return "unknown";
}

struct Diagnostic {
    Severity severity = Severity::Error;
    std::size_t line = 0;    // 1-based
    std::size_t column = 0;  // 1-based
    DiagCode code = DiagCode::BadValue;
    std::string message;
    std::string hint;
};

/// One parsed line, kept verbatim enough to reprint canonically.
struct Statement {
    enum class Kind { Blank, Comment, Directive, Unparsed };
    Kind kind = Kind::Blank;
    std::string raw;  // Blank/Comment/Unparsed: the original line
    std::string keyword;
    std::vector<std::string> positional;
    std::vector<std::pair<std::string, std::string>> args;  // key, raw value
    std::size_t line = 0;
};

// ---------------------------------------------------------------------------
// Typed document
// ---------------------------------------------------------------------------

struct GridSpec {
    double start_hz = 0.0;
    double stop_hz = 0.0;
    std::size_t points = 0;
};

struct SourceSpec {
    enum class Kind { Coherent, Squeezer, Tabulated };
    std::string name;
    Kind kind = Kind::Coherent;
    double amplitude = 0.0;
    Quadrature quad = Quadrature::Amplitude;
    double v0 = 1.0;
    std::optional<double> corner_hz;
    double excess = 1.0;
    std::string file;
    std::size_t line = 0;
};

struct CombineSpec {
    std::string a, b;
    double theta = 0.0;
    std::size_t line = 0;
};

struct ElementSpec {
    enum class Kind { Waveplate, Loss, Phase, CorrelatedNoise };
    Kind kind = Kind::Loss;
    bool half_wave = true;      // waveplate
    double angle = 0.0;         // waveplate
    double eta = 1.0;           // loss
    double delta = 0.0;         // phase
    Quadrature quad = Quadrature::Amplitude;  // correlated_noise
    double excess = 0.0;
    int correlation = 1;
    std::size_t line = 0;
};

struct MeasureSpec {
    std::string setup;
    std::string out;
    double efficiency = 1.0;
    std::size_t line = 0;
};

struct EllipsoidSpec {
    double at_hz = 0.0;
    std::string out;
    std::size_t line = 0;
};

struct TableSpec {
    std::string out;
    std::optional<double> at_hz;
    std::size_t line = 0;
};

struct SweepSpec {
    enum class Var { Theta, Frequency };
    Var var = Var::Theta;
    double from = 0.0;
    double to = 0.0;
    std::size_t steps = 0;
    std::vector<TableSpec> tables;
    std::size_t line = 0;
};

struct NetlistDocument {
    std::vector<Statement> statements;
    std::optional<GridSpec> grid;
    std::vector<SourceSpec> sources;
    std::optional<CombineSpec> combine;
    std::vector<ElementSpec> elements;
    std::vector<MeasureSpec> measurements;
    std::vector<EllipsoidSpec> ellipsoids;
    std::optional<SweepSpec> sweep;

    const SourceSpec* find_source(std::string_view name) const {
        for (const auto& s : sources)
            if (s.name == name) return &s;
        return nullptr;
    }
};

struct ParseResult {
    NetlistDocument document;
    std::vector<Diagnostic> diagnostics;

    bool ok() const {
        return std::none_of(diagnostics.begin(), diagnostics.end(),
                            [](const Diagnostic& d) { return d.severity == Severity::Error; });
    }
};

// ---------------------------------------------------------------------------
// Parser internals
// ---------------------------------------------------------------------------

namespace detail {

struct Atom {
    std::string text;    // verbatim, quotes included for quoted atoms
    std::size_t column;  // 1-based
    bool is_equals = false;
    bool quoted = false;
};

inline std::vector<Atom> atomize(std::string_view line) {
    std::vector<Atom> atoms;
    std::size_t i = 0;
    while (i < line.size()) {
        const char c = line[i];
        if (c == ' ' || c == '\t') {
            ++i;
            continue;
        }
        if (c == '#') break;  // trailing comment
        if (c == '=') {
            atoms.push_back({"=", i + 1, true, false});
            ++i;
            continue;
        }
        if (c == '"') {
            const std::size_t start = i;
            ++i;
            while (i < line.size() && line[i] != '"') ++i;
            const bool closed = i < line.size();
            if (closed) ++i;
            atoms.push_back({std::string(line.substr(start, i - start)), start + 1,
                             false, true});
            continue;
        }
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '=' &&
               line[i] != '#')
            ++i;
        atoms.push_back({std::string(line.substr(start, i - start)), start + 1, false,
                         false});
    }
    return atoms;
}

struct Arg {
    std::string key;
    std::string value;  // raw text as typed
    std::size_t column; // of the key
    bool quoted = false;
};

struct LineParts {
    std::string keyword;
    std::size_t keyword_column = 0;
    std::vector<Atom> positional;
    std::vector<Arg> args;
    bool malformed = false;
    std::string malformed_what;
    std::size_t malformed_column = 0;
};

inline LineParts split_line(const std::vector<Atom>& atoms) {
    LineParts parts;
    if (atoms.empty()) return parts;
    parts.keyword = atoms[0].text;
    parts.keyword_column = atoms[0].column;
    std::size_t i = 1;
    while (i < atoms.size()) {
        if (atoms[i].is_equals) {
            parts.malformed = true;
            parts.malformed_what = "stray '='";
            parts.malformed_column = atoms[i].column;
            return parts;
        }
        if (i + 1 < atoms.size() && atoms[i + 1].is_equals) {
            if (i + 2 >= atoms.size() || atoms[i + 2].is_equals) {
                parts.malformed = true;
                parts.malformed_what = "argument '" + atoms[i].text + "' has no value";
                parts.malformed_column = atoms[i].column;
                return parts;
            }
            parts.args.push_back(
                {atoms[i].text, atoms[i + 2].text, atoms[i].column, atoms[i + 2].quoted});
            i += 3;
            continue;
        }
        if (!parts.args.empty()) {
            parts.malformed = true;
            parts.malformed_what =
                "positional token '" + atoms[i].text + "' after key=value arguments";
            parts.malformed_column = atoms[i].column;
            return parts;
        }
        parts.positional.push_back(atoms[i]);
        ++i;
    }
    return parts;
}

inline std::vector<std::string_view> split_list(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(text.substr(start));
            break;
        }
        out.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline bool parse_number_with_unit(std::string_view text, double& value,
                                   std::string& unit) {
    std::size_t split = text.size();
    while (split > 0 && (std::isalpha(static_cast<unsigned char>(text[split - 1])) != 0))
        --split;
    unit = std::string(text.substr(split));
    std::string_view num = text.substr(0, split);
    if (num.empty()) return false;
    const char* begin = num.data();
    if (*begin == '+') {  // from_chars rejects a leading plus sign
        ++begin;
        if (num.size() == 1) return false;
    }
    const char* end = num.data() + num.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    return ec == std::errc() && ptr == end;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// parse
// ---------------------------------------------------------------------------

class Parser {
  public:
    ParseResult run(std::string_view text) {
        result_ = ParseResult{};
        in_sweep_ = false;
        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const std::size_t eol = text.find('\n', pos);
            std::string_view line = text.substr(
                pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
            if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
            ++line_no;
            if (eol == std::string_view::npos && line.empty() && pos == text.size()) break;
            parse_line(line, line_no);
            if (eol == std::string_view::npos) break;
            pos = eol + 1;
        }
        finish();
        return std::move(result_);
    }

  private:
    ParseResult result_;
    bool in_sweep_ = false;
    std::size_t sweep_line_ = 0;

    NetlistDocument& doc() { return result_.document; }

    void diag(Severity sev, std::size_t line, std::size_t col, DiagCode code,
              std::string message, std::string hint = {}) {
        result_.diagnostics.push_back(
            {sev, line, col, code, std::move(message), std::move(hint)});
    }

    void error(std::size_t line, std::size_t col, DiagCode code, std::string message,
               std::string hint = {}) {
        diag(Severity::Error, line, col, code, std::move(message), std::move(hint));
    }

    // ---- argument helpers ----------------------------------------------

    struct ArgSet {
        const detail::LineParts* parts;
        std::size_t line;
        Parser* parser;
        std::vector<std::string> allowed;
        std::vector<bool> consumed;

        ArgSet(const detail::LineParts& p, std::size_t ln, Parser* ps,
               std::vector<std::string> keys)
            : parts(&p), line(ln), parser(ps), allowed(std::move(keys)),
              consumed(p.args.size(), false) {}

        const detail::Arg* find(const std::string& key) {
            const detail::Arg* found = nullptr;
            for (std::size_t i = 0; i < parts->args.size(); ++i) {
                if (parts->args[i].key != key) continue;
                if (found != nullptr) {
                    parser->error(line, parts->args[i].column, DiagCode::DuplicateArgument,
                                  "duplicate argument '" + key + "'");
                } else {
                    found = &parts->args[i];
                }
                consumed[i] = true;
            }
            return found;
        }

        /// call after all find()s: flags unknown keys
        void finish() {
            for (std::size_t i = 0; i < parts->args.size(); ++i) {
                if (consumed[i]) continue;
                std::string expected;
                for (const auto& k : allowed) {
                    if (!expected.empty()) expected += ", ";
                    expected += k;
                }
                parser->error(line, parts->args[i].column, DiagCode::UnknownArgument,
                              "unknown argument '" + parts->args[i].key + "'",
                              "expected one of: " + expected);
            }
        }
    };

    bool require(ArgSet& args, const std::string& key, const detail::Arg*& out) {
        out = args.find(key);
        if (out == nullptr) {
            error(args.line, args.parts->keyword_column, DiagCode::MissingArgument,
                  "missing required argument '" + key + "'");
            return false;
        }
        return true;
    }

    bool number_value(const detail::Arg& arg, std::size_t line, double& value) {
        std::string unit;
        if (!detail::parse_number_with_unit(arg.value, value, unit)) {
            error(line, arg.column, DiagCode::MalformedNumber,
                  "malformed number '" + arg.value + "' for '" + arg.key + "'");
            return false;
        }
        if (!unit.empty()) {
            error(line, arg.column, DiagCode::UnknownUnit,
                  "'" + arg.key + "' takes a plain number, got unit '" + unit + "'");
            return false;
        }
        return true;
    }

    bool angle_value(const detail::Arg& arg, std::size_t line, double& radians) {
        double value = 0.0;
        std::string unit;
        if (!detail::parse_number_with_unit(arg.value, value, unit)) {
            error(line, arg.column, DiagCode::MalformedNumber,
                  "malformed angle '" + arg.value + "' for '" + arg.key + "'");
            return false;
        }
        if (unit == "rad") {
            radians = value;
        } else if (unit == "deg") {
            // divide first: quadrant angles land on exact doubles (90 -> pi/2)
            radians = (value / 180.0) * std::numbers::pi;
        } else {
            error(line, arg.column, DiagCode::UnknownUnit,
                  "angle '" + arg.key + "' needs a unit, got '" + arg.value + "'",
                  "append rad or deg");
            return false;
        }
        return true;
    }

    bool freq_value(const detail::Arg& arg, std::size_t line, double& hz) {
        double value = 0.0;
        std::string unit;
        if (!detail::parse_number_with_unit(arg.value, value, unit)) {
            error(line, arg.column, DiagCode::MalformedNumber,
                  "malformed frequency '" + arg.value + "' for '" + arg.key + "'");
            return false;
        }
        double scale = 1.0;
        if (unit.empty() || unit == "hz") scale = 1.0;
        else if (unit == "khz") scale = 1e3;
        else if (unit == "mhz") scale = 1e6;
        else if (unit == "ghz") scale = 1e9;
        else {
            error(line, arg.column, DiagCode::UnknownUnit,
                  "unknown frequency unit '" + unit + "'", "use hz, khz, mhz or ghz");
            return false;
        }
        hz = value * scale;
        if (!(hz > 0.0)) {
            error(line, arg.column, DiagCode::BadValue,
                  "'" + arg.key + "' must be a positive frequency");
            return false;
        }
        return true;
    }

    bool int_value(const detail::Arg& arg, std::size_t line, long long& out) {
        double value = 0.0;
        if (!number_value(arg, line, value)) return false;
        if (value != std::floor(value) || std::abs(value) > 1e15) {
            error(line, arg.column, DiagCode::BadValue,
                  "'" + arg.key + "' must be an integer");
            return false;
        }
        out = static_cast<long long>(value);
        return true;
    }

    bool quad_value(const detail::Arg& arg, std::size_t line, Quadrature& out) {
        if (arg.value == "amplitude") out = Quadrature::Amplitude;
        else if (arg.value == "phase") out = Quadrature::Phase;
        else {
            error(line, arg.column, DiagCode::BadValue,
                  "'" + arg.key + "' must be amplitude or phase");
            return false;
        }
        return true;
    }

    static std::string unquote(const detail::Arg& arg) {
        if (arg.quoted && arg.value.size() >= 2 && arg.value.front() == '"' &&
            arg.value.back() == '"')
            return arg.value.substr(1, arg.value.size() - 2);
        return arg.value;
    }

    // ---- statements ------------------------------------------------------

    void keep_unparsed(std::string_view line, std::size_t line_no) {
        Statement st;
        st.kind = Statement::Kind::Unparsed;
        st.raw = std::string(line);
        st.line = line_no;
        doc().statements.push_back(std::move(st));
    }

    Statement make_statement(const detail::LineParts& parts, std::size_t line_no) {
        Statement st;
        st.kind = Statement::Kind::Directive;
        st.keyword = parts.keyword;
        for (const auto& p : parts.positional) st.positional.push_back(p.text);
        for (const auto& a : parts.args) st.args.emplace_back(a.key, a.value);
        st.line = line_no;
        return st;
    }

    void parse_line(std::string_view line, std::size_t line_no) {
        // blank / comment lines survive formatting verbatim
        const std::size_t first =
            line.find_first_not_of(" \t");
        if (first == std::string_view::npos) {
            doc().statements.push_back({Statement::Kind::Blank, std::string(line), "", {},
                                        {}, line_no});
            return;
        }
        if (line[first] == '#') {
            doc().statements.push_back({Statement::Kind::Comment, std::string(line), "",
                                        {}, {}, line_no});
            return;
        }

        const auto atoms = detail::atomize(line);
        const auto parts = detail::split_line(atoms);
        if (parts.malformed) {
            error(line_no, parts.malformed_column, DiagCode::UnknownArgument,
                  parts.malformed_what);
            keep_unparsed(line, line_no);
            return;
        }

        const std::size_t before = result_.diagnostics.size();
        const bool dispatched = dispatch(parts, line_no);
        const bool had_errors = std::any_of(
            result_.diagnostics.begin() + static_cast<std::ptrdiff_t>(before),
            result_.diagnostics.end(),
            [](const Diagnostic& d) { return d.severity == Severity::Error; });
        if (!dispatched || had_errors)
            keep_unparsed(line, line_no);
        else
            doc().statements.push_back(make_statement(parts, line_no));
    }

    /// true if the keyword was recognized (independent of arg validity)
    bool dispatch(const detail::LineParts& parts, std::size_t line_no) {
        const std::string& kw = parts.keyword;
        if (in_sweep_ && kw != "table" && kw != "end" && kw != "sweep") {
            error(line_no, parts.keyword_column, DiagCode::NotAllowedInSweep,
                  "statement '" + kw + "' is not allowed inside a sweep block",
                  "only table lines may appear between sweep and end");
            return true;
        }
        if (kw == "grid") return parse_grid(parts, line_no);
        if (kw == "source") return parse_source(parts, line_no);
        if (kw == "pbs_combine") return parse_combine(parts, line_no);
        if (kw == "waveplate") return parse_waveplate(parts, line_no);
        if (kw == "loss") return parse_loss(parts, line_no);
        if (kw == "phase") return parse_phase(parts, line_no);
        if (kw == "correlated_noise") return parse_correlated_noise(parts, line_no);
        if (kw == "measure") return parse_measure(parts, line_no);
        if (kw == "ellipsoid") return parse_ellipsoid(parts, line_no);
        if (kw == "sweep") return parse_sweep(parts, line_no);
        if (kw == "table") return parse_table(parts, line_no);
        if (kw == "end") return parse_end(parts, line_no);
        error(line_no, parts.keyword_column, DiagCode::UnknownStatement,
              "unknown statement '" + kw + "'");
        return false;
    }

    bool check_positional(const detail::LineParts& parts, std::size_t line_no,
                          std::size_t expected, const char* what) {
        if (parts.positional.size() == expected) return true;
        error(line_no, parts.keyword_column, DiagCode::MissingArgument,
              std::string("'") + parts.keyword + "' expects " + what);
        return false;
    }

    bool parse_grid(const detail::LineParts& parts, std::size_t line_no) {
        if (!check_positional(parts, line_no, 0, "no positional tokens")) return true;
        ArgSet args(parts, line_no, this, {"start", "stop", "points"});
        const detail::Arg *a_start, *a_stop, *a_points;
        bool ok = require(args, "start", a_start);
        ok &= require(args, "stop", a_stop);
        ok &= require(args, "points", a_points);
        args.finish();
        if (!ok) return true;
        GridSpec g;
        long long points = 0;
        if (!freq_value(*a_start, line_no, g.start_hz) ||
            !freq_value(*a_stop, line_no, g.stop_hz) ||
            !int_value(*a_points, line_no, points))
            return true;
        if (points < 2) {
            error(line_no, a_points->column, DiagCode::BadValue,
                  "'points' must be at least 2");
            return true;
        }
        if (!(g.stop_hz > g.start_hz)) {
            error(line_no, a_stop->column, DiagCode::BadValue,
                  "'stop' must be greater than 'start'");
            return true;
        }
        g.points = static_cast<std::size_t>(points);
        if (doc().grid) {
            error(line_no, parts.keyword_column, DiagCode::DuplicateStatement,
                  "grid already declared");
            return true;
        }
        doc().grid = g;
        return true;
    }

    bool parse_source(const detail::LineParts& parts, std::size_t line_no) {
        if (!check_positional(parts, line_no, 2, "a name and a kind")) return true;
        SourceSpec src;
        src.name = parts.positional[0].text;
        src.line = line_no;
        const std::string& kind = parts.positional[1].text;
        if (doc().find_source(src.name) != nullptr) {
            error(line_no, parts.positional[0].column, DiagCode::DuplicateName,
                  "source '" + src.name + "' already declared");
            return true;
        }
        if (kind == "coherent") {
            src.kind = SourceSpec::Kind::Coherent;
            ArgSet args(parts, line_no, this, {"amplitude"});
            const detail::Arg* a_amp;
            bool ok = require(args, "amplitude", a_amp);
            args.finish();
            if (!ok || !number_value(*a_amp, line_no, src.amplitude)) return true;
            if (src.amplitude < 0.0) {
                error(line_no, a_amp->column, DiagCode::BadValue,
                      "'amplitude' must be >= 0");
                return true;
            }
        } else if (kind == "squeezer") {
            src.kind = SourceSpec::Kind::Squeezer;
            ArgSet args(parts, line_no, this,
                        {"amplitude", "quad", "v0", "corner", "excess"});
            const detail::Arg *a_amp, *a_quad, *a_v0;
            bool ok = require(args, "amplitude", a_amp);
            ok &= require(args, "quad", a_quad);
            ok &= require(args, "v0", a_v0);
            const detail::Arg* a_corner = args.find("corner");
            const detail::Arg* a_excess = args.find("excess");
            args.finish();
            if (!ok) return true;
            if (!number_value(*a_amp, line_no, src.amplitude) ||
                !quad_value(*a_quad, line_no, src.quad) ||
                !number_value(*a_v0, line_no, src.v0))
                return true;
            if (src.amplitude < 0.0) {
                error(line_no, a_amp->column, DiagCode::BadValue,
                      "'amplitude' must be >= 0");
                return true;
            }
            if (!(src.v0 > 0.0) || src.v0 > 1.0) {
                error(line_no, a_v0->column, DiagCode::BadValue,
                      "'v0' must be in (0, 1]");
                return true;
            }
            if (a_corner != nullptr) {
                double corner = 0.0;
                if (!freq_value(*a_corner, line_no, corner)) return true;
                src.corner_hz = corner;
            }
            if (a_excess != nullptr) {
                if (!number_value(*a_excess, line_no, src.excess)) return true;
                if (src.excess < 1.0) {
                    error(line_no, a_excess->column, DiagCode::BadValue,
                          "'excess' must be >= 1");
                    return true;
                }
            }
        } else if (kind == "tabulated") {
            src.kind = SourceSpec::Kind::Tabulated;
            ArgSet args(parts, line_no, this, {"amplitude", "file"});
            const detail::Arg *a_amp, *a_file;
            bool ok = require(args, "amplitude", a_amp);
            ok &= require(args, "file", a_file);
            args.finish();
            if (!ok || !number_value(*a_amp, line_no, src.amplitude)) return true;
            if (src.amplitude < 0.0) {
                error(line_no, a_amp->column, DiagCode::BadValue,
                      "'amplitude' must be >= 0");
                return true;
            }
            src.file = unquote(*a_file);
        } else {
            error(line_no, parts.positional[1].column, DiagCode::UnknownSourceKind,
                  "unknown source kind '" + kind + "'",
                  "expected coherent, squeezer or tabulated");
            return true;
        }
        doc().sources.push_back(std::move(src));
        return true;
    }

    bool parse_combine(const detail::LineParts& parts, std::size_t line_no) {
        if (!check_positional(parts, line_no, 0, "no positional tokens")) return true;
        ArgSet args(parts, line_no, this, {"a", "b", "theta"});
        const detail::Arg *a_a, *a_b, *a_theta;
        bool ok = require(args, "a", a_a);
        ok &= require(args, "b", a_b);
        ok &= require(args, "theta", a_theta);
        args.finish();
        if (!ok) return true;
        CombineSpec combine;
        combine.line = line_no;
        combine.a = a_a->value;
        combine.b = a_b->value;
        if (!angle_value(*a_theta, line_no, combine.theta)) return true;
        if (doc().combine) {
            error(line_no, parts.keyword_column, DiagCode::MultipleCombine,
                  "only one pbs_combine may produce the measured state");
            return true;
        }
        doc().combine = combine;
        return true;
    }

    bool element_position_ok(const detail::LineParts& parts, std::size_t line_no) {
        if (doc().combine) return true;
        error(line_no, parts.keyword_column, DiagCode::ElementBeforeCombine,
              "'" + parts.keyword + "' must come after pbs_combine",
              "elements act on the combined two-mode beam");
        return false;
    }

    bool parse_waveplate(const detail::LineParts& parts, std::size_t line_no) {
        if (!check_positional(parts, line_no, 0, "no positional tokens")) return true;
        ArgSet args(parts, line_no, this, {"kind", "angle"});
        const detail::Arg *a_kind, *a_angle;
        bool ok = require(args, "kind", a_kind);
        ok &= require(args, "angle", a_angle);
        args.finish();
        if (!ok) return true;
        ElementSpec el;
        el.kind = ElementSpec::Kind::Waveplate;
        el.line = line_no;
        if (a_kind->value == "half") el.half_wave = true;
        else if (a_kind->value == "quarter") el.half_wave = false;
        else {
            error(line_no, a_kind->column, DiagCode::BadValue,
                  "'kind' must be half or quarter");
            return true;
        }
        if (!angle_value(*a_angle, line_no, el.angle)) return true;
        if (!element_position_ok(parts, line_no)) return true;
        doc().elements.push_back(el);
        return true;
    }

    bool parse_loss(const detail::LineParts& parts, std::size_t line_no) {
        if (!check_positional(parts, line_no, 0, "no positional tokens")) return true;
        ArgSet args(parts, line_no, this, {"eta", "losses"});
        const detail::Arg* a_eta = args.find("eta");
        const detail::Arg* a_losses = args.find("losses");
        args.finish();
        if (a_eta == nullptr && a_losses == nullptr) {
            error(line_no, parts.keyword_column, DiagCode::MissingArgument,
                  "loss needs either 'eta' or 'losses'");
            return true;
        }
        ElementSpec el;
        el.kind = ElementSpec::Kind::Loss;
        el.line = line_no;
        if (a_eta != nullptr) {
            if (!number_value(*a_eta, line_no, el.eta)) return true;
            if (!(el.eta > 0.0) || el.eta > 1.0) {
                error(line_no, a_eta->column, DiagCode::BadValue,
                      "'eta' must be in (0, 1]");
                return true;
            }
        }
        if (a_losses != nullptr) {
            double eta = 1.0;
            for (const auto part : detail::split_list(a_losses->value)) {
                double l = 0.0;
                std::string unit;
                if (!detail::parse_number_with_unit(part, l, unit) || !unit.empty()) {
                    error(line_no, a_losses->column, DiagCode::MalformedNumber,
                          "malformed loss list '" + a_losses->value + "'");
                    return true;
                }
                if (!(l >= 0.0) || l >= 1.0) {
                    error(line_no, a_losses->column, DiagCode::BadValue,
                          "each loss must be in [0, 1)");
                    return true;
                }
                eta *= 1.0 - l;
            }
            el.eta *= eta;
        }
        if (!element_position_ok(parts, line_no)) return true;
        doc().elements.push_back(el);
        return true;
    }

    bool parse_phase(const detail::LineParts& parts, std::size_t line_no) {
        if (!check_positional(parts, line_no, 0, "no positional tokens")) return true;
        ArgSet args(parts, line_no, this, {"delta"});
        const detail::Arg* a_delta;
        bool ok = require(args, "delta", a_delta);
        args.finish();
        if (!ok) return true;
        ElementSpec el;
        el.kind = ElementSpec::Kind::Phase;
        el.line = line_no;
        if (!angle_value(*a_delta, line_no, el.delta)) return true;
        if (!element_position_ok(parts, line_no)) return true;
        doc().elements.push_back(el);
        return true;
    }

    bool parse_correlated_noise(const detail::LineParts& parts, std::size_t line_no) {
        if (!check_positional(parts, line_no, 0, "no positional tokens")) return true;
        ArgSet args(parts, line_no, this, {"quad", "excess", "correlation"});
        const detail::Arg *a_quad, *a_excess, *a_corr;
        bool ok = require(args, "quad", a_quad);
        ok &= require(args, "excess", a_excess);
        ok &= require(args, "correlation", a_corr);
        args.finish();
        if (!ok) return true;
        ElementSpec el;
        el.kind = ElementSpec::Kind::CorrelatedNoise;
        el.line = line_no;
        if (!quad_value(*a_quad, line_no, el.quad) ||
            !number_value(*a_excess, line_no, el.excess))
            return true;
        if (el.excess < 0.0) {
            error(line_no, a_excess->column, DiagCode::BadValue,
                  "'excess' must be >= 0");
            return true;
        }
        double corr = 0.0;
        if (!number_value(*a_corr, line_no, corr)) return true;
        if (corr != 1.0 && corr != -1.0) {
            error(line_no, a_corr->column, DiagCode::BadValue,
                  "'correlation' must be +1 or -1");
            return true;
        }
        el.correlation = corr > 0 ? 1 : -1;
        if (!element_position_ok(parts, line_no)) return true;
        doc().elements.push_back(el);
        return true;
    }

    bool parse_measure(const detail::LineParts& parts, std::size_t line_no) {
        if (!check_positional(parts, line_no, 1, "a setup name (S0..S3)")) return true;
        MeasureSpec ms;
        ms.setup = parts.positional[0].text;
        ms.line = line_no;
        if (ms.setup != "S0" && ms.setup != "S1" && ms.setup != "S2" && ms.setup != "S3") {
            error(line_no, parts.positional[0].column, DiagCode::UnknownSetup,
                  "unknown setup '" + ms.setup + "'", "expected S0, S1, S2 or S3");
            return true;
        }
        ArgSet args(parts, line_no, this, {"out", "efficiency"});
        const detail::Arg* a_out;
        bool ok = require(args, "out", a_out);
        const detail::Arg* a_eff = args.find("efficiency");
        args.finish();
        if (!ok) return true;
        ms.out = unquote(*a_out);
        if (a_eff != nullptr) {
            if (!number_value(*a_eff, line_no, ms.efficiency)) return true;
            if (!(ms.efficiency > 0.0) || ms.efficiency > 1.0) {
                error(line_no, a_eff->column, DiagCode::BadValue,
                      "'efficiency' must be in (0, 1]");
                return true;
            }
        }
        doc().measurements.push_back(std::move(ms));
        return true;
    }

    bool parse_ellipsoid(const detail::LineParts& parts, std::size_t line_no) {
        if (!check_positional(parts, line_no, 0, "no positional tokens")) return true;
        ArgSet args(parts, line_no, this, {"at", "out"});
        const detail::Arg *a_at, *a_out;
        bool ok = require(args, "at", a_at);
        ok &= require(args, "out", a_out);
        args.finish();
        if (!ok) return true;
        EllipsoidSpec es;
        es.line = line_no;
        if (!freq_value(*a_at, line_no, es.at_hz)) return true;
        es.out = unquote(*a_out);
        doc().ellipsoids.push_back(std::move(es));
        return true;
    }

    bool parse_sweep(const detail::LineParts& parts, std::size_t line_no) {
        if (in_sweep_) {
            error(line_no, parts.keyword_column, DiagCode::NestedSweep,
                  "sweep blocks cannot nest");
            return true;
        }
        if (!check_positional(parts, line_no, 1, "a variable (theta or frequency)"))
            return true;
        SweepSpec sw;
        sw.line = line_no;
        const std::string& var = parts.positional[0].text;
        if (var == "theta") sw.var = SweepSpec::Var::Theta;
        else if (var == "frequency") sw.var = SweepSpec::Var::Frequency;
        else {
            error(line_no, parts.positional[0].column, DiagCode::BadValue,
                  "sweep variable must be theta or frequency");
            return true;
        }
        ArgSet args(parts, line_no, this, {"from", "to", "steps"});
        const detail::Arg *a_from, *a_to, *a_steps;
        bool ok = require(args, "from", a_from);
        ok &= require(args, "to", a_to);
        ok &= require(args, "steps", a_steps);
        args.finish();
        if (!ok) return true;
        if (sw.var == SweepSpec::Var::Theta) {
            if (!angle_value(*a_from, line_no, sw.from) ||
                !angle_value(*a_to, line_no, sw.to))
                return true;
        } else {
            if (!freq_value(*a_from, line_no, sw.from) ||
                !freq_value(*a_to, line_no, sw.to))
                return true;
        }
        long long steps = 0;
        if (!int_value(*a_steps, line_no, steps)) return true;
        if (steps < 2) {
            error(line_no, a_steps->column, DiagCode::BadValue,
                  "'steps' must be at least 2");
            return true;
        }
        sw.steps = static_cast<std::size_t>(steps);
        if (doc().sweep) {
            error(line_no, parts.keyword_column, DiagCode::DuplicateStatement,
                  "sweep already declared");
            return true;
        }
        doc().sweep = std::move(sw);
        in_sweep_ = true;
        sweep_line_ = line_no;
        return true;
    }

    bool parse_table(const detail::LineParts& parts, std::size_t line_no) {
        if (!in_sweep_) {
            error(line_no, parts.keyword_column, DiagCode::TableOutsideSweep,
                  "'table' is only valid inside a sweep block");
            return true;
        }
        if (!check_positional(parts, line_no, 0, "no positional tokens")) return true;
        ArgSet args(parts, line_no, this, {"out", "at"});
        const detail::Arg* a_out;
        bool ok = require(args, "out", a_out);
        const detail::Arg* a_at = args.find("at");
        args.finish();
        if (!ok) return true;
        TableSpec table;
        table.line = line_no;
        table.out = unquote(*a_out);
        if (a_at != nullptr) {
            double hz = 0.0;
            if (!freq_value(*a_at, line_no, hz)) return true;
            table.at_hz = hz;
        }
        doc().sweep->tables.push_back(std::move(table));
        return true;
    }

    bool parse_end(const detail::LineParts& parts, std::size_t line_no) {
        if (!in_sweep_) {
            error(line_no, parts.keyword_column, DiagCode::EndOutsideSweep,
                  "'end' without an open sweep block");
            return true;
        }
        in_sweep_ = false;
        return true;
    }

    // ---- document-level checks ------------------------------------------

    void finish() {
        auto& d = doc();
        if (in_sweep_)
            error(sweep_line_, 1, DiagCode::UnterminatedSweep,
                  "sweep block is never closed", "add an end line");

        const bool has_outputs =
            !d.measurements.empty() || !d.ellipsoids.empty() || d.sweep.has_value();
        if (!has_outputs)
            diag(Severity::Warning, 0, 0, DiagCode::NothingToSimulate,
                 "nothing to simulate",
                 "add measure, ellipsoid or sweep statements");

        if ((has_outputs || !d.elements.empty()) && !d.combine.has_value() &&
            !d.sources.empty())
            error(0, 0, DiagCode::MissingCombine,
                  "no pbs_combine produces the measured state");

        if (!d.sources.empty() && !d.grid.has_value()) {
            bool needs_grid = false;
            for (const auto& s : d.sources)
                if (s.kind != SourceSpec::Kind::Tabulated) needs_grid = true;
            if (needs_grid)
                error(0, 0, DiagCode::MissingGrid,
                      "sources need a grid statement to evaluate their spectra");
        }

        // reference resolution: names must be declared before pbs_combine uses them
        if (d.combine) {
            for (const std::string* name : {&d.combine->a, &d.combine->b}) {
                const SourceSpec* src = d.find_source(*name);
                if (src == nullptr)
                    error(d.combine->line, 1, DiagCode::UnknownReference,
                          "source '" + *name + "' is never declared");
                else if (src->line > d.combine->line)
                    error(d.combine->line, 1, DiagCode::ForwardReference,
                          "source '" + *name + "' is declared after its use",
                          "move the source declaration above pbs_combine");
            }
        }
    }
};

inline ParseResult parse(std::string_view text) { return Parser{}.run(text); }

// ---------------------------------------------------------------------------
// format
// ---------------------------------------------------------------------------

/// Canonical text: statements with single-space token separation and bare
/// `key=value` arguments; raw values are reprinted exactly as typed. Blank,
/// comment and unparseable lines pass through verbatim.
inline std::string format(const NetlistDocument& document) {
    std::string out;
    for (const Statement& st : document.statements) {
        switch (st.kind) {
            case Statement::Kind::Blank:
            case Statement::Kind::Comment:
            case Statement::Kind::Unparsed:
                out += st.raw;
                break;
            case Statement::Kind::Directive: {
                out += st.keyword;
                for (const auto& p : st.positional) {
                    out += ' ';
                    out += p;
                }
                for (const auto& [key, value] : st.args) {
                    out += ' ';
                    out += key;
                    out += '=';
                    out += value;
                }
                break;
            }
        }
        out += '\n';
    }
    return out;
}

}  // namespace sqz::nl
