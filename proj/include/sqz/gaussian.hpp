#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sqz/linalg.hpp"

// Linearized two-mode Gaussian beams and affine/symplectic element maps.
//
// Conventions used throughout the library:
//  * a = alpha + (dX+ + i dX-) / 2, with alpha a real nonnegative coherent
//    amplitude in photon-flux units (alpha^2 = mean photon number of the
//    mode). dX+ is the amplitude quadrature, dX- the phase quadrature.
//  * A coherent beam has quadrature variance 1 in both quadratures; that
//    value is the shot-noise reference for everything downstream.
//  * Quadrature vectors and covariance matrices use the fixed index order
//    (X_H+, X_H-, X_V+, X_V-).
//  * Fluctuations are stored in each mode's own mean-phase frame (amplitude
//    quadrature along the mode's classical amplitude); the relative phase
//    between the H and V means is carried separately as theta.

namespace sqz {

enum class Quadrature { Amplitude, Phase };

inline const char* to_string(Quadrature q) {
    return q == Quadrature::Amplitude ? "amplitude" : "phase";
}

using FrequencyGrid = std::vector<double>;

inline void validate_grid(const FrequencyGrid& grid) {
    if (grid.empty()) throw std::invalid_argument("frequency grid is empty");
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!std::isfinite(grid[i]) || grid[i] <= 0.0)
            throw std::invalid_argument("frequency grid values must be finite and > 0");
        if (i > 0 && grid[i] <= grid[i - 1])
            throw std::invalid_argument("frequency grid must be strictly increasing");
    }
}

inline FrequencyGrid make_grid(double start_hz, double stop_hz, std::size_t points) {
    if (points < 2) {
        if (points == 1 && start_hz == stop_hz) {
            FrequencyGrid g{start_hz};
            validate_grid(g);
            return g;
        }
        throw std::invalid_argument("grid needs at least 2 points");
    }
    if (!(stop_hz > start_hz)) throw std::invalid_argument("grid stop must exceed start");
    FrequencyGrid g(points);
    const double step = (stop_hz - start_hz) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i)
        g[i] = start_hz + step * static_cast<double>(i);
    g.back() = stop_hz;
    validate_grid(g);
    return g;
}

/// (V+, V-) at one sideband frequency.
struct VariancePair {
    double plus = 1.0;
    double minus = 1.0;
};

/// One polarization mode: real coherent amplitude plus quadrature noise
/// variance spectra. Invariants: V+ > 0, V- > 0 and V+ V- >= 1 everywhere.
struct BeamMode {
    double amplitude = 0.0;
    FrequencyGrid frequencies;
    std::vector<VariancePair> noise;

    double photon_number() const { return amplitude * amplitude; }
};

namespace detail {

/// cos/sin that are exact when the angle is an exact double multiple of
/// pi/2, so special-angle configurations come out bit-exact instead of
/// carrying a ~1e-16 residue.
inline void sincos_quadrant(double angle, double& c, double& s) {
    const double half_pi = std::numbers::pi / 2.0;
    for (int k = -4; k <= 4; ++k) {
        if (angle == static_cast<double>(k) * half_pi) {
            const int q = ((k % 4) + 4) % 4;
            static constexpr double cs[4] = {1.0, 0.0, -1.0, 0.0};
            static constexpr double sn[4] = {0.0, 1.0, 0.0, -1.0};
            c = cs[q];
            s = sn[q];
            return;
        }
    }
    c = std::cos(angle);
    s = std::sin(angle);
}

inline void validate_admissible(double vplus, double vminus, double freq_hz) {
    if (!(vplus > 0.0) || !(vminus > 0.0))
        throw std::domain_error("quadrature variances must be positive at " +
                                std::to_string(freq_hz) + " Hz");
    // allow a whisker of rounding below the Heisenberg floor
    if (vplus * vminus < 1.0 - 1e-12)
        throw std::domain_error("inadmissible variances V+ V- < 1 at " +
                                std::to_string(freq_hz) + " Hz");
}

}  // namespace detail

inline void validate(const BeamMode& mode) {
    if (!(mode.amplitude >= 0.0)) throw std::domain_error("amplitude must be >= 0");
    validate_grid(mode.frequencies);
    if (mode.noise.size() != mode.frequencies.size())
        throw std::invalid_argument("noise spectrum size does not match grid");
    for (std::size_t i = 0; i < mode.noise.size(); ++i)
        detail::validate_admissible(mode.noise[i].plus, mode.noise[i].minus,
                                    mode.frequencies[i]);
}

/// Coherent beam: V+ = V- = 1 on the whole grid.
inline BeamMode make_coherent(double amplitude, FrequencyGrid grid) {
    if (!(amplitude >= 0.0)) throw std::domain_error("amplitude must be >= 0");
    validate_grid(grid);
    BeamMode mode;
    mode.amplitude = amplitude;
    mode.noise.assign(grid.size(), VariancePair{1.0, 1.0});
    mode.frequencies = std::move(grid);
    return mode;
}

/// Source noise model for a squeezed beam. Either a flat pair, a cavity
/// style Lorentzian V_sq(f) = 1 - (1 - v0) / (1 + (f / corner)^2), or a
/// tabulated (f, V+, V-) spectrum sampled by linear interpolation.
/// The anti-squeezed quadrature defaults to the minimum-uncertainty value
/// excess / V_sq with excess = 1.
class SqueezeSpectrum {
  public:
    static SqueezeSpectrum flat(double v0, double excess = 1.0) {
        SqueezeSpectrum s;
        s.model_ = Flat{v0, excess};
        s.check_params(v0, excess);
        return s;
    }

    static SqueezeSpectrum lorentzian(double v0, double corner_hz, double excess = 1.0) {
        SqueezeSpectrum s;
        if (!(corner_hz > 0.0)) throw std::domain_error("corner frequency must be > 0");
        s.model_ = Lorentzian{v0, corner_hz, excess};
        s.check_params(v0, excess);
        return s;
    }

    /// Points are (freq_hz, V_sq, V_anti), strictly increasing in frequency.
    static SqueezeSpectrum tabulated(std::vector<std::array<double, 3>> points) {
        SqueezeSpectrum s;
        if (points.empty()) throw std::invalid_argument("empty tabulated spectrum");
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (i > 0 && points[i][0] <= points[i - 1][0])
                throw std::invalid_argument("tabulated spectrum frequencies must increase");
            detail::validate_admissible(points[i][1], points[i][2], points[i][0]);
        }
        s.model_ = Tabulated{std::move(points)};
        return s;
    }

    /// (V_sq, V_anti) at one frequency.
    VariancePair at(double freq_hz) const {
        if (const auto* f = std::get_if<Flat>(&model_))
            return {f->v0, f->excess / f->v0};
        if (const auto* l = std::get_if<Lorentzian>(&model_)) {
            const double x = freq_hz / l->corner_hz;
            const double vsq = 1.0 - (1.0 - l->v0) / (1.0 + x * x);
            return {vsq, l->excess / vsq};
        }
        const auto& tab = std::get<Tabulated>(model_).points;
        if (freq_hz < tab.front()[0] || freq_hz > tab.back()[0])
            throw std::domain_error("frequency " + std::to_string(freq_hz) +
                                    " Hz outside tabulated spectrum range");
        auto hi = std::lower_bound(tab.begin(), tab.end(), freq_hz,
                                   [](const auto& p, double f) { return p[0] < f; });
        if (hi == tab.begin()) return {(*hi)[1], (*hi)[2]};
        auto lo = hi - 1;
        const double t = ((*hi)[0] == (*lo)[0])
                             ? 0.0
                             : (freq_hz - (*lo)[0]) / ((*hi)[0] - (*lo)[0]);
        return {(*lo)[1] + t * ((*hi)[1] - (*lo)[1]),
                (*lo)[2] + t * ((*hi)[2] - (*lo)[2])};
    }

  private:
    struct Flat {
        double v0, excess;
    };
    struct Lorentzian {
        double v0, corner_hz, excess;
    };
    struct Tabulated {
        std::vector<std::array<double, 3>> points;
    };

    void check_params(double v0, double excess) const {
        if (!(v0 > 0.0) || v0 > 1.0)
            throw std::domain_error("squeezed variance must be in (0, 1]");
        if (excess < 1.0)
            throw std::domain_error(
                "excess multiplier < 1 would violate V_sq * V_anti >= 1");
    }

    std::variant<Flat, Lorentzian, Tabulated> model_;
};

/// Quadrature-squeezed beam from a spectrum model. `squeezed` selects which
/// quadrature carries V_sq; the orthogonal one carries V_anti.
inline BeamMode make_squeezed(double amplitude, Quadrature squeezed,
                              const SqueezeSpectrum& model, FrequencyGrid grid) {
    if (!(amplitude >= 0.0)) throw std::domain_error("amplitude must be >= 0");
    validate_grid(grid);
    BeamMode mode;
    mode.amplitude = amplitude;
    mode.noise.reserve(grid.size());
    for (double f : grid) {
        const VariancePair v = model.at(f);
        detail::validate_admissible(v.plus, v.minus, f);
        mode.noise.push_back(squeezed == Quadrature::Amplitude
                                 ? VariancePair{v.plus, v.minus}
                                 : VariancePair{v.minus, v.plus});
    }
    mode.frequencies = std::move(grid);
    return mode;
}

/// Two-mode Gaussian state. H and V coherent amplitudes are real and
/// nonnegative; theta is the phase of the V mean relative to the H mean.
/// covariance[k] is the symmetric 4x4 quadrature covariance at
/// frequencies[k], in the modes' own mean-phase frames.
/// phi_h tracks the absolute phase of the H mean. Stokes statistics never
/// depend on it, but phase-sensitive elements (squeezers) do, so it is kept
/// so that element composition stays associative.
struct TwoModeState {
    double alpha_h = 0.0;
    double alpha_v = 0.0;
    double theta = 0.0;
    double phi_h = 0.0;
    FrequencyGrid frequencies;
    std::vector<Mat4> covariance;

    double photon_number() const { return alpha_h * alpha_h + alpha_v * alpha_v; }

    BeamMode mode_h() const {
        BeamMode m;
        m.amplitude = alpha_h;
        m.frequencies = frequencies;
        m.noise.reserve(covariance.size());
        for (const Mat4& c : covariance) m.noise.push_back({c(0, 0), c(1, 1)});
        return m;
    }

    BeamMode mode_v() const {
        BeamMode m;
        m.amplitude = alpha_v;
        m.frequencies = frequencies;
        m.noise.reserve(covariance.size());
        for (const Mat4& c : covariance) m.noise.push_back({c(2, 2), c(3, 3)});
        return m;
    }
};

inline void validate(const TwoModeState& state) {
    if (!(state.alpha_h >= 0.0) || !(state.alpha_v >= 0.0))
        throw std::domain_error("amplitudes must be >= 0");
    if (!std::isfinite(state.theta)) throw std::domain_error("theta must be finite");
    validate_grid(state.frequencies);
    if (state.covariance.size() != state.frequencies.size())
        throw std::invalid_argument("covariance count does not match grid");
    for (const Mat4& c : state.covariance) {
        if (!is_finite(c)) throw std::domain_error("non-finite covariance entry");
        if (!is_psd(c)) throw std::domain_error("covariance not positive semidefinite");
    }
}

/// Assembles a two-mode state from two independent beams on a shared grid;
/// cross-mode covariance starts at zero.
inline TwoModeState make_two_mode(const BeamMode& h, const BeamMode& v, double theta) {
    validate(h);
    validate(v);
    if (h.frequencies != v.frequencies)
        throw std::domain_error("beams are defined on different frequency grids");
    TwoModeState state;
    state.alpha_h = h.amplitude;
    state.alpha_v = v.amplitude;
    state.theta = theta;
    state.frequencies = h.frequencies;
    state.covariance.reserve(h.noise.size());
    for (std::size_t k = 0; k < h.noise.size(); ++k) {
        Mat4 c;
        c(0, 0) = h.noise[k].plus;
        c(1, 1) = h.noise[k].minus;
        c(2, 2) = v.noise[k].plus;
        c(3, 3) = v.noise[k].minus;
        state.covariance.push_back(c);
    }
    return state;
}

/// Single-frequency convenience: uncorrelated state from explicit variances.
inline TwoModeState make_single_frequency_state(double alpha_h, double alpha_v,
                                                double theta, VariancePair h,
                                                VariancePair v,
                                                double freq_hz = 1.0e6) {
    BeamMode mh;
    mh.amplitude = alpha_h;
    mh.frequencies = {freq_hz};
    mh.noise = {h};
    BeamMode mv;
    mv.amplitude = alpha_v;
    mv.frequencies = {freq_hz};
    mv.noise = {v};
    return make_two_mode(mh, mv, theta);
}

/// An optical element acting on the quadrature 4-space: a symplectic matrix
/// plus an optional vacuum admixture 0 < eta <= 1. Loss elements transform
/// C -> eta S C S' + (1 - eta) I and amplitudes by sqrt(eta) S.
/// The matrix acts in the global phase frame (see apply_element).
struct SymplecticElement {
    std::string name;
    Mat4 matrix = Mat4::identity();
    double eta = 1.0;
};

namespace detail {

/// Symplectic form for [X+, X-] = 2i per mode, block diag(J, J) with
/// J = [[0, 1], [-1, 0]].
inline Mat4 symplectic_form() {
    Mat4 j;
    j(0, 1) = 1.0;
    j(1, 0) = -1.0;
    j(2, 3) = 1.0;
    j(3, 2) = -1.0;
    return j;
}

inline bool is_symplectic(const Mat4& s, double tol = 1e-9) {
    const Mat4 j = symplectic_form();
    const Mat4 lhs = s * j * s.transposed();
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c)
            if (std::abs(lhs(r, c) - j(r, c)) > tol) return false;
    return true;
}

/// 2x2 quadrature rotation for a mode phase shift a -> a e^{i phi}:
/// X+' = cos(phi) X+ - sin(phi) X-, X-' = sin(phi) X+ + cos(phi) X-.
struct Rot2 {
    double c, s;
};

inline Rot2 phase_rot(double phi) {
    Rot2 r{};
    sincos_quadrant(phi, r.c, r.s);
    return r;
}

/// block diag(R(phi_h), R(phi_v)) over the quadrature 4-space.
inline Mat4 mode_phase_matrix(double phi_h, double phi_v) {
    const Rot2 h = phase_rot(phi_h);
    const Rot2 v = phase_rot(phi_v);
    Mat4 out;
    out(0, 0) = h.c;
    out(0, 1) = -h.s;
    out(1, 0) = h.s;
    out(1, 1) = h.c;
    out(2, 2) = v.c;
    out(2, 3) = -v.s;
    out(3, 2) = v.s;
    out(3, 3) = v.c;
    return out;
}

}  // namespace detail

inline SymplecticElement identity_element() { return {"identity", Mat4::identity(), 1.0}; }

inline SymplecticElement loss_element(double eta) {
    if (!(eta > 0.0) || eta > 1.0) throw std::domain_error("loss eta must be in (0, 1]");
    return {"loss", Mat4::identity(), eta};
}

/// Extra phase on the V mode relative to H (advances theta by delta).
inline SymplecticElement phase_element(double delta) {
    return {"phase", detail::mode_phase_matrix(0.0, delta), 1.0};
}

/// Single-mode squeezer on H or V: X+ -> X+ e^{-r}, X- -> X- e^{+r}.
inline SymplecticElement squeeze_element(double r, bool on_h) {
    Mat4 s = Mat4::identity();
    const std::size_t base = on_h ? 0 : 2;
    s(base, base) = std::exp(-r);
    s(base + 1, base + 1) = std::exp(r);
    return {"squeeze", s, 1.0};
}

/// Applies an element. The element matrix acts in the global frame, so the
/// state is rotated out of the modes' own phase frames, transformed, and
/// re-canonicalized (amplitudes real >= 0, fluctuations re-expressed in the
/// new mean-phase frames, theta updated). Frequency slices are independent.
inline TwoModeState apply_element(const TwoModeState& state,
                                  const SymplecticElement& element) {
    if (!is_finite(element.matrix))
        throw std::domain_error("element matrix has non-finite entries");
    if (!(element.eta > 0.0) || element.eta > 1.0)
        throw std::domain_error("element eta must be in (0, 1]");

    const Mat4& s = element.matrix;
    const double eta = element.eta;
    const double amp_scale = std::sqrt(eta);

    const double phase_h = state.phi_h;
    const double phase_v = state.phi_h + state.theta;

    // own-frame -> global
    const Mat4 to_global = detail::mode_phase_matrix(phase_h, phase_v);

    // means: quadrature mean vector is 2 (Re mu, Im mu) per mode
    const detail::Rot2 rot_h = detail::phase_rot(phase_h);
    const detail::Rot2 rot_v = detail::phase_rot(phase_v);
    const Vec4 mean_global{2.0 * state.alpha_h * rot_h.c, 2.0 * state.alpha_h * rot_h.s,
                           2.0 * state.alpha_v * rot_v.c, 2.0 * state.alpha_v * rot_v.s};
    const Vec4 mean_out = amp_scale * (s * mean_global);

    const std::complex<double> mu_h{0.5 * mean_out[0], 0.5 * mean_out[1]};
    const std::complex<double> mu_v{0.5 * mean_out[2], 0.5 * mean_out[3]};

    TwoModeState out;
    out.alpha_h = std::abs(mu_h);
    out.alpha_v = std::abs(mu_v);
    const double phi_h = out.alpha_h > 0.0 ? std::arg(mu_h) : 0.0;
    const double phi_v = out.alpha_v > 0.0 ? std::arg(mu_v) : 0.0;
    out.theta = phi_v - phi_h;
    out.phi_h = phi_h;
    out.frequencies = state.frequencies;

    // global -> new own frames
    const Mat4 to_own = detail::mode_phase_matrix(-phi_h, -phi_v);

    out.covariance.reserve(state.covariance.size());
    for (const Mat4& c_own : state.covariance) {
        Mat4 c = congruence(s, congruence(to_global, c_own));
        if (eta < 1.0) c = eta * c + (1.0 - eta) * Mat4::identity();
        c = symmetrized(congruence(to_own, c));
        if (!is_finite(c)) throw std::domain_error("element produced non-finite covariance");
        out.covariance.push_back(c);
    }
    return out;
}

/// Composition of two pure or orthogonal-lossy elements: apply `first`,
/// then `second`.
inline SymplecticElement compose(const SymplecticElement& second,
                                 const SymplecticElement& first) {
    return {second.name + "*" + first.name, second.matrix * first.matrix,
            second.eta * first.eta};
}

/// Net transmission of a chain of independent fractional losses.
inline double lossy_efficiency_chain(std::span<const double> losses) {
    double eta = 1.0;
    for (double l : losses) {
        if (!(l >= 0.0) || l >= 1.0)
            throw std::domain_error("each loss must be in [0, 1)");
        eta *= 1.0 - l;
    }
    return eta;
}

inline double lossy_efficiency_chain(std::initializer_list<double> losses) {
    return lossy_efficiency_chain(std::span<const double>(losses.begin(), losses.size()));
}

/// Classical noise common to both modes, e.g. pump noise coupling equally
/// into one quadrature of both squeezers. Adds `excess` to that quadrature's
/// variance in both modes and +/- `excess` to their cross covariance.
/// The added block is rank one, so the covariance stays PSD.
inline TwoModeState add_correlated_classical_noise(const TwoModeState& state,
                                                   Quadrature quadrature,
                                                   double variance_excess,
                                                   int correlation) {
    if (!(variance_excess >= 0.0)) throw std::domain_error("excess must be >= 0");
    if (correlation != 1 && correlation != -1)
        throw std::domain_error("correlation must be +1 or -1");
    const std::size_t q = quadrature == Quadrature::Amplitude ? 0 : 1;
    TwoModeState out = state;
    for (Mat4& c : out.covariance) {
        c(q, q) += variance_excess;
        c(q + 2, q + 2) += variance_excess;
        const double cross = correlation * variance_excess;
        c(q, q + 2) += cross;
        c(q + 2, q) += cross;
        if (!is_psd(c)) throw std::domain_error("correlated noise broke PSD invariant");
    }
    return out;
}

}  // namespace sqz
