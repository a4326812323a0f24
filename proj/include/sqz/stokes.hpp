#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "sqz/gaussian.hpp"
#include "sqz/linalg.hpp"

// Stokes operator statistics of a two-mode Gaussian state: means, variances
// at arbitrary relative phase theta, uncertainty products, the quantum
// Poincare-sphere radius, and noise-ellipsoid geometry.

namespace sqz {

struct StokesMeans {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
};

struct StokesVariances {
    double v0 = 0.0, v1 = 0.0, v2 = 0.0, v3 = 0.0;

    double operator[](std::size_t j) const {
        const std::array<double, 4> v{v0, v1, v2, v3};
        return v.at(j);
    }
};

/// Means and variances at one sideband frequency, with the shot-noise
/// reference (mean photon number) for an equally bright coherent beam.
/// linearization_warning flags states where quadrature noise exceeds 1% of
/// the total power, outside the regime where first-order statistics are
/// trustworthy.
struct StokesStats {
    StokesMeans means;
    StokesVariances variances;
    double shot_noise = 0.0;
    double frequency_hz = 0.0;
    bool linearization_warning = false;
};

enum class EllipsoidShape { Sphere, Cigar, Pancake, Other };

inline const char* to_string(EllipsoidShape s) {
    switch (s) {
        case EllipsoidShape::Sphere: return "sphere";
        case EllipsoidShape::Cigar: return "cigar";
        case EllipsoidShape::Pancake: return "pancake";
        default: return "other";
    }
}

/// Poincare-sphere noise ellipsoid: centered on the Stokes mean vector,
/// semi-axes are standard deviations in shot-noise units.
struct NoiseEllipsoid {
    std::array<double, 3> center{};
    std::array<double, 3> semi_axes{};
    EllipsoidShape shape = EllipsoidShape::Other;
    double frequency_hz = 0.0;
};

/// Fluctuation coefficient vector c_j over (X_H+, X_H-, X_V+, X_V-):
/// the linearized Stokes fluctuation is dS_j = c_j . dX, so the variance
/// is the quadratic form c_j' C c_j. Valid for any theta and any cross-mode
/// correlations.
inline Vec4 stokes_coefficients(std::size_t j, double alpha_h, double alpha_v,
                                double theta) {
    double c, s;
    detail::sincos_quadrant(theta, c, s);
    switch (j) {
        case 0: return {alpha_h, 0.0, alpha_v, 0.0};
        case 1: return {alpha_h, 0.0, -alpha_v, 0.0};
        case 2: return {alpha_v * c, alpha_v * s, alpha_h * c, -alpha_h * s};
        case 3: return {alpha_v * s, -alpha_v * c, alpha_h * s, alpha_h * c};
        default: throw std::out_of_range("Stokes index must be 0..3");
    }
}

inline StokesMeans stokes_means(const TwoModeState& state) {
    double c, s;
    detail::sincos_quadrant(state.theta, c, s);
    const double h2 = state.alpha_h * state.alpha_h;
    const double v2 = state.alpha_v * state.alpha_v;
    const double cross = 2.0 * state.alpha_h * state.alpha_v;
    return {h2 + v2, h2 - v2, cross * c, cross * s};
}

inline StokesVariances stokes_variances(const TwoModeState& state,
                                        std::size_t freq_index) {
    const Mat4& cov = state.covariance.at(freq_index);
    StokesVariances out;
    out.v0 = quadratic_form(stokes_coefficients(0, state.alpha_h, state.alpha_v, state.theta), cov);
    out.v1 = quadratic_form(stokes_coefficients(1, state.alpha_h, state.alpha_v, state.theta), cov);
    out.v2 = quadratic_form(stokes_coefficients(2, state.alpha_h, state.alpha_v, state.theta), cov);
    out.v3 = quadratic_form(stokes_coefficients(3, state.alpha_h, state.alpha_v, state.theta), cov);
    return out;
}

inline StokesStats stokes_stats(const TwoModeState& state, std::size_t freq_index) {
    StokesStats stats;
    stats.means = stokes_means(state);
    stats.variances = stokes_variances(state, freq_index);
    stats.shot_noise = state.photon_number();
    stats.frequency_hz = state.frequencies.at(freq_index);
    double max_var = 0.0;
    const Mat4& c = state.covariance[freq_index];
    for (std::size_t i = 0; i < 4; ++i) max_var = std::max(max_var, c(i, i));
    stats.linearization_warning = max_var > 0.01 * stats.shot_noise;
    return stats;
}

inline std::vector<StokesStats> stokes_spectrum(const TwoModeState& state) {
    std::vector<StokesStats> out;
    out.reserve(state.frequencies.size());
    for (std::size_t k = 0; k < state.frequencies.size(); ++k)
        out.push_back(stokes_stats(state, k));
    return out;
}

/// One uncertainty relation V_i V_j >= |<S_k>|^2: lhs is the variance
/// product, rhs the squared mean of the conjugate parameter.
struct UncertaintyProduct {
    double lhs = 0.0;
    double rhs = 0.0;

    double slack() const {
        const double scale = std::max({std::abs(lhs), std::abs(rhs), 1.0});
        return (lhs - rhs) / scale;
    }
};

/// The three cyclic pairs: (V1 V2, S3^2), (V2 V3, S1^2), (V3 V1, S2^2).
inline std::array<UncertaintyProduct, 3> uncertainty_products(const StokesStats& stats) {
    const auto& m = stats.means;
    const auto& v = stats.variances;
    return {UncertaintyProduct{v.v1 * v.v2, m.s3 * m.s3},
            UncertaintyProduct{v.v2 * v.v3, m.s1 * m.s1},
            UncertaintyProduct{v.v3 * v.v1, m.s2 * m.s2}};
}

/// Quantum Poincare-sphere radius sqrt(<S0>^2 + V0 + 2 <S0>). Larger than
/// the classical radius S0 for any bright beam. Uses the linearized V0, so
/// the alpha -> 0 limit returns 0 rather than the exact operator value.
inline double poincare_radius(const StokesStats& stats) {
    const double s0 = stats.means.s0;
    return std::sqrt(s0 * s0 + stats.variances.v0 + 2.0 * s0);
}

inline constexpr double kEllipsoidTolerance = 0.02;

/// Shape taxonomy on shot-noise-normalized variances of S1..S3:
/// sphere when all sit within the tolerance band around 1, cigar when
/// exactly two dip below it, pancake when one dips below and two rise
/// above, anything else is Other.
inline NoiseEllipsoid classify_ellipsoid(const StokesStats& stats,
                                         double tolerance = kEllipsoidTolerance) {
    if (!(stats.shot_noise > 0.0))
        throw std::domain_error("classification needs a positive shot-noise reference");
    NoiseEllipsoid e;
    e.center = {stats.means.s1, stats.means.s2, stats.means.s3};
    e.frequency_hz = stats.frequency_hz;
    const std::array<double, 3> norm{stats.variances.v1 / stats.shot_noise,
                                     stats.variances.v2 / stats.shot_noise,
                                     stats.variances.v3 / stats.shot_noise};
    int below = 0, above = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        e.semi_axes[i] = std::sqrt(norm[i]);
        if (norm[i] < 1.0 - tolerance) ++below;
        if (norm[i] > 1.0 + tolerance) ++above;
    }
    if (below == 0 && above == 0)
        e.shape = EllipsoidShape::Sphere;
    else if (below == 2)
        e.shape = EllipsoidShape::Cigar;
    else if (below == 1 && above == 2)
        e.shape = EllipsoidShape::Pancake;
    else
        e.shape = EllipsoidShape::Other;
    return e;
}

/// Minimum over pairs i != j of (V_i + V_j) / <n>. A beam built from at
/// most one squeezed input satisfies >= 1 for every theta; two squeezed
/// inputs can beat it.
inline double single_squeezed_bound_check(const TwoModeState& state,
                                          std::size_t freq_index) {
    const StokesVariances v = stokes_variances(state, freq_index);
    const double n = state.photon_number();
    if (!(n > 0.0)) throw std::domain_error("bound check needs nonzero power");
    const double p12 = (v.v1 + v.v2) / n;
    const double p23 = (v.v2 + v.v3) / n;
    const double p31 = (v.v3 + v.v1) / n;
    return std::min({p12, p23, p31});
}

}  // namespace sqz
