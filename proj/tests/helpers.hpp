#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "sqz/apparatus.hpp"
#include "sqz/gaussian.hpp"

// Shared generators for randomized tests. States are built from physical
// operations only (squeezed/coherent inputs, unitary mode mixing, loss,
// added classical noise), so every draw satisfies the full quantum
// admissibility constraints, not just the per-mode diagonal ones.

namespace sqz::test {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Random single-frequency two-mode state: independently squeezed modes
/// mixed by random wave plates and an extra phase, optional loss and
/// optional correlated classical noise.
inline TwoModeState random_physical_state(std::mt19937_64& rng,
                                          bool allow_classical_noise = true) {
    const double pi = std::numbers::pi;
    const double alpha_h = uniform(rng, 1.0, 20.0);
    const double alpha_v = uniform(rng, 1.0, 20.0);
    const double theta = uniform(rng, 0.0, 2.0 * pi);

    auto mode = [&](double alpha) {
        const double r = uniform(rng, 0.0, 1.2);
        const double excess = uniform(rng, 1.0, 1.5);
        BeamMode m;
        m.amplitude = alpha;
        m.frequencies = {1.0e6};
        m.noise = {{std::exp(-2.0 * r), excess * std::exp(2.0 * r)}};
        return m;
    };

    TwoModeState state = make_two_mode(mode(alpha_h), mode(alpha_v), theta);

    const int plates = std::uniform_int_distribution<int>(0, 2)(rng);
    for (int p = 0; p < plates; ++p) {
        const WavePlate plate{rng() % 2 == 0 ? PlateKind::Half : PlateKind::Quarter,
                              uniform(rng, 0.0, pi)};
        state = apply_element(state, waveplate_element(plate));
    }
    if (rng() % 2 == 0)
        state = apply_element(state, phase_element(uniform(rng, 0.0, pi)));
    if (rng() % 2 == 0)
        state = apply_element(state, loss_element(uniform(rng, 0.5, 1.0)));
    if (allow_classical_noise && rng() % 3 == 0) {
        state = add_correlated_classical_noise(
            state, rng() % 2 == 0 ? Quadrature::Amplitude : Quadrature::Phase,
            uniform(rng, 0.0, 0.5), rng() % 2 == 0 ? 1 : -1);
    }
    return state;
}

/// Random pure symplectic element: wave plates, phases and single-mode
/// squeezers composed together.
inline SymplecticElement random_pure_element(std::mt19937_64& rng) {
    const double pi = std::numbers::pi;
    SymplecticElement out = identity_element();
    const int stages = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int i = 0; i < stages; ++i) {
        switch (rng() % 3) {
            case 0:
                out = compose(waveplate_element(
                                  {rng() % 2 == 0 ? PlateKind::Half : PlateKind::Quarter,
                                   uniform(rng, 0.0, pi)}),
                              out);
                break;
            case 1:
                out = compose(phase_element(uniform(rng, 0.0, 2.0 * pi)), out);
                break;
            default:
                out = compose(squeeze_element(uniform(rng, -0.8, 0.8), rng() % 2 == 0),
                              out);
                break;
        }
    }
    return out;
}

}  // namespace sqz::test
