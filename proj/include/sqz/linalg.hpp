#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>

// Small dense linear algebra for two-mode quadrature statistics.
// Everything is indexed over the fixed quadrature order
// (X_H+, X_H-, X_V+, X_V-); see gaussian.hpp for the convention.

namespace sqz {

using Vec4 = std::array<double, 4>;

struct Mat4 {
    std::array<std::array<double, 4>, 4> m{};

    double& operator()(std::size_t r, std::size_t c) { return m[r][c]; }
    double operator()(std::size_t r, std::size_t c) const { return m[r][c]; }

    static Mat4 identity() {
        Mat4 out;
        for (std::size_t i = 0; i < 4; ++i) out(i, i) = 1.0;
        return out;
    }

    static Mat4 zero() { return Mat4{}; }

    Mat4 transposed() const {
        Mat4 out;
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < 4; ++c) out(c, r) = m[r][c];
        return out;
    }
};

inline Mat4 operator*(const Mat4& a, const Mat4& b) {
    Mat4 out;
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) {
            double acc = 0.0;
            for (std::size_t k = 0; k < 4; ++k) acc += a(r, k) * b(k, c);
            out(r, c) = acc;
        }
    return out;
}

inline Vec4 operator*(const Mat4& a, const Vec4& v) {
    Vec4 out{};
    for (std::size_t r = 0; r < 4; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < 4; ++c) acc += a(r, c) * v[c];
        out[r] = acc;
    }
    return out;
}

inline Mat4 operator+(const Mat4& a, const Mat4& b) {
    Mat4 out;
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) out(r, c) = a(r, c) + b(r, c);
    return out;
}

inline Mat4 operator*(double s, const Mat4& a) {
    Mat4 out;
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) out(r, c) = s * a(r, c);
    return out;
}

inline Vec4 operator*(double s, const Vec4& v) {
    return Vec4{s * v[0], s * v[1], s * v[2], s * v[3]};
}

inline double dot(const Vec4& a, const Vec4& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

/// v' C v for symmetric C.
inline double quadratic_form(const Vec4& v, const Mat4& c) {
    return dot(v, c * v);
}

/// a' C b.
inline double bilinear_form(const Vec4& a, const Mat4& c, const Vec4& b) {
    return dot(a, c * b);
}

inline Mat4 symmetrized(const Mat4& a) {
    Mat4 out;
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) out(r, c) = 0.5 * (a(r, c) + a(c, r));
    return out;
}

/// S C S'.
inline Mat4 congruence(const Mat4& s, const Mat4& c) {
    return s * c * s.transposed();
}

inline double trace(const Mat4& a) { return a(0, 0) + a(1, 1) + a(2, 2) + a(3, 3); }

inline bool is_finite(const Mat4& a) {
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c)
            if (!std::isfinite(a(r, c))) return false;
    return true;
}

struct SymEigen {
    Vec4 values;    // ascending
    Mat4 vectors;   // columns, matching values
};

/// Eigendecomposition of a symmetric 4x4 by cyclic Jacobi sweeps.
/// Deterministic sweep order, so results are reproducible bit-for-bit
/// for identical inputs.
inline SymEigen eigen_sym(const Mat4& input) {
    Mat4 a = symmetrized(input);
    Mat4 v = Mat4::identity();

    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < 4; ++p)
            for (std::size_t q = p + 1; q < 4; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-30 * (1.0 + trace(a) * trace(a))) break;

        for (std::size_t p = 0; p < 4; ++p) {
            for (std::size_t q = p + 1; q < 4; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (tau >= 0.0)
                                     ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                     : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t k = 0; k < 4; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < 4; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < 4; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    SymEigen out;
    for (std::size_t i = 0; i < 4; ++i) out.values[i] = a(i, i);
    out.vectors = v;
    // insertion sort ascending, columns follow values
    for (std::size_t i = 1; i < 4; ++i) {
        const double val = out.values[i];
        Vec4 col{v(0, i), v(1, i), v(2, i), v(3, i)};
        std::size_t j = i;
        while (j > 0 && out.values[j - 1] > val) {
            out.values[j] = out.values[j - 1];
            for (std::size_t k = 0; k < 4; ++k) out.vectors(k, j) = out.vectors(k, j - 1);
            --j;
        }
        out.values[j] = val;
        for (std::size_t k = 0; k < 4; ++k) out.vectors(k, j) = col[k];
    }
    return out;
}

inline double min_eigenvalue(const Mat4& c) { return eigen_sym(c).values[0]; }

/// Eigenvalue >= -tol_rel * trace counts as nonnegative, then gets clamped
/// to zero; anything more negative is a modeling error for the caller.
inline bool is_psd(const Mat4& c, double tol_rel = 1e-10) {
    const double bound = -tol_rel * std::max(trace(c), 1.0);
    return min_eigenvalue(c) >= bound;
}

/// Reconstructs C with negative eigenvalues clamped to zero.
inline Mat4 psd_clamped(const Mat4& c) {
    const SymEigen eg = eigen_sym(c);
    Mat4 out = Mat4::zero();
    for (std::size_t e = 0; e < 4; ++e) {
        const double lam = std::max(eg.values[e], 0.0);
        if (lam == 0.0) continue;
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t col = 0; col < 4; ++col)
                out(r, col) += lam * eg.vectors(r, e) * eg.vectors(col, e);
    }
    return symmetrized(out);
}

/// F with F F' = C for positive semidefinite C (eigen square root,
/// robust to rank deficiency).
inline Mat4 psd_factor(const Mat4& c) {
    const SymEigen eg = eigen_sym(c);
    Mat4 out;
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t e = 0; e < 4; ++e)
            out(r, e) = eg.vectors(r, e) * std::sqrt(std::max(eg.values[e], 0.0));
    return out;
}

}  // namespace sqz
