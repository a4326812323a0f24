#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "sqz/linalg.hpp"

using namespace sqz;

namespace {

Mat4 random_symmetric(std::mt19937_64& rng) {
    std::normal_distribution<double> dist;
    Mat4 a;
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) a(r, c) = dist(rng);
    return symmetrized(a);
}

}  // namespace

TEST_CASE("jacobi eigenvalues reconstruct the matrix") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const Mat4 a = random_symmetric(rng);
        const SymEigen eg = eigen_sym(a);
        // A v_i = lambda_i v_i
        for (std::size_t e = 0; e < 4; ++e) {
            Vec4 v{eg.vectors(0, e), eg.vectors(1, e), eg.vectors(2, e), eg.vectors(3, e)};
            const Vec4 av = a * v;
            for (std::size_t r = 0; r < 4; ++r)
                REQUIRE_THAT(av[r], Catch::Matchers::WithinAbs(eg.values[e] * v[r], 1e-10));
        }
        REQUIRE(eg.values[0] <= eg.values[1]);
        REQUIRE(eg.values[1] <= eg.values[2]);
        REQUIRE(eg.values[2] <= eg.values[3]);
    }
}

TEST_CASE("diagonal matrix eigenvalues are exact") {
    Mat4 d;
    d(0, 0) = 2.0;
    d(1, 1) = 0.5;
    d(2, 2) = 3.0;
    d(3, 3) = 1.0;
    const SymEigen eg = eigen_sym(d);
    REQUIRE(eg.values[0] == 0.5);
    REQUIRE(eg.values[3] == 3.0);
}

TEST_CASE("psd factor reproduces the covariance") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        Mat4 root = random_symmetric(rng);
        const Mat4 c = root * root.transposed();  // PSD by construction
        const Mat4 f = psd_factor(c);
        const Mat4 back = f * f.transposed();
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t col = 0; col < 4; ++col)
                REQUIRE_THAT(back(r, col), Catch::Matchers::WithinAbs(c(r, col), 1e-9));
        REQUIRE(is_psd(c));
    }
}

TEST_CASE("psd clamp zeroes a slightly negative direction") {
    Mat4 c = Mat4::identity();
    c(0, 0) = -1e-14;
    REQUIRE(is_psd(c));
    const Mat4 clamped = psd_clamped(c);
    REQUIRE(min_eigenvalue(clamped) >= 0.0);
    REQUIRE_THAT(clamped(1, 1), Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("genuinely indefinite matrices are rejected") {
    Mat4 c = Mat4::identity();
    c(0, 0) = -0.5;
    REQUIRE_FALSE(is_psd(c));
}

TEST_CASE("quadratic form matches manual expansion") {
    Mat4 c = Mat4::identity();
    c(0, 2) = c(2, 0) = 0.25;
    const Vec4 v{1.0, 0.0, 2.0, 0.0};
    // 1 + 4 + 2 * 0.25 * 2 = 6
    REQUIRE(quadratic_form(v, c) == 6.0);
}
