#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "wrinkle/shape.hpp"

using namespace wrinkle;
using namespace wrinkle::shape;

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

ShapeFunction random_shape(std::mt19937_64& rng, int band) {
    std::normal_distribution<double> g;
    std::vector<ModeRecord> r;
    for (int k2 = -band; k2 <= band; ++k2)
        for (int k1 = -band; k1 <= band; ++k1) {
            if (std::make_pair(k1, k2) > std::make_pair(-k1, -k2)) continue;
            if (k1 == 0 && k2 == 0) {
                r.push_back({0, 0, g(rng), 0.0});
                continue;
            }
            const double re = g(rng), im = g(rng);
            r.push_back({k1, k2, re, im});
            r.push_back({-k1, -k2, re, -im});
        }
    return ShapeFunction::from_records(r);
}
}  // namespace

TEST_CASE("catalog shapes") {
    CHECK(make_shape("flat").coefficients().empty());

    const auto uni = make_shape("uniwave");
    CHECK(uni.coefficients().size() == 2);
    CHECK(uni.coefficient(1, 0) == cplx(0.0, -0.5));
    CHECK(uni.coefficient(-1, 0) == cplx(0.0, 0.5));

    const auto egg = make_shape("eggbox");
    CHECK(egg.coefficients().size() == 4);
    CHECK(egg.coefficient(1, 1) == cplx(-0.25));
    CHECK(egg.coefficient(-1, -1) == cplx(-0.25));
    CHECK(egg.coefficient(1, -1) == cplx(0.25));
    CHECK(egg.coefficient(-1, 1) == cplx(0.25));

    // eggbox samples equal sin(2 pi y1) sin(2 pi y2)
    const int n = 12;
    const auto grid = sample(egg, Derivative::none, n);
    for (int j2 = 0; j2 < n; ++j2)
        for (int j1 = 0; j1 < n; ++j1)
            CHECK(std::abs(grid(j1, j2) - std::sin(kTwoPi * j1 / n) * std::sin(kTwoPi * j2 / n)) < 1e-14);

    CHECK_THROWS_AS(make_shape("zigzag"), InvalidShape);
}

TEST_CASE("coefficient validation") {
    const std::vector<ModeRecord> missing{{1, 0, 0.5, 0.0}};
    CHECK_THROWS_AS(ShapeFunction::from_records(missing), InvalidShape);
    const std::vector<ModeRecord> wrong_conj{{1, 0, 0.5, 0.1}, {-1, 0, 0.5, 0.1}};
    CHECK_THROWS_AS(ShapeFunction::from_records(wrong_conj), InvalidShape);
    const std::vector<ModeRecord> complex_mean{{0, 0, 1.0, 0.2}};
    CHECK_THROWS_AS(ShapeFunction::from_records(complex_mean), InvalidShape);
    const std::vector<ModeRecord> dup{{0, 0, 1.0, 0.0}, {0, 0, 1.0, 0.0}};
    CHECK_THROWS_AS(ShapeFunction::from_records(dup), InvalidShape);
    const std::vector<ModeRecord> ok{{2, -1, 0.5, 0.1}, {-2, 1, 0.5, -0.1}, {0, 0, 3.0, 0.0}};
    const auto s = ShapeFunction::from_records(ok);
    CHECK(s.band() == 2);
    CHECK(s.mean() == 3.0);
    CHECK_THROWS_AS(ShapeFunction::from_records(ok, 1), InvalidShape);
    CHECK(ShapeFunction::from_records(ok, 5).band() == 5);
}

TEST_CASE("theta zero") {
    const std::vector<ModeRecord> constant{{0, 0, 2.5, 0.0}};
    const auto c0 = theta_zero(ShapeFunction::from_records(constant));
    CHECK(c0.coefficients().empty());
    CHECK(sample(c0, Derivative::none, 5).max_abs() == 0.0);

    const auto egg = make_shape("eggbox");
    CHECK(theta_zero(egg).coefficients() == egg.coefficients());

    std::mt19937_64 rng(1);
    for (int t = 0; t < 5; ++t) {
        const auto s = random_shape(rng, 3);
        const auto z = theta_zero(s);
        CHECK(z.mean() == 0.0);
        double sum = 0.0;
        const auto g = sample(z, Derivative::none, 9);
        for (double v : g.values) sum += v;
        CHECK(std::abs(sum / 81.0) < 1e-14 * (1.0 + g.max_abs()));
        for (auto d : {Derivative::d1, Derivative::d2, Derivative::d11, Derivative::d22, Derivative::d12}) {
            CHECK(sample(s, d, 9).values == sample(z, d, 9).values);
        }
    }
}

TEST_CASE("spectral derivatives") {
    const auto uni = make_shape("uniwave");
    const int n = 16;
    const auto d1 = sample(uni, Derivative::d1, n);
    for (int j2 = 0; j2 < n; ++j2)
        for (int j1 = 0; j1 < n; ++j1)
            CHECK(std::abs(d1(j1, j2) - kTwoPi * std::cos(kTwoPi * j1 / n)) < 1e-12);
    CHECK(sample(uni, Derivative::d2, 7).max_abs() == 0.0);
    CHECK(sample(uni, Derivative::d12, 7).max_abs() == 0.0);
    CHECK(sample(make_shape("flat"), Derivative::d11, 4).max_abs() == 0.0);
    CHECK_THROWS_AS(sample(make_shape("eggbox"), Derivative::none, 2), std::invalid_argument);
}

TEST_CASE("realness and spectral exactness") {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 5; ++t) {
        const auto s = random_shape(rng, 4);
        for (auto d : {Derivative::none, Derivative::d1, Derivative::d12}) {
            const auto values = fourier::synthesize_complex(s.modes(s.band(), d), 11);
            double re = 0.0, im = 0.0;
            for (const auto& v : values) {
                re = std::max(re, std::abs(v.real()));
                im = std::max(im, std::abs(v.imag()));
            }
            CHECK(im <= 1e-13 * re);
        }
        for (int n : {9, 10, 17}) {
            const auto back = fourier::analyze(sample(s, Derivative::none, n), s.band());
            double err = 0.0;
            for (int k2 = -4; k2 <= 4; ++k2)
                for (int k1 = -4; k1 <= 4; ++k1) err = std::max(err, std::abs(back(k1, k2) - s.coefficient(k1, k2)));
            CHECK(err < 1e-12 * s.max_coefficient());
        }
    }
}

TEST_CASE("kernel subspace V by hand") {
    const double r2 = 1.0 / std::numbers::sqrt2;
    CHECK(compute_kernel_V(make_shape("flat")).dim() == 3);

    const auto uni = compute_kernel_V(make_shape("uniwave"));
    REQUIRE(uni.dim() == 2);
    for (const auto& a : uni.vectors) CHECK(std::abs(a.a22) < 1e-14);

    const auto egg = compute_kernel_V(make_shape("eggbox"));
    REQUIRE(egg.dim() == 1);
    const auto& a = egg.vectors[0];
    CHECK(std::abs(a.a11) == doctest::Approx(r2).epsilon(1e-14));
    CHECK(a.a22 == doctest::Approx(-a.a11).epsilon(1e-14));
    CHECK(std::abs(a.a12) < 1e-14);
}

TEST_CASE("kernel soundness and completeness") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    std::vector<ShapeFunction> shapes{make_shape("flat"), make_shape("uniwave"), make_shape("eggbox"),
                                      random_shape(rng, 2)};
    // theta = cos(2 pi (y1 + y2)) + cos(4 pi (y1 + y2)): V = {a11 + a22 - 2 a12 = 0}, dim 2
    shapes.push_back(ShapeFunction::from_records(std::vector<ModeRecord>{
        {1, 1, 0.5, 0.0}, {-1, -1, 0.5, 0.0}, {2, 2, 0.5, 0.0}, {-2, -2, 0.5, 0.0}}));
    for (const auto& s : shapes) {
        const auto v = compute_kernel_V(s);
        const int n = 4 * (2 * s.band() + 1);
        const double scale = std::max(max_second_derivative(s, n), 1.0);
        for (const auto& a : v.vectors) {
            CHECK(a.norm() == doctest::Approx(1.0).epsilon(1e-13));
            CHECK(kernel_residual(s, a, n) <= 1e-10 * scale);
        }
        for (std::size_t i = 0; i < v.vectors.size(); ++i)
            for (std::size_t j = i + 1; j < v.vectors.size(); ++j) CHECK(std::abs(v.vectors[i].dot(v.vectors[j])) < 1e-13);
        // Random matrices orthogonal to V break the identity somewhere.
        for (int t = 0; t < 20 && v.dim() < 3; ++t) {
            elastic::SymMat2 b{g(rng), g(rng), g(rng)};
            for (const auto& a : v.vectors) b = b - a * a.dot(b);
            b = b * (1.0 / b.norm());
            CHECK(kernel_residual(s, b, n) > 1e-6 * scale);
        }
    }
    CHECK(compute_kernel_V(shapes.back()).dim() == 2);
}
