#include <doctest.h>

#include <cmath>
#include <random>

#include "wrinkle/elastic_forms.hpp"

using namespace wrinkle::elastic;

namespace {

SymMat2 random_sym(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return {u(rng), u(rng), u(rng)};
}

IsotropicModuli random_moduli(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> mu_d(0.1, 10.0);
    const double mu = mu_d(rng);
    std::uniform_real_distribution<double> la_d(-mu, 10.0);
    return {mu, la_d(rng)};
}

}  // namespace

TEST_CASE("q3 of the identity") {
    CHECK(q3_eval(IsotropicModuli{1.0, 0.0}, Mat3::Identity()) == doctest::Approx(6.0).epsilon(1e-15));
    const ElasticModel tensor = ElasticTensor3::from_isotropic({1.0, 1.0});
    CHECK(q3_eval(tensor, Mat3::Identity()) == doctest::Approx(15.0).epsilon(1e-14));
    CHECK(q3_eval(IsotropicModuli{1.0, 1.0}, Mat3::Identity()) == doctest::Approx(15.0).epsilon(1e-14));
}

TEST_CASE("q3 vanishes on skew matrices and sees only sym F") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g;
    const ElasticModel iso = IsotropicModuli{2.0, 0.7};
    const ElasticModel tensor = ElasticTensor3::from_isotropic({2.0, 0.7});
    for (int t = 0; t < 20; ++t) {
        Mat3 f;
        for (int i = 0; i < 9; ++i) f(i) = g(rng);
        const Mat3 skew = f - f.transpose();
        CHECK(q3_eval(iso, skew) == 0.0);
        CHECK(std::abs(q3_eval(tensor, skew)) < 1e-12);
        const Mat3 sym = 0.5 * (f + f.transpose());
        CHECK(q3_eval(iso, f) == doctest::Approx(q3_eval(iso, sym)).epsilon(1e-13));
        CHECK(q3_eval(tensor, f) == doctest::Approx(q3_eval(iso, f)).epsilon(1e-12));
    }
}

TEST_CASE("q2 hand values") {
    const SymMat2 id{1.0, 1.0, 0.0};
    CHECK(q2_from_q3(IsotropicModuli{1.0, 1.0}, id) == doctest::Approx(20.0 / 3.0).epsilon(1e-14));
    CHECK(q2_from_q3(IsotropicModuli{1.0, 0.0}, id) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(q2_from_q3(IsotropicModuli{3.0, 2.0}, SymMat2{}) == 0.0);
}

TEST_CASE("q2 matches the isotropic closed form") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 200; ++t) {
        const auto m = random_moduli(rng);
        const auto g = random_sym(rng);
        const double expected = q2_isotropic_closed_form(m, g);
        CHECK(q2_from_q3(m, g) == doctest::Approx(expected).epsilon(1e-12));
        CHECK(q2_from_q3(ElasticTensor3::from_isotropic(m), g) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("relaxation lowers energy and forms are quadratic") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> alpha_d(-3.0, 3.0);
    for (int t = 0; t < 50; ++t) {
        const auto m = random_moduli(rng);
        const auto g = random_sym(rng);
        const double alpha = alpha_d(rng);
        CHECK(q2_from_q3(m, g) <= q3_eval(m, embed(g)) * (1.0 + 1e-14));
        CHECK(q2_from_q3(m, g * alpha) == doctest::Approx(alpha * alpha * q2_from_q3(m, g)).epsilon(1e-12));
        const Mat3 f = embed(g);
        CHECK(q3_eval(m, alpha * f) == doctest::Approx(alpha * alpha * q3_eval(m, f)).epsilon(1e-12));
    }
}

TEST_CASE("optimal stretch") {
    const IsotropicModuli m{1.5, 0.8};
    const SymMat2 g{0.3, -1.1, 0.4};
    const Vec3 a = optimal_stretch(m, g);
    CHECK(std::abs(a(0)) < 1e-14);
    CHECK(std::abs(a(1)) < 1e-14);
    CHECK(a(2) == doctest::Approx(-m.lambda * g.trace() / (2.0 * (2.0 * m.mu + m.lambda))).epsilon(1e-13));
    CHECK(optimal_stretch(m, SymMat2{}).norm() == 0.0);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    auto c = ElasticTensor3::from_isotropic({1.0, 0.5});
    for (int t = 0; t < 20; ++t) {
        const auto g1 = random_sym(rng);
        const auto g2 = random_sym(rng);
        const double s = u(rng);
        const Vec3 lhs = optimal_stretch(c, g1 + g2 * s);
        const Vec3 rhs = optimal_stretch(c, g1) + s * optimal_stretch(c, g2);
        CHECK((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        // the stretch attains q2
        Mat3 f = embed(g1);
        const Vec3 a1 = optimal_stretch(c, g1);
        f(0, 2) += a1(0);
        f(2, 0) += a1(0);
        f(1, 2) += a1(1);
        f(2, 1) += a1(1);
        f(2, 2) += 2.0 * a1(2);
        CHECK(q3_eval(c, f) == doctest::Approx(q2_from_q3(c, g1)).epsilon(1e-12));
    }
}

TEST_CASE("plane form") {
    const PlaneForm pf = plane_form(IsotropicModuli{1.0, 1.0});
    CHECK(pf.matrix()(0, 0) == doctest::Approx(8.0 / 3.0).epsilon(1e-14));
    CHECK(pf.matrix()(1, 1) == doctest::Approx(8.0 / 3.0).epsilon(1e-14));
    CHECK(pf.matrix()(2, 2) == doctest::Approx(2.0).epsilon(1e-14));

    const PlaneForm pf0 = plane_form(IsotropicModuli{1.0, 0.0});
    CHECK((pf0.matrix() - 2.0 * Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-14);

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int t = 0; t < 100; ++t) {
        auto m = random_moduli(rng);
        m.lambda = -2.0 * m.mu / 3.0 + unit(rng) * (10.0 + 2.0 * m.mu / 3.0);
        const auto pfm = plane_form(m);
        const auto g = random_sym(rng);
        CHECK(pfm.q2(g) == doctest::Approx(q2_from_q3(m, g)).epsilon(1e-12));
        CHECK(Eigen::SelfAdjointEigenSolver<Mat3>(pfm.matrix()).eigenvalues().minCoeff() > 0.0);
        const auto h = random_sym(rng);
        CHECK(pfm.apply(g).dot(h) == doctest::Approx(h.scaled().dot(pfm.matrix() * g.scaled())).epsilon(1e-12));
    }
}

TEST_CASE("anisotropic tensor from Voigt entries") {
    // Orthotropic stiffness.
    std::array<double, 21> v{};
    const double c11 = 5.0, c22 = 4.0, c33 = 3.0, c12 = 1.0, c13 = 0.5, c23 = 0.8;
    const double c44 = 1.2, c55 = 1.1, c66 = 1.3;
    v = {c11, c12, c13, 0, 0, 0, c22, c23, 0, 0, 0, c33, 0, 0, 0, c44, 0, 0, c55, 0, c66};
    const ElasticTensor3 c = ElasticTensor3::from_voigt21(v);
    CHECK_NOTHROW(c.validate());
    CHECK(c(0, 1, 0, 1) == c66);
    CHECK(c(1, 0, 0, 1) == c66);
    CHECK(c(0, 0, 1, 1) == c12);

    // For an orthotropic solid the relaxation keeps a3 only.
    const SymMat2 g{0.2, -0.4, 0.3};
    const Vec3 a = optimal_stretch(c, g);
    CHECK(std::abs(a(0)) < 1e-14);
    CHECK(std::abs(a(1)) < 1e-14);
    // d/da3 [C33 (2 a3)^2 + 2 (2 a3)(c13 g11 + c23 g22)] = 0
    CHECK(a(2) == doctest::Approx(-(c13 * g.a11 + c23 * g.a22) / (2.0 * c33)).epsilon(1e-13));
    const PlaneForm pf = plane_form(c);
    const double expected = c11 * g.a11 * g.a11 + c22 * g.a22 * g.a22 + 2 * c12 * g.a11 * g.a22 +
                            4 * c66 * g.a12 * g.a12 - std::pow(c13 * g.a11 + c23 * g.a22, 2) / c33;
    CHECK(pf.q2(g) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("invalid models are rejected") {
    CHECK_THROWS_AS(IsotropicModuli({0.0, 1.0}).validate(), InvalidModel);
    CHECK_THROWS_AS(IsotropicModuli({1.0, -2.5}).validate(), InvalidModel);
    CHECK_NOTHROW(IsotropicModuli({1.0, -0.9}).validate());
    // relaxable, but Q2 is indefinite
    CHECK_NOTHROW(q2_from_q3(IsotropicModuli{1.0, -0.9}, SymMat2{1.0, 1.0, 0.0}));
    CHECK_THROWS_AS(plane_form(IsotropicModuli{1.0, -0.9}), InvalidModel);

    std::array<double, 21> v{};
    v[0] = 1.0;  // rank-one stiffness
    CHECK_THROWS_AS(ElasticTensor3::from_voigt21(v).validate(), InvalidModel);
    CHECK_THROWS_AS(plane_form(ElasticTensor3::from_voigt21(v)), InvalidModel);

    ElasticTensor3::Storage s{};
    s[0][1][0][0] = 1.0;
    CHECK_THROWS_AS(ElasticTensor3(s).validate(), InvalidModel);
}
