#include <doctest.h>

#include <cmath>

#include "wrinkle/descent.hpp"

using namespace wrinkle::descent;

namespace {

double rosenbrock(const Vector& x, Vector* g) {
    const double a = 1.0 - x(0), b = x(1) - x(0) * x(0);
    if (g) {
        g->resize(2);
        (*g)(0) = -2.0 * a - 400.0 * x(0) * b;
        (*g)(1) = 200.0 * b;
    }
    return a * a + 100.0 * b * b;
}

}  // namespace

TEST_CASE("all methods minimize an ill-conditioned quadratic monotonically") {
    Eigen::VectorXd diag(20);
    for (int i = 0; i < 20; ++i) diag(i) = std::pow(10.0, 3.0 * i / 19.0);
    const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(20, -1.0, 1.0);
    auto f = [&](const Vector& x, Vector* g) {
        if (g) *g = diag.cwiseProduct(x) - b;
        return 0.5 * x.dot(diag.cwiseProduct(x)) - b.dot(x);
    };
    const Eigen::VectorXd exact = b.cwiseQuotient(diag);
    for (Method m : {Method::steepest, Method::cg, Method::lbfgs}) {
        CAPTURE(static_cast<int>(m));
        Options opt;
        opt.method = m;
        opt.gtol = 1e-6;
        opt.max_iter = 100000;
        opt.record_energies = true;
        const Result r = minimize(f, Eigen::VectorXd::Zero(20), opt);
        CHECK(r.status == Status::converged);
        CHECK((r.x - exact).norm() < 1e-5);
        for (std::size_t i = 1; i < r.energies.size(); ++i) CHECK(r.energies[i] <= r.energies[i - 1]);

        // below the resolution of f only the approximate test makes progress
        opt.gtol = 1e-11;
        opt.approx_decrease_eps = 1e-12;
        const Result fine = minimize(f, Eigen::VectorXd::Zero(20), opt);
        CHECK(fine.status == Status::converged);
        CHECK((fine.x - exact).norm() < 1e-10);
        for (std::size_t i = 1; i < fine.energies.size(); ++i)
            CHECK(fine.energies[i] <= fine.energies[i - 1] + 1e-12 * std::abs(fine.energies[i - 1]));
    }
}

TEST_CASE("nonconvex Rosenbrock") {
    Options opt;
    opt.gtol = 1e-9;
    const Result r = minimize(rosenbrock, Eigen::Vector2d(-1.2, 1.0), opt);
    CHECK(r.status == Status::converged);
    CHECK((r.x - Eigen::Vector2d(1.0, 1.0)).norm() < 1e-7);
}

TEST_CASE("projection keeps iterates in the subspace") {
    // minimize |x - c|^2 subject to sum x = 0
    const Eigen::Vector3d c(1.0, 2.0, 6.0);
    auto f = [&](const Vector& x, Vector* g) {
        if (g) *g = 2.0 * (x - c);
        return (x - c).squaredNorm();
    };
    auto project = [](Vector& v) { v.array() -= v.mean(); };
    const Result r = minimize(f, Eigen::Vector3d(5.0, 0.0, 0.0), Options{}, project);
    CHECK(r.status == Status::converged);
    CHECK(std::abs(r.x.sum()) < 1e-12);
    CHECK((r.x - (c.array() - 3.0).matrix()).norm() < 1e-8);
}

TEST_CASE("iteration cap and stall are reported") {
    Options opt;
    opt.max_iter = 2;
    CHECK(minimize(rosenbrock, Eigen::Vector2d(-1.2, 1.0), opt).status == Status::max_iterations);

    // discontinuous objective whose gradient never vanishes
    auto step = [](const Vector& x, Vector* g) {
        if (g) *g = Eigen::VectorXd::Ones(1);
        return x(0) < 0.0 ? 0.0 : 1.0;
    };
    opt.max_iter = 100;
    opt.max_backtracks = 10;
    CHECK(minimize(step, Eigen::VectorXd::Zero(1), opt).status == Status::stalled);
}
