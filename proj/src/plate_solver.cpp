#include "wrinkle/plate_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>

namespace wrinkle::plate {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kPi = std::numbers::pi;

using Triplets = std::vector<Eigen::Triplet<double>>;

// 1D first and second derivative matrices on m nodes with spacing h.
Eigen::SparseMatrix<double> first_1d(int m, double h) {
    Triplets t;
    t.emplace_back(0, 0, -3.0 / (2 * h));
    t.emplace_back(0, 1, 4.0 / (2 * h));
    t.emplace_back(0, 2, -1.0 / (2 * h));
    for (int i = 1; i < m - 1; ++i) {
        t.emplace_back(i, i - 1, -1.0 / (2 * h));
        t.emplace_back(i, i + 1, 1.0 / (2 * h));
    }
    t.emplace_back(m - 1, m - 1, 3.0 / (2 * h));
    t.emplace_back(m - 1, m - 2, -4.0 / (2 * h));
    t.emplace_back(m - 1, m - 3, 1.0 / (2 * h));
    Eigen::SparseMatrix<double> d(m, m);
    d.setFromTriplets(t.begin(), t.end());
    return d;
}

Eigen::SparseMatrix<double> second_1d(int m, double h) {
    const double s = 1.0 / (h * h);
    Triplets t;
    const double edge[4] = {2.0, -5.0, 4.0, -1.0};
    for (int k = 0; k < 4; ++k) {
        t.emplace_back(0, k, edge[k] * s);
        t.emplace_back(m - 1, m - 1 - k, edge[k] * s);
    }
    for (int i = 1; i < m - 1; ++i) {
        t.emplace_back(i, i - 1, s);
        t.emplace_back(i, i, -2.0 * s);
        t.emplace_back(i, i + 1, s);
    }
    Eigen::SparseMatrix<double> d(m, m);
    d.setFromTriplets(t.begin(), t.end());
    return d;
}

// Acts along x1 (inner index) or x2 (outer index) of the m1 x m2 grid.
Eigen::SparseMatrix<double> along(const Eigen::SparseMatrix<double>& d, const PlateDomain& dom, int axis) {
    Triplets t;
    for (int k = 0; k < d.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(d, k); it; ++it) {
            const int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
            if (axis == 0) {
                for (int j = 0; j < dom.m2; ++j) t.emplace_back(dom.index(r, j), dom.index(c, j), it.value());
            } else {
                for (int i = 0; i < dom.m1; ++i) t.emplace_back(dom.index(i, r), dom.index(i, c), it.value());
            }
        }
    Eigen::SparseMatrix<double> out(dom.points(), dom.points());
    out.setFromTriplets(t.begin(), t.end());
    return out;
}

Vector trapezoid_1d(int m, double h) {
    Vector w = Vector::Constant(m, h);
    w(0) = w(m - 1) = 0.5 * h;
    return w;
}

}  // namespace

void PlateDomain::validate() const {
    if (!(Lx > 0.0) || !(Ly > 0.0)) throw std::invalid_argument("plate side lengths must be positive");
    if (m1 < 4 || m2 < 4) throw std::invalid_argument("plate grid needs at least 4 points per side");
}

Vector PlateDomain::weights() const {
    const Vector w1 = trapezoid_1d(m1, h1());
    const Vector w2 = trapezoid_1d(m2, h2());
    Vector w(points());
    for (int j = 0; j < m2; ++j)
        for (int i = 0; i < m1; ++i) w(index(i, j)) = w1(i) * w2(j);
    return w;
}

PlateState PlateState::zero(const PlateDomain& dom) {
    return {Vector::Zero(dom.points()), Vector::Zero(dom.points()), Vector::Zero(dom.points())};
}

Vector PlateState::pack() const {
    Vector x(3 * v.size());
    x << u1, u2, v;
    return x;
}

PlateState PlateState::unpack(const Vector& x) {
    const Eigen::Index n = x.size() / 3;
    return {x.segment(0, n), x.segment(n, n), x.segment(2 * n, n)};
}

double PlateState::max_abs() const {
    return std::max({u1.cwiseAbs().maxCoeff(), u2.cwiseAbs().maxCoeff(), v.cwiseAbs().maxCoeff()});
}

LoadSpec LoadSpec::catalog(std::string_view name, double amplitude, const PlateDomain& dom) {
    dom.validate();
    LoadSpec load;
    load.f3.resize(dom.points());
    const bool dipole = name == "dipole";
    if (!dipole && name != "checker") throw InvalidLoad("unknown load catalog name '" + std::string(name) + "'");
    for (int j = 0; j < dom.m2; ++j)
        for (int i = 0; i < dom.m1; ++i) {
            const double s1 = std::sin(2.0 * kPi * dom.x1(i) / dom.Lx);
            const double w2 = dipole ? std::cos(kPi * dom.x2(j) / dom.Ly) : std::sin(2.0 * kPi * dom.x2(j) / dom.Ly);
            load.f3(dom.index(i, j)) = amplitude * s1 * w2;
        }
    return load;
}

LoadSpec LoadSpec::zero(const PlateDomain& dom) { return {Vector::Zero(dom.points()), SignMode::automatic}; }

Eigen::Vector3d LoadSpec::moments(const PlateDomain& dom) const {
    const Vector w = dom.weights();
    Eigen::Vector3d m = Eigen::Vector3d::Zero();
    for (int j = 0; j < dom.m2; ++j)
        for (int i = 0; i < dom.m1; ++i) {
            const double wf = w(dom.index(i, j)) * f3(dom.index(i, j));
            m(0) += wf;
            m(1) += dom.x1(i) * wf;
            m(2) += dom.x2(j) * wf;
        }
    return m;
}

void LoadSpec::validate(const PlateDomain& dom) const {
    dom.validate();
    if (f3.size() != dom.points()) {
        throw InvalidLoad("load grid has " + std::to_string(f3.size()) + " values, expected " +
                          std::to_string(dom.points()));
    }
    if (!f3.allFinite()) throw InvalidLoad("load grid contains non-finite values");
    const double scale = 1e-10 * f3.cwiseAbs().maxCoeff() * dom.Lx * dom.Ly;
    const Eigen::Vector3d m = moments(dom);
    if (std::abs(m(0)) > scale) throw InvalidLoad("load resultant int f3 = " + std::to_string(m(0)) + " is not zero");
    if (std::abs(m(1)) > scale * dom.Lx || std::abs(m(2)) > scale * dom.Ly) {
        throw InvalidLoad("load first moments (" + std::to_string(m(1)) + ", " + std::to_string(m(2)) +
                          ") are not zero");
    }
}

PlateOperators::PlateOperators(const PlateDomain& dom) {
    dom.validate();
    d1 = along(first_1d(dom.m1, dom.h1()), dom, 0);
    d2 = along(first_1d(dom.m2, dom.h2()), dom, 1);
    d11 = along(second_1d(dom.m1, dom.h1()), dom, 0);
    d22 = along(second_1d(dom.m2, dom.h2()), dom, 1);
    d12 = d1 * d2;
    w = dom.weights();
}

PlateEnergy::PlateEnergy(const PlateDomain& dom, const cell::Matrix6& M, const PlaneForm& pf, const LoadSpec& load)
    : dom_(dom), M_(M), a_(pf.matrix()), f3_(load.f3), ops_(dom) {
    if (f3_.size() != dom.points()) throw InvalidLoad("load grid does not match the plate grid");
    const Eigen::Index n = dom.points();
    constraints_.setZero(6, 3 * n);
    const Vector& w = ops_.w;
    constraints_.block(0, 0, 1, n) = w.transpose();
    constraints_.block(1, n, 1, n) = w.transpose();
    constraints_.block(2, 0, 1, n) = (ops_.d2.transpose() * w).transpose();
    constraints_.block(2, n, 1, n) = -(ops_.d1.transpose() * w).transpose();
    constraints_.block(3, 2 * n, 1, n) = w.transpose();
    constraints_.block(4, 2 * n, 1, n) = (ops_.d1.transpose() * w).transpose();
    constraints_.block(5, 2 * n, 1, n) = (ops_.d2.transpose() * w).transpose();
    gram_.compute(constraints_ * constraints_.transpose());
}

void PlateEnergy::project(Vector& x) const {
    const Eigen::Matrix<double, 6, 1> c = constraints_ * x;
    x -= constraints_.transpose() * gram_.solve(c);
}

Eigen::Matrix<double, 6, 1> PlateEnergy::gauge(const Vector& x) const { return constraints_ * x; }

struct PlateEnergy::Factor {
    // K = H + rho P'P is sparse; H' = H + rho C'C = K + U S U' is applied by Woodbury.
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    Eigen::Matrix<double, Eigen::Dynamic, 12> ku;  // K^-1 U
    Eigen::Matrix<double, 12, Eigen::Dynamic> ut;  // U'
    Eigen::PartialPivLU<Eigen::Matrix<double, 12, 12>> core;  // S^-1 + U' K^-1 U
    Eigen::Matrix<double, Eigen::Dynamic, 6> hc;  // H'^-1 C'
    Eigen::LDLT<Eigen::Matrix<double, 6, 6>> schur;  // C H'^-1 C'

    Vector solve(const Vector& g) const {
        const Vector y = ldlt.solve(g);
        return y - ku * core.solve(Eigen::Matrix<double, 12, 1>(ut * y));
    }
};

Vector PlateEnergy::precondition(const Vector& g) const {
    if (!factor_) {
        const Eigen::Index n = dom_.points();
        // Linear parts of z = (E11, E22, sqrt2 E12, -K11, -K22, -sqrt2 K12) at v = 0.
        Triplets t;
        auto put = [&](int row_block, int col_block, const Eigen::SparseMatrix<double>& d, double c) {
            for (int k = 0; k < d.outerSize(); ++k)
                for (Eigen::SparseMatrix<double>::InnerIterator it(d, k); it; ++it)
                    t.emplace_back(row_block * n + it.row(), col_block * n + it.col(), c * it.value());
        };
        put(0, 0, ops_.d1, 1.0);
        put(1, 1, ops_.d2, 1.0);
        put(2, 0, ops_.d2, 0.5 * kSqrt2);
        put(2, 1, ops_.d1, 0.5 * kSqrt2);
        put(3, 2, ops_.d11, -1.0);
        put(4, 2, ops_.d22, -1.0);
        put(5, 2, ops_.d12, -kSqrt2);
        Eigen::SparseMatrix<double> z(6 * n, 3 * n);
        z.setFromTriplets(t.begin(), t.end());

        cell::Matrix6 total = M_;
        total.bottomRightCorner<3, 3>() += a_ / 12.0;
        t.clear();
        for (int a = 0; a < 6; ++a)
            for (int b = 0; b < 6; ++b)
                if (total(a, b) != 0.0)
                    for (Eigen::Index p = 0; p < n; ++p) t.emplace_back(a * n + p, b * n + p, total(a, b) * ops_.w(p));
        Eigen::SparseMatrix<double> weight(6 * n, 6 * n);
        weight.setFromTriplets(t.begin(), t.end());
        Eigen::SparseMatrix<double> h = z.transpose() * weight * z;

        const double rho = h.diagonal().mean();
        const Eigen::Index last1 = dom_.m1 - 1, last2 = dom_.m2 - 1;
        const Eigen::Index pins[6] = {dom_.index(0, 0),
                                      n + dom_.index(0, 0),
                                      dom_.index(0, static_cast<int>(last2)),
                                      2 * n + dom_.index(0, 0),
                                      2 * n + dom_.index(static_cast<int>(last1), 0),
                                      2 * n + dom_.index(0, static_cast<int>(last2))};
        for (Eigen::Index pin : pins) h.coeffRef(pin, pin) += rho;
        auto f = std::make_shared<Factor>();
        f->ldlt.compute(h);
        if (f->ldlt.info() != Eigen::Success) throw std::runtime_error("plate preconditioner factorization failed");

        f->ut.setZero(12, 3 * n);
        for (int k = 0; k < 6; ++k) {
            f->ut.row(k) = constraints_.row(k) / constraints_.row(k).norm();
            f->ut(6 + k, pins[k]) = 1.0;
        }
        f->ku.resize(3 * n, 12);
        for (int k = 0; k < 12; ++k) f->ku.col(k) = f->ldlt.solve(Vector(f->ut.row(k).transpose()));
        Eigen::Matrix<double, 12, 12> core = f->ut * f->ku;
        for (int k = 0; k < 6; ++k) {
            core(k, k) += 1.0 / rho;
            core(6 + k, 6 + k) -= 1.0 / rho;
        }
        f->core.compute(core);
        f->hc.resize(3 * n, 6);
        for (int k = 0; k < 6; ++k) f->hc.col(k) = f->solve(Vector(constraints_.row(k).transpose()));
        f->schur.compute(constraints_ * f->hc);
        factor_ = f;
    }
    const Vector y = factor_->solve(g);
    return y - factor_->hc * factor_->schur.solve(constraints_ * y);
}

double PlateEnergy::value(const Vector& x, double s, Vector* grad) const {
    const Eigen::Index n = dom_.points();
    const auto u1 = x.segment(0, n);
    const auto u2 = x.segment(n, n);
    const auto v = x.segment(2 * n, n);
    const Vector a = ops_.d1 * v, b = ops_.d2 * v;
    const Vector u11 = ops_.d1 * u1, u12 = ops_.d2 * u1, u21 = ops_.d1 * u2, u22 = ops_.d2 * u2;
    const Vector k11 = ops_.d11 * v, k22 = ops_.d22 * v, k12 = ops_.d12 * v;
    const Vector& w = ops_.w;

    Vector dE11, dE22, dE12, dK11, dK22, dK12;
    if (grad) {
        for (Vector* g : {&dE11, &dE22, &dE12, &dK11, &dK22, &dK12}) g->resize(n);
    }
    double total = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
        const double e11 = u11(p) + 0.5 * a(p) * a(p);
        const double e22 = u22(p) + 0.5 * b(p) * b(p);
        const double e12 = 0.5 * (u12(p) + u21(p)) + 0.5 * a(p) * b(p);
        cell::Vector6 z;
        z << e11, e22, kSqrt2 * e12, -k11(p), -k22(p), -kSqrt2 * k12(p);
        const Eigen::Vector3d kb(k11(p), k22(p), kSqrt2 * k12(p));
        const cell::Vector6 mz = M_ * z;
        const Eigen::Vector3d ak = a_ * kb;
        total += w(p) * (0.5 * z.dot(mz) + kb.dot(ak) / 24.0 - s * f3_(p) * v(p));
        if (!grad) continue;
        dE11(p) = w(p) * mz(0);
        dE22(p) = w(p) * mz(1);
        dE12(p) = w(p) * kSqrt2 * mz(2);
        dK11(p) = w(p) * (-mz(3) + ak(0) / 12.0);
        dK22(p) = w(p) * (-mz(4) + ak(1) / 12.0);
        dK12(p) = w(p) * kSqrt2 * (-mz(5) + ak(2) / 12.0);
    }
    if (grad) {
        grad->resize(x.size());
        grad->segment(0, n) = ops_.d1.transpose() * dE11 + ops_.d2.transpose() * (0.5 * dE12);
        grad->segment(n, n) = ops_.d2.transpose() * dE22 + ops_.d1.transpose() * (0.5 * dE12);
        const Vector ga = dE11.cwiseProduct(a) + 0.5 * dE12.cwiseProduct(b);
        const Vector gb = dE22.cwiseProduct(b) + 0.5 * dE12.cwiseProduct(a);
        grad->segment(2 * n, n) = ops_.d1.transpose() * ga + ops_.d2.transpose() * gb + ops_.d11.transpose() * dK11 +
                                  ops_.d22.transpose() * dK22 + ops_.d12.transpose() * dK12 -
                                  s * w.cwiseProduct(f3_);
    }
    return total;
}

EnergyBreakdown PlateEnergy::breakdown(const PlateState& state, double s) const {
    const Vector& v = state.v;
    const Vector a = ops_.d1 * v, b = ops_.d2 * v;
    const Vector u11 = ops_.d1 * state.u1, u12 = ops_.d2 * state.u1;
    const Vector u21 = ops_.d1 * state.u2, u22 = ops_.d2 * state.u2;
    const Vector k11 = ops_.d11 * v, k22 = ops_.d22 * v, k12 = ops_.d12 * v;
    EnergyBreakdown e;
    for (Eigen::Index p = 0; p < v.size(); ++p) {
        cell::Vector6 z;
        z << u11(p) + 0.5 * a(p) * a(p), u22(p) + 0.5 * b(p) * b(p),
            kSqrt2 * (0.5 * (u12(p) + u21(p)) + 0.5 * a(p) * b(p)), -k11(p), -k22(p), -kSqrt2 * k12(p);
        const Eigen::Vector3d kb(k11(p), k22(p), kSqrt2 * k12(p));
        const double w = ops_.w(p);
        e.membrane_coupled += w * 0.5 * z.dot(M_ * z);
        e.bending += w * kb.dot(a_ * kb) / 24.0;
        e.load_work += w * s * f3_(p) * v(p);
    }
    e.total = e.membrane_coupled + e.bending - e.load_work;
    return e;
}

EnergyBreakdown plate_energy(const PlateState& state, const EffectiveForm& eff, const PlaneForm& pf,
                             const PlateDomain& dom, const LoadSpec& load, double s) {
    return PlateEnergy(dom, eff.M, pf, load).breakdown(state, s);
}

PlateState plate_gradient(const PlateState& state, const EffectiveForm& eff, const PlaneForm& pf,
                          const PlateDomain& dom, const LoadSpec& load, double s) {
    const PlateEnergy energy(dom, eff.M, pf, load);
    Vector g;
    energy.value(state.pack(), s, &g);
    energy.project(g);
    return PlateState::unpack(g);
}

PlateState initial_state(const PlateEnergy& energy, const MinimizerParams& params, int start) {
    const PlateDomain& dom = energy.domain();
    PlateState state = PlateState::zero(dom);
    if (start == 0) return state;
    std::mt19937_64 rng(params.seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(start)));
    std::normal_distribution<double> normal;
    const double amp = params.perturbation * std::min(dom.Lx, dom.Ly);
    for (Vector* field : {&state.u1, &state.u2, &state.v}) {
        for (int p = 0; p <= 3; ++p)
            for (int q = 0; q <= 3; ++q) {
                const double c = amp * normal(rng) / (1.0 + p * p + q * q);
                for (int j = 0; j < dom.m2; ++j)
                    for (int i = 0; i < dom.m1; ++i)
                        (*field)(dom.index(i, j)) +=
                            c * std::cos(p * kPi * dom.x1(i) / dom.Lx) * std::cos(q * kPi * dom.x2(j) / dom.Ly);
            }
    }
    Vector x = state.pack();
    energy.project(x);
    return PlateState::unpack(x);
}

PlateResult minimize_plate(const PlateDomain& dom, const EffectiveForm& eff, const PlaneForm& pf,
                           const LoadSpec& load, const MinimizerParams& params) {
    load.validate(dom);
    if (params.n_starts < 1) throw std::invalid_argument("n_starts must be >= 1");
    if (!(params.tol > 0.0)) throw std::invalid_argument("minimizer tol must be positive");
    const PlateEnergy energy(dom, eff.M, pf, load);

    std::vector<int> signs;
    switch (load.sign) {
        case SignMode::plus: signs = {1}; break;
        case SignMode::minus: signs = {-1}; break;
        case SignMode::automatic: signs = {1, -1}; break;
    }

    struct Run {
        descent::Result result;
        int sign;
    };
    std::vector<Run> best_per_sign;
    PlateResult out;
    for (int sign : signs) {
        std::optional<Run> best;
        for (int k = 0; k < params.n_starts; ++k) {
            descent::Options opt;
            opt.method = params.method;
            opt.gtol = params.tol;
            opt.scale_by_energy = true;
            opt.max_iter = params.max_iter;
            opt.record_energies = true;
            opt.precondition = [&](const Vector& g) { return energy.precondition(g); };
            const double s = sign;
            auto result = descent::minimize([&](const Vector& x, Vector* g) { return energy.value(x, s, g); },
                                            initial_state(energy, params, k).pack(), opt,
                                            [&](Vector& x) { energy.project(x); });
            for (std::size_t i = 1; i < result.energies.size(); ++i) {
                if (result.energies[i] > result.energies[i - 1]) throw std::logic_error("plate energy increased");
            }
            StartSummary summary;
            summary.start = k;
            summary.sign = sign;
            summary.total = result.f;
            summary.grad_norm = result.grad_norm;
            summary.iterations = result.iterations;
            summary.status = result.status;
            summary.max_field = PlateState::unpack(result.x).max_abs();
            out.starts.push_back(summary);
            if (!best || result.f < best->result.f) best = Run{std::move(result), sign};
        }
        best_per_sign.push_back(std::move(*best));
    }

    const Run* winner = &best_per_sign.front();
    if (best_per_sign.size() == 2) {
        const Run& plus = best_per_sign[0];
        const Run& minus = best_per_sign[1];
        const double gap = plus.result.f - minus.result.f;
        if (std::abs(gap) <= 1e-12 * (1.0 + std::abs(plus.result.f))) {
            const double cutoff = 1e-12 * load.f3.cwiseAbs().maxCoeff();
            int tie_sign = 1;
            for (Eigen::Index p = 0; p < load.f3.size(); ++p)
                if (std::abs(load.f3(p)) > cutoff) {
                    tie_sign = load.f3(p) > 0.0 ? 1 : -1;
                    break;
                }
            winner = tie_sign == 1 ? &plus : &minus;
        } else {
            winner = gap < 0.0 ? &plus : &minus;
        }
    }

    out.state = PlateState::unpack(winner->result.x);
    out.s_chosen = winner->sign;
    out.energy = energy.breakdown(out.state, winner->sign);
    out.iterations = winner->result.iterations;
    out.grad_norm = winner->result.grad_norm;
    out.energies = winner->result.energies;
    if (winner->result.status != descent::Status::converged) {
        throw NoDecrease("plate descent " + descent::to_string(winner->result.status) + " with |P grad| = " +
                             std::to_string(winner->result.grad_norm) + " above the tolerance",
                         std::move(out));
    }
    return out;
}

namespace classical {

namespace {

struct Stencil {
    int offset[4];
    double c[4];
    int n;
};

Stencil first_stencil(int i, int m, double h) {
    if (i == 0) return {{0, 1, 2, 0}, {-1.5 / h, 2.0 / h, -0.5 / h, 0.0}, 3};
    if (i == m - 1) return {{0, -1, -2, 0}, {1.5 / h, -2.0 / h, 0.5 / h, 0.0}, 3};
    return {{-1, 1, 0, 0}, {-0.5 / h, 0.5 / h, 0.0, 0.0}, 2};
}

Stencil second_stencil(int i, int m, double h) {
    const double s = 1.0 / (h * h);
    if (i == 0) return {{0, 1, 2, 3}, {2.0 * s, -5.0 * s, 4.0 * s, -1.0 * s}, 4};
    if (i == m - 1) return {{0, -1, -2, -3}, {2.0 * s, -5.0 * s, 4.0 * s, -1.0 * s}, 4};
    return {{-1, 0, 1, 0}, {s, -2.0 * s, s, 0.0}, 3};
}

struct Grid2 {
    const PlateDomain& dom;
    std::size_t at(int i, int j) const { return static_cast<std::size_t>(j) * dom.m1 + i; }
};

double quad_weight(const PlateDomain& dom, int i, int j) {
    const double w1 = (i == 0 || i == dom.m1 - 1) ? 0.5 * dom.h1() : dom.h1();
    const double w2 = (j == 0 || j == dom.m2 - 1) ? 0.5 * dom.h2() : dom.h2();
    return w1 * w2;
}

// Linear gauge functionals as dense vectors on the packed state.
std::array<Vector, 6> gauge_rows(const PlateDomain& dom) {
    const Eigen::Index n = dom.points();
    std::array<Vector, 6> rows;
    for (auto& r : rows) r = Vector::Zero(3 * n);
    const Grid2 g{dom};
    for (int j = 0; j < dom.m2; ++j)
        for (int i = 0; i < dom.m1; ++i) {
            const double w = quad_weight(dom, i, j);
            const auto p = static_cast<Eigen::Index>(g.at(i, j));
            rows[0](p) += w;
            rows[1](n + p) += w;
            rows[3](2 * n + p) += w;
            const Stencil s1 = first_stencil(i, dom.m1, dom.h1());
            const Stencil s2 = first_stencil(j, dom.m2, dom.h2());
            for (int k = 0; k < s1.n; ++k) {
                const auto q = static_cast<Eigen::Index>(g.at(i + s1.offset[k], j));
                rows[2](n + q) -= w * s1.c[k];
                rows[4](2 * n + q) += w * s1.c[k];
            }
            for (int k = 0; k < s2.n; ++k) {
                const auto q = static_cast<Eigen::Index>(g.at(i, j + s2.offset[k]));
                rows[2](q) += w * s2.c[k];
                rows[5](2 * n + q) += w * s2.c[k];
            }
        }
    return rows;
}

}  // namespace

double energy(const PlateState& state, const PlaneForm& pf, const PlateDomain& dom, const Vector& f3, double s,
              PlateState* grad) {
    const Grid2 g{dom};
    if (grad) *grad = PlateState::zero(dom);
    double total = 0.0;
    for (int j = 0; j < dom.m2; ++j)
        for (int i = 0; i < dom.m1; ++i) {
            const Stencil a1 = first_stencil(i, dom.m1, dom.h1()), a2 = first_stencil(j, dom.m2, dom.h2());
            const Stencil b1 = second_stencil(i, dom.m1, dom.h1()), b2 = second_stencil(j, dom.m2, dom.h2());
            auto dx1 = [&](const Vector& f) {
                double r = 0.0;
                for (int k = 0; k < a1.n; ++k) r += a1.c[k] * f(g.at(i + a1.offset[k], j));
                return r;
            };
            auto dx2 = [&](const Vector& f) {
                double r = 0.0;
                for (int k = 0; k < a2.n; ++k) r += a2.c[k] * f(g.at(i, j + a2.offset[k]));
                return r;
            };
            double vxx = 0.0, vyy = 0.0, vxy = 0.0;
            for (int k = 0; k < b1.n; ++k) vxx += b1.c[k] * state.v(g.at(i + b1.offset[k], j));
            for (int k = 0; k < b2.n; ++k) vyy += b2.c[k] * state.v(g.at(i, j + b2.offset[k]));
            for (int k = 0; k < a1.n; ++k)
                for (int l = 0; l < a2.n; ++l)
                    vxy += a1.c[k] * a2.c[l] * state.v(g.at(i + a1.offset[k], j + a2.offset[l]));
            const double vx = dx1(state.v), vy = dx2(state.v);
            const elastic::SymMat2 strain{dx1(state.u1) + 0.5 * vx * vx, dx2(state.u2) + 0.5 * vy * vy,
                                 0.5 * (dx2(state.u1) + dx1(state.u2)) + 0.5 * vx * vy};
            const elastic::SymMat2 curvature{vxx, vyy, vxy};
            const double w = quad_weight(dom, i, j);
            const std::size_t p = g.at(i, j);
            total += w * (0.5 * pf.q2(strain) + pf.q2(curvature) / 24.0 - s * f3(p) * state.v(p));
            if (!grad) continue;

            // Frobenius derivatives: dQ2(E)/dE = 2 A E, shear entries counted twice.
            const elastic::SymMat2 n = pf.apply(strain);
            const elastic::SymMat2 m = pf.apply(curvature);
            const double g11 = w * n.a11, g22 = w * n.a22, g12 = 2.0 * w * n.a12;
            const double c11 = w * m.a11 / 12.0, c22 = w * m.a22 / 12.0, c12 = 2.0 * w * m.a12 / 12.0;
            const double gvx = g11 * vx + 0.5 * g12 * vy;
            const double gvy = g22 * vy + 0.5 * g12 * vx;
            for (int k = 0; k < a1.n; ++k) {
                const std::size_t q = g.at(i + a1.offset[k], j);
                grad->u1(q) += a1.c[k] * g11;
                grad->u2(q) += a1.c[k] * 0.5 * g12;
                grad->v(q) += a1.c[k] * gvx;
            }
            for (int k = 0; k < a2.n; ++k) {
                const std::size_t q = g.at(i, j + a2.offset[k]);
                grad->u2(q) += a2.c[k] * g22;
                grad->u1(q) += a2.c[k] * 0.5 * g12;
                grad->v(q) += a2.c[k] * gvy;
            }
            for (int k = 0; k < b1.n; ++k) grad->v(g.at(i + b1.offset[k], j)) += b1.c[k] * c11;
            for (int k = 0; k < b2.n; ++k) grad->v(g.at(i, j + b2.offset[k])) += b2.c[k] * c22;
            for (int k = 0; k < a1.n; ++k)
                for (int l = 0; l < a2.n; ++l)
                    grad->v(g.at(i + a1.offset[k], j + a2.offset[l])) += a1.c[k] * a2.c[l] * c12;
            grad->v(p) -= w * s * f3(p);
        }
    return total;
}

Result minimize(const PlateDomain& dom, const PlaneForm& pf, const Vector& f3, double s, double tol, int max_iter,
                const PlateState& start) {
    const auto rows = gauge_rows(dom);
    Eigen::Matrix<double, 6, 6> gram;
    for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) gram(a, b) = rows[a].dot(rows[b]);
    const Eigen::LDLT<Eigen::Matrix<double, 6, 6>> ldlt(gram);
    auto project = [&](Vector& x) {
        Eigen::Matrix<double, 6, 1> c;
        for (int a = 0; a < 6; ++a) c(a) = rows[a].dot(x);
        const Eigen::Matrix<double, 6, 1> y = ldlt.solve(c);
        for (int a = 0; a < 6; ++a) x -= y(a) * rows[a];
    };
    descent::Options opt;
    opt.method = descent::Method::cg;
    opt.gtol = tol;
    opt.scale_by_energy = true;
    opt.max_iter = max_iter;
    const auto r = descent::minimize(
        [&](const Vector& x, Vector* grad) {
            PlateState gs;
            const double e = energy(PlateState::unpack(x), pf, dom, f3, s, grad ? &gs : nullptr);
            if (grad) *grad = gs.pack();
            return e;
        },
        start.pack(), opt, project);
    return {PlateState::unpack(r.x), r.f, r.grad_norm, r.status};
}

}  // namespace classical

}  // namespace wrinkle::plate
