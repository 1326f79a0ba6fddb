#include "wrinkle/cell_oracle.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace wrinkle::cell {

namespace {
constexpr double kSqrt2 = std::numbers::sqrt2;
}

RealSpaceCell::RealSpaceCell(const ShapeFunction& s, const PlaneForm& pf, int n) : n_(n), a_(pf.matrix()) {
    if (n < 2 * s.band() + 1) throw std::invalid_argument("oracle grid below the aliasing bound 2 N_theta + 1");
    theta0_.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int j2 = 0; j2 < n; ++j2)
        for (int j1 = 0; j1 < n; ++j1) {
            double t = 0.0;
            for (const auto& [k, c] : s.coefficients()) {
                if (k.first == 0 && k.second == 0) continue;
                const double phase = 2.0 * std::numbers::pi * (double(k.first) * j1 + double(k.second) * j2) / n;
                t += c.real() * std::cos(phase) - c.imag() * std::sin(phase);
            }
            theta0_[static_cast<std::size_t>(j2) * n + j1] = t;
        }
}

double RealSpaceCell::energy(const CellLoad& load, const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
    const int n = n_;
    const std::size_t npts = static_cast<std::size_t>(n) * n;
    const double h = 1.0 / n;
    const double w = 1.0 / static_cast<double>(npts);
    const double* u1 = x.data();
    const double* u2 = x.data() + npts;
    const double* v = x.data() + 2 * npts;
    if (grad) grad->setZero(x.size());
    double* g1 = grad ? grad->data() : nullptr;
    double* g2 = grad ? grad->data() + npts : nullptr;
    double* gv = grad ? grad->data() + 2 * npts : nullptr;

    auto at = [n](int i, int j) {
        i = (i % n + n) % n;
        j = (j % n + n) % n;
        return static_cast<std::size_t>(j) * n + i;
    };

    double total = 0.0;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const std::size_t p = at(i, j);
            const std::size_t e = at(i + 1, j), wst = at(i - 1, j), nth = at(i, j + 1), sth = at(i, j - 1);
            const std::size_t ne = at(i + 1, j + 1), nw = at(i - 1, j + 1), se = at(i + 1, j - 1),
                              sw = at(i - 1, j - 1);
            const double s11 = (u1[e] - u1[wst]) / (2 * h);
            const double s22 = (u2[nth] - u2[sth]) / (2 * h);
            const double s12 = 0.5 * ((u1[nth] - u1[sth]) + (u2[e] - u2[wst])) / (2 * h);
            const double h11 = (v[e] - 2 * v[p] + v[wst]) / (h * h);
            const double h22 = (v[nth] - 2 * v[p] + v[sth]) / (h * h);
            const double h12 = (v[ne] - v[se] - v[nw] + v[sw]) / (4 * h * h);
            const double t = theta0_[p];
            const Eigen::Vector3d em(load.G.a11 + load.F.a11 * t + s11 - h11 * t,
                                     load.G.a22 + load.F.a22 * t + s22 - h22 * t,
                                     kSqrt2 * (load.G.a12 + load.F.a12 * t + s12 - h12 * t));
            const Eigen::Vector3d kb(h11, h22, kSqrt2 * h12);
            const Eigen::Vector3d sm = a_ * em;
            const Eigen::Vector3d sb = a_ * kb;
            total += w * (em.dot(sm) + kb.dot(sb) / 12.0);
            if (!grad) continue;

            // d/d(component) of w (Q2(E) + Q2(K)/12), shear entries counted as the unscaled a12.
            const double d11 = 2 * w * sm(0), d22 = 2 * w * sm(1), d12 = 2 * w * kSqrt2 * sm(2);
            const double k11 = -t * d11 + 2 * w * sb(0) / 12.0;
            const double k22 = -t * d22 + 2 * w * sb(1) / 12.0;
            const double k12 = -t * d12 + 2 * w * kSqrt2 * sb(2) / 12.0;
            g1[e] += d11 / (2 * h);
            g1[wst] -= d11 / (2 * h);
            g2[nth] += d22 / (2 * h);
            g2[sth] -= d22 / (2 * h);
            g1[nth] += 0.5 * d12 / (2 * h);
            g1[sth] -= 0.5 * d12 / (2 * h);
            g2[e] += 0.5 * d12 / (2 * h);
            g2[wst] -= 0.5 * d12 / (2 * h);
            gv[e] += k11 / (h * h);
            gv[wst] += k11 / (h * h);
            gv[p] -= 2 * k11 / (h * h) + 2 * k22 / (h * h);
            gv[nth] += k22 / (h * h);
            gv[sth] += k22 / (h * h);
            gv[ne] += k12 / (4 * h * h);
            gv[sw] += k12 / (4 * h * h);
            gv[se] -= k12 / (4 * h * h);
            gv[nw] -= k12 / (4 * h * h);
        }
    return total;
}

void RealSpaceCell::project_mean_zero(Eigen::VectorXd& x) const {
    const Eigen::Index npts = static_cast<Eigen::Index>(n_) * n_;
    for (int c = 0; c < 3; ++c) {
        auto seg = x.segment(c * npts, npts);
        seg.array() -= seg.mean();
    }
}

double cell_oracle(const CellLoad& load, const ShapeFunction& s, const PlaneForm& pf, int n,
                   const OracleParams& params) {
    const RealSpaceCell cell(s, pf, n);
    descent::Options opt;
    opt.method = params.method;
    opt.gtol = params.gtol_factor * (1.0 + std::sqrt(load.norm_squared()));
    opt.max_iter = params.max_iter;
    opt.approx_decrease_eps = 1e-12;
    const auto result = descent::minimize(
        [&](const Eigen::VectorXd& x, Eigen::VectorXd* g) { return cell.energy(load, x, g); },
        Eigen::VectorXd::Zero(cell.size()), opt, [&](Eigen::VectorXd& x) { cell.project_mean_zero(x); });
    if (result.status != descent::Status::converged) {
        throw OracleIterationCap("cell oracle did not reach the gradient tolerance (" +
                                 descent::to_string(result.status) + ", |grad| = " +
                                 std::to_string(result.grad_norm) + ")");
    }
    return result.f;
}

double cell_oracle_extrapolated(const CellLoad& load, const ShapeFunction& s, const PlaneForm& pf, int n,
                                const OracleParams& params) {
    const double coarse = cell_oracle(load, s, pf, n, params);
    const double fine = cell_oracle(load, s, pf, 2 * n, params);
    return (4.0 * fine - coarse) / 3.0;
}

}  // namespace wrinkle::cell
