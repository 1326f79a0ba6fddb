#include "wrinkle/cell_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace wrinkle::cell {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kBendingWeight = 1.0 / 12.0;

using fourier::cplx;

Eigen::Vector3d scaled(double a11, double a22, double a12) { return {a11, a22, kSqrt2 * a12}; }

}  // namespace

const std::array<std::string, 6> kBasisNames{"G11", "G22", "G12", "F11", "F22", "F12"};

Vector6 CellLoad::z() const {
    Vector6 z;
    z << G.scaled(), F.scaled();
    return z;
}

CellLoad CellLoad::from_z(const Vector6& z) {
    return {SymMat2::from_scaled(z.head<3>()), SymMat2::from_scaled(z.tail<3>())};
}

void CellParams::validate(int shape_band) const {
    if (N < 1) throw std::invalid_argument("cell band limit N must be >= 1");
    if (N < shape_band) {
        throw std::invalid_argument("cell band limit N = " + std::to_string(N) + " is below the shape band " +
                                    std::to_string(shape_band));
    }
    if (!(cg_tol > 0.0 && cg_tol < 1.0)) throw std::invalid_argument("cg_tol must lie in (0, 1)");
    if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
}

double CorrectorSolution::seminorm_squared() const {
    const int b = band();
    double sum = 0.0;
    for (int k2 = -b; k2 <= b; ++k2)
        for (int k1 = -b; k1 <= b; ++k1) {
            const double k2pi = kTwoPi * kTwoPi * (k1 * k1 + k2 * k2);
            sum += k2pi * (std::norm(u1_1(k1, k2)) + std::norm(u1_2(k1, k2))) + k2pi * k2pi * std::norm(v1(k1, k2));
        }
    return sum;
}

CorrectorSolution linear_combination(double a, const CorrectorSolution& x, double b, const CorrectorSolution& y) {
    CorrectorSolution out = x;
    auto combine = [&](fourier::ModeArray& o, const fourier::ModeArray& p, const fourier::ModeArray& q) {
        for (std::size_t i = 0; i < o.size(); ++i) o.data()[i] = a * p.data()[i] + b * q.data()[i];
    };
    combine(out.u1_1, x.u1_1, y.u1_1);
    combine(out.u1_2, x.u1_2, y.u1_2);
    combine(out.v1, x.v1, y.v1);
    out.residual = 0.0;
    out.iterations = 0;
    return out;
}

int padded_grid_size(int N, int shape_band, bool dealias) {
    const int base = 2 * N + 1;
    if (!dealias) return base;
    return std::max((3 * base + 1) / 2, 2 * (N + shape_band) + 1);
}

struct CellProblem::PointFields {
    std::array<std::vector<double>, 3> membrane; // E = G + F theta0 + sym grad u - grad^2 v theta0
    std::array<std::vector<double>, 3> bending;  // K = grad^2 v
};

CellProblem::CellProblem(const ShapeFunction& s, const PlaneForm& pf, const CellParams& params)
    : params_(params), a_(pf.matrix()) {
    params_.validate(s.band());
    grid_ = padded_grid_size(params_.N, s.band(), params_.dealias);
    const int w = 2 * params_.N + 1;
    block_ = static_cast<Eigen::Index>(w) * w;
    theta0_ = shape::sample(shape::theta_zero(s), shape::Derivative::none, grid_).values;

    membrane_inverse_.assign(static_cast<std::size_t>(block_), Eigen::Matrix2d::Zero());
    bending_inverse_.assign(static_cast<std::size_t>(block_), 0.0);
    fourier::ModeArray layout(params_.N);
    for (int k2 = -params_.N; k2 <= params_.N; ++k2)
        for (int k1 = -params_.N; k1 <= params_.N; ++k1) {
            if (k1 == 0 && k2 == 0) continue;
            const std::size_t i = layout.index(k1, k2);
            Eigen::Matrix<double, 3, 2> d;
            d << k1, 0.0, 0.0, k2, k2 / kSqrt2, k1 / kSqrt2;
            const Eigen::Matrix2d pu = kTwoPi * kTwoPi * d.transpose() * a_ * d;
            membrane_inverse_[i] = pu.inverse();
            const Eigen::Vector3d h = scaled(double(k1) * k1, double(k2) * k2, double(k1) * k2);
            const double pv = kBendingWeight * std::pow(kTwoPi, 4) * h.dot(a_ * h);
            bending_inverse_[i] = 1.0 / pv;
        }
}

CellProblem::PointFields CellProblem::fields(const CellLoad& load, const CoeffVector& x) const {
    const int n = grid_;
    const int b = params_.N;
    const std::size_t npts = static_cast<std::size_t>(n) * n;
    fourier::ModeArray layout(b);

    // Spectral multipliers for S11, S22, S12, H11, H22, H12.
    std::array<std::vector<cplx>, 6> buf;
    for (auto& v : buf) v.assign(npts, cplx(0.0));
    if (x.size() == size()) {
        for (int k2 = -b; k2 <= b; ++k2)
            for (int k1 = -b; k1 <= b; ++k1) {
                const auto i = static_cast<Eigen::Index>(layout.index(k1, k2));
                const cplx u1 = x(i);
                const cplx u2 = x(block_ + i);
                const cplx v = x(2 * block_ + i);
                const cplx i1(0.0, kTwoPi * k1);
                const cplx i2(0.0, kTwoPi * k2);
                const std::size_t g = static_cast<std::size_t>(fourier::wrap(k2, n)) * n + fourier::wrap(k1, n);
                buf[0][g] = i1 * u1;
                buf[1][g] = i2 * u2;
                buf[2][g] = 0.5 * (i2 * u1 + i1 * u2);
                buf[3][g] = i1 * i1 * v;
                buf[4][g] = i2 * i2 * v;
                buf[5][g] = i1 * i2 * v;
            }
        for (auto& v : buf) fourier::transform(v, n, +1);
    }

    PointFields f;
    for (int c = 0; c < 3; ++c) {
        f.membrane[c].resize(npts);
        f.bending[c].resize(npts);
    }
    const std::array<double, 3> g{load.G.a11, load.G.a22, load.G.a12};
    const std::array<double, 3> fc{load.F.a11, load.F.a22, load.F.a12};
    for (std::size_t p = 0; p < npts; ++p) {
        const double t = theta0_[p];
        for (int c = 0; c < 3; ++c) {
            const double hess = buf[3 + c][p].real();
            f.membrane[c][p] = g[c] + fc[c] * t + buf[c][p].real() - hess * t;
            f.bending[c][p] = hess;
        }
    }
    return f;
}

CoeffVector CellProblem::adjoint(const std::array<std::vector<double>, 3>& stress,
                                 const std::array<std::vector<double>, 3>& moment) const {
    const int n = grid_;
    const int b = params_.N;
    const double scale = 1.0 / (static_cast<double>(n) * n);
    std::array<std::vector<cplx>, 6> hat;
    for (int c = 0; c < 3; ++c) {
        hat[c].assign(stress[c].begin(), stress[c].end());
        hat[3 + c].assign(moment[c].begin(), moment[c].end());
    }
    for (auto& v : hat) fourier::transform(v, n, -1);

    CoeffVector r = CoeffVector::Zero(size());
    fourier::ModeArray layout(b);
    for (int k2 = -b; k2 <= b; ++k2)
        for (int k1 = -b; k1 <= b; ++k1) {
            if (k1 == 0 && k2 == 0) continue;
            const std::size_t g = static_cast<std::size_t>(fourier::wrap(k2, n)) * n + fourier::wrap(k1, n);
            const cplx s11 = scale * hat[0][g], s22 = scale * hat[1][g], s12 = scale * hat[2][g];
            const cplx m11 = scale * hat[3][g], m22 = scale * hat[4][g], m12 = scale * hat[5][g];
            // conj of the derivative multipliers 2 pi i k and -(2 pi)^2 k k
            const cplx c1(0.0, -kTwoPi * k1);
            const cplx c2(0.0, -kTwoPi * k2);
            const auto i = static_cast<Eigen::Index>(layout.index(k1, k2));
            r(i) = c1 * s11 + c2 * s12;
            r(block_ + i) = c1 * s12 + c2 * s22;
            r(2 * block_ + i) = c1 * c1 * m11 + c2 * c2 * m22 + 2.0 * c1 * c2 * m12;
        }
    return r;
}

CoeffVector CellProblem::apply(const CoeffVector& x) const {
    const PointFields f = fields(CellLoad{}, x);
    const std::size_t npts = theta0_.size();
    std::array<std::vector<double>, 3> stress, moment;
    for (int c = 0; c < 3; ++c) {
        stress[c].resize(npts);
        moment[c].resize(npts);
    }
    for (std::size_t p = 0; p < npts; ++p) {
        const SymMat2 sigma = SymMat2::from_scaled(
            a_ * scaled(f.membrane[0][p], f.membrane[1][p], f.membrane[2][p]));
        const SymMat2 kappa = SymMat2::from_scaled(
            a_ * scaled(f.bending[0][p], f.bending[1][p], f.bending[2][p]));
        const double t = theta0_[p];
        stress[0][p] = sigma.a11;
        stress[1][p] = sigma.a22;
        stress[2][p] = sigma.a12;
        moment[0][p] = -sigma.a11 * t + kBendingWeight * kappa.a11;
        moment[1][p] = -sigma.a22 * t + kBendingWeight * kappa.a22;
        moment[2][p] = -sigma.a12 * t + kBendingWeight * kappa.a12;
    }
    return adjoint(stress, moment);
}

CoeffVector CellProblem::rhs(const CellLoad& load) const {
    const std::size_t npts = theta0_.size();
    std::array<std::vector<double>, 3> stress, moment;
    for (int c = 0; c < 3; ++c) {
        stress[c].resize(npts);
        moment[c].resize(npts);
    }
    for (std::size_t p = 0; p < npts; ++p) {
        const double t = theta0_[p];
        const SymMat2 sigma = SymMat2::from_scaled(a_ * (load.G + load.F * t).scaled());
        // A G is constant and only meets the dropped mean mode of sym grad phi.
        const SymMat2 varying = SymMat2::from_scaled(a_ * (load.F * t).scaled());
        stress[0][p] = -varying.a11;
        stress[1][p] = -varying.a22;
        stress[2][p] = -varying.a12;
        moment[0][p] = sigma.a11 * t;
        moment[1][p] = sigma.a22 * t;
        moment[2][p] = sigma.a12 * t;
    }
    return adjoint(stress, moment);
}

CoeffVector CellProblem::precondition(const CoeffVector& r) const {
    CoeffVector z(r.size());
    for (Eigen::Index i = 0; i < block_; ++i) {
        const auto& m = membrane_inverse_[static_cast<std::size_t>(i)];
        const cplx a = r(i);
        const cplx b = r(block_ + i);
        z(i) = m(0, 0) * a + m(0, 1) * b;
        z(block_ + i) = m(1, 0) * a + m(1, 1) * b;
        z(2 * block_ + i) = bending_inverse_[static_cast<std::size_t>(i)] * r(2 * block_ + i);
    }
    return z;
}

CorrectorSolution CellProblem::solve(const CellLoad& load) const {
    const CoeffVector b = rhs(load);
    const double bnorm = std::sqrt(dot(b, b));
    CoeffVector x = CoeffVector::Zero(size());
    if (bnorm == 0.0) return unpack(x);

    CoeffVector r = b;
    CoeffVector z = precondition(r);
    CoeffVector p = z;
    double rz = dot(r, z);
    double rel = 1.0;
    int it = 0;
    while (it < params_.max_iter) {
        const CoeffVector bp = apply(p);
        const double alpha = rz / dot(p, bp);
        x += alpha * p;
        r -= alpha * bp;
        ++it;
        rel = std::sqrt(dot(r, r)) / bnorm;
        if (rel <= params_.cg_tol) break;
        z = precondition(r);
        const double rz_new = dot(r, z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    if (rel > params_.cg_tol) {
        throw NonConvergence("cell problem: relative residual " + std::to_string(rel) + " above cg_tol after " +
                                 std::to_string(it) + " iterations",
                             rel);
    }
    CorrectorSolution sol = unpack(x);
    sol.residual = rel;
    sol.iterations = it;
    return sol;
}

CoeffVector CellProblem::pack(const CorrectorSolution& sol) const {
    if (sol.band() != params_.N) throw std::invalid_argument("corrector band does not match the cell problem");
    CoeffVector x(size());
    for (Eigen::Index i = 0; i < block_; ++i) {
        const auto j = static_cast<std::size_t>(i);
        x(i) = sol.u1_1.data()[j];
        x(block_ + i) = sol.u1_2.data()[j];
        x(2 * block_ + i) = sol.v1.data()[j];
    }
    return x;
}

CorrectorSolution CellProblem::unpack(const CoeffVector& x) const {
    const int b = params_.N;
    CorrectorSolution sol{fourier::ModeArray(b), fourier::ModeArray(b), fourier::ModeArray(b)};
    std::array<fourier::ModeArray*, 3> out{&sol.u1_1, &sol.u1_2, &sol.v1};
    for (int c = 0; c < 3; ++c) {
        auto& m = *out[c];
        for (int k2 = -b; k2 <= b; ++k2)
            for (int k1 = -b; k1 <= b; ++k1) {
                if (k1 == 0 && k2 == 0) continue;
                const auto i = static_cast<Eigen::Index>(m.index(k1, k2));
                const auto j = static_cast<Eigen::Index>(m.index(-k1, -k2));
                // Hermitian part: the field is real.
                m(k1, k2) = 0.5 * (x(c * block_ + i) + std::conj(x(c * block_ + j)));
            }
    }
    return sol;
}

CoeffVector CellProblem::random_vector(std::mt19937_64& rng) const {
    std::normal_distribution<double> gauss;
    const int b = params_.N;
    CoeffVector x = CoeffVector::Zero(size());
    fourier::ModeArray layout(b);
    for (int c = 0; c < 3; ++c)
        for (int k2 = -b; k2 <= b; ++k2)
            for (int k1 = -b; k1 <= b; ++k1) {
                const auto i = static_cast<Eigen::Index>(layout.index(k1, k2));
                const auto j = static_cast<Eigen::Index>(layout.index(-k1, -k2));
                if (i >= j) continue;  // handle each +-k pair once; k = 0 stays zero
                const double decay = 1.0 / (1.0 + k1 * k1 + k2 * k2);
                const cplx v(decay * gauss(rng), decay * gauss(rng));
                x(c * block_ + i) = v;
                x(c * block_ + j) = std::conj(v);
            }
    return x;
}

double CellProblem::bilinear(const CellLoad& la, const CorrectorSolution& sa, const CellLoad& lb,
                             const CorrectorSolution& sb) const {
    const PointFields fa = fields(la, pack(sa));
    const PointFields fb = fields(lb, pack(sb));
    const std::size_t npts = theta0_.size();
    double sum = 0.0;
    for (std::size_t p = 0; p < npts; ++p) {
        const Eigen::Vector3d ea = scaled(fa.membrane[0][p], fa.membrane[1][p], fa.membrane[2][p]);
        const Eigen::Vector3d eb = scaled(fb.membrane[0][p], fb.membrane[1][p], fb.membrane[2][p]);
        const Eigen::Vector3d ka = scaled(fa.bending[0][p], fa.bending[1][p], fa.bending[2][p]);
        const Eigen::Vector3d kb = scaled(fb.bending[0][p], fb.bending[1][p], fb.bending[2][p]);
        sum += ea.dot(a_ * eb) + kBendingWeight * ka.dot(a_ * kb);
    }
    return sum / static_cast<double>(npts);
}

double CellProblem::energy(const CellLoad& load, const CorrectorSolution& sol) const {
    return bilinear(load, sol, load, sol);
}

CoeffVector cell_operator_apply(const CoeffVector& x, const ShapeFunction& s, const PlaneForm& pf,
                                const CellParams& params) {
    return CellProblem(s, pf, params).apply(x);
}

CorrectorSolution solve_cell(const CellLoad& load, const ShapeFunction& s, const PlaneForm& pf,
                             const CellParams& params) {
    return CellProblem(s, pf, params).solve(load);
}

double effective_value(const CellLoad& load, const CorrectorSolution& sol, const ShapeFunction& s,
                       const PlaneForm& pf, bool dealias) {
    CellParams params;
    params.N = std::max(sol.band(), s.band());
    params.dealias = dealias;
    const CellProblem problem(s, pf, params);
    if (sol.band() == params.N) return problem.energy(load, sol);
    // Shape band exceeds the corrector band: zero-extend the correctors.
    CorrectorSolution ext{fourier::ModeArray(params.N), fourier::ModeArray(params.N), fourier::ModeArray(params.N)};
    const int b = sol.band();
    for (int k2 = -b; k2 <= b; ++k2)
        for (int k1 = -b; k1 <= b; ++k1) {
            ext.u1_1(k1, k2) = sol.u1_1(k1, k2);
            ext.u1_2(k1, k2) = sol.u1_2(k1, k2);
            ext.v1(k1, k2) = sol.v1(k1, k2);
        }
    return problem.energy(load, ext);
}

double zero_corrector_bound(const CellLoad& load, const ShapeFunction& s, const PlaneForm& pf) {
    // <theta0> = 0 removes the cross term.
    double theta0_sq = 0.0;
    for (const auto& [k, c] : s.coefficients())
        if (k != shape::Wavevector{0, 0}) theta0_sq += std::norm(c);
    return pf.q2(load.G) + pf.q2(load.F) * theta0_sq;
}

double EffectiveForm::norm() const {
    return eigenvalues().cwiseAbs().maxCoeff();
}

Vector6 EffectiveForm::eigenvalues() const {
    return Eigen::SelfAdjointEigenSolver<Matrix6>(M).eigenvalues();
}

int EffectiveForm::numerical_kernel_dim(double rel_threshold) const {
    const Vector6 ev = eigenvalues();
    const double limit = rel_threshold * norm();
    return static_cast<int>((ev.array() < limit).count());
}

Eigen::MatrixXd EffectiveForm::kernel_directions() const {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(6, kernel.dim());
    for (int j = 0; j < kernel.dim(); ++j) v.block<3, 1>(3, j) = kernel.vectors[static_cast<std::size_t>(j)].scaled();
    return v;
}

double EffectiveForm::restricted_min_eigenvalue() const {
    const Eigen::MatrixXd v = kernel_directions();
    const Matrix6 projector = Matrix6::Identity() - v * v.transpose();
    const Eigen::SelfAdjointEigenSolver<Matrix6> peig(projector);
    // Eigenvectors with eigenvalue ~1 span the complement.
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < 6; ++j)
        if (peig.eigenvalues()(j) > 0.5) cols.push_back(j);
    Eigen::MatrixXd w(6, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) w.col(static_cast<Eigen::Index>(j)) = peig.eigenvectors().col(cols[j]);
    const Eigen::MatrixXd restricted = w.transpose() * M * w;
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(restricted).eigenvalues().minCoeff();
}

std::array<CorrectorSolution, 6> solve_basis(const CellProblem& problem) {
    std::array<CorrectorSolution, 6> sols;
    for (int i = 0; i < 6; ++i) {
        try {
            sols[static_cast<std::size_t>(i)] = problem.solve(CellLoad::from_z(Vector6::Unit(i)));
        } catch (const NonConvergence& e) {
            throw NonConvergence(std::string(e.what()) + " [basis load " + kBasisNames[static_cast<std::size_t>(i)] +
                                     "]",
                                 e.residual(), kBasisNames[static_cast<std::size_t>(i)]);
        }
    }
    return sols;
}

EffectiveForm assemble_from_correctors(const CellProblem& problem, const std::array<CorrectorSolution, 6>& sols,
                                       const ShapeFunction& s) {
    EffectiveForm form;
    std::array<CellLoad, 6> loads;
    Vector6 diag;
    for (int i = 0; i < 6; ++i) {
        loads[static_cast<std::size_t>(i)] = CellLoad::from_z(Vector6::Unit(i));
        diag(i) = problem.energy(loads[static_cast<std::size_t>(i)], sols[static_cast<std::size_t>(i)]);
        form.iterations[static_cast<std::size_t>(i)] = sols[static_cast<std::size_t>(i)].iterations;
    }
    // Gram matrix of the correctors in the seminorm; its top eigenvalue is the sharp a-priori constant.
    Matrix6 gram;
    for (int i = 0; i < 6; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        gram(i, i) = sols[ui].seminorm_squared();
        for (int j = 0; j < i; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            const double sum = linear_combination(1.0, sols[ui], 1.0, sols[uj]).seminorm_squared();
            gram(i, j) = gram(j, i) = 0.5 * (sum - gram(i, i) - sols[uj].seminorm_squared());
        }
    }
    form.bound_constant = Eigen::SelfAdjointEigenSolver<Matrix6>(gram).eigenvalues().maxCoeff();
    Matrix6 bil;
    for (int i = 0; i < 6; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        form.M(i, i) = diag(i);
        bil(i, i) = diag(i);
        for (int j = i + 1; j < 6; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            // Correctors are linear in the load: x(z_i + z_j) = x_i + x_j.
            const CellLoad sum = CellLoad::from_z(Vector6::Unit(i) + Vector6::Unit(j));
            const double q = problem.energy(sum, linear_combination(1.0, sols[ui], 1.0, sols[uj]));
            form.M(i, j) = form.M(j, i) = 0.5 * (q - diag(i) - diag(j));
            bil(i, j) = bil(j, i) = problem.bilinear(loads[ui], sols[ui], loads[uj], sols[uj]);
        }
    }
    const double scale = std::max(form.norm(), 1e-300);
    form.polarization_mismatch = (form.M - bil).cwiseAbs().maxCoeff() / scale;
    form.kernel = shape::compute_kernel_V(s);
    form.coercivity_mu = form.restricted_min_eigenvalue();
    return form;
}

EffectiveForm assemble_effective_matrix(const ShapeFunction& s, const PlaneForm& pf, const CellParams& params) {
    const CellProblem problem(s, pf, params);
    return assemble_from_correctors(problem, solve_basis(problem), s);
}

}  // namespace wrinkle::cell
