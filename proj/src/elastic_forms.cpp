#include "wrinkle/elastic_forms.hpp"

#include <cmath>
#include <string>

namespace wrinkle::elastic {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

// Index pairs of the Voigt ordering (11, 22, 33, 23, 13, 12).
constexpr std::array<std::array<int, 2>, 6> kVoigt{{{0, 0}, {1, 1}, {2, 2}, {1, 2}, {0, 2}, {0, 1}}};

Mat3 mandel_basis(int n) {
    Mat3 e = Mat3::Zero();
    const auto [i, j] = kVoigt[n];
    if (i == j) {
        e(i, j) = 1.0;
    } else {
        e(i, j) = e(j, i) = 1.0 / kSqrt2;
    }
    return e;
}

Mat3 stretch_direction(int p) {
    Mat3 b = Mat3::Zero();
    b(p, 2) += 1.0;
    b(2, p) += 1.0;
    return b;
}

ElasticTensor3 as_tensor(const ElasticModel& model) {
    if (const auto* iso = std::get_if<IsotropicModuli>(&model)) {
        return ElasticTensor3::from_isotropic(*iso);
    }
    return std::get<ElasticTensor3>(model);
}

}  // namespace

SymMat2 SymMat2::from_scaled(const Vec3& z) { return {z(0), z(1), z(2) / kSqrt2}; }

Vec3 SymMat2::scaled() const { return {a11, a22, kSqrt2 * a12}; }

double SymMat2::dot(const SymMat2& o) const { return a11 * o.a11 + a22 * o.a22 + 2.0 * a12 * o.a12; }

double SymMat2::norm() const { return std::sqrt(dot(*this)); }

void IsotropicModuli::validate() const {
    if (!(mu > 0.0) || !std::isfinite(mu)) {
        throw InvalidModel("isotropic model requires mu > 0, got " + std::to_string(mu));
    }
    if (!(2.0 * mu + lambda > 0.0) || !std::isfinite(lambda)) {
        throw InvalidModel("isotropic model requires 2 mu + lambda > 0");
    }
}

ElasticTensor3::ElasticTensor3(const Storage& c) : c_(c) {}

ElasticTensor3 ElasticTensor3::from_isotropic(const IsotropicModuli& m) {
    Storage c{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                for (int l = 0; l < 3; ++l) {
                    const double dij = i == j ? 1.0 : 0.0;
                    const double dkl = k == l ? 1.0 : 0.0;
                    const double dik = i == k ? 1.0 : 0.0;
                    const double djl = j == l ? 1.0 : 0.0;
                    const double dil = i == l ? 1.0 : 0.0;
                    const double djk = j == k ? 1.0 : 0.0;
                    c[i][j][k][l] = m.lambda * dij * dkl + m.mu * (dik * djl + dil * djk);
                }
    return ElasticTensor3(c);
}

ElasticTensor3 ElasticTensor3::from_voigt21(const std::array<double, 21>& upper) {
    double voigt[6][6];
    int n = 0;
    for (int r = 0; r < 6; ++r) {
        for (int s = r; s < 6; ++s) {
            voigt[r][s] = voigt[s][r] = upper[n++];
        }
    }
    Storage c{};
    for (int r = 0; r < 6; ++r) {
        for (int s = 0; s < 6; ++s) {
            const auto [i, j] = kVoigt[r];
            const auto [k, l] = kVoigt[s];
            c[i][j][k][l] = c[j][i][k][l] = c[i][j][l][k] = c[j][i][l][k] = voigt[r][s];
        }
    }
    return ElasticTensor3(c);
}

double ElasticTensor3::bilinear(const Mat3& a, const Mat3& b) const {
    double sum = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                for (int l = 0; l < 3; ++l) sum += c_[i][j][k][l] * a(i, j) * b(k, l);
    return sum;
}

Eigen::Matrix<double, 6, 6> ElasticTensor3::mandel() const {
    Eigen::Matrix<double, 6, 6> m;
    for (int r = 0; r < 6; ++r)
        for (int s = 0; s < 6; ++s) m(r, s) = bilinear(mandel_basis(r), mandel_basis(s));
    return m;
}

void ElasticTensor3::validate() const {
    double scale = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                for (int l = 0; l < 3; ++l) {
                    if (!std::isfinite(c_[i][j][k][l])) throw InvalidModel("elastic tensor has a non-finite entry");
                    scale = std::max(scale, std::abs(c_[i][j][k][l]));
                }
    const double tol = 1e-12 * scale;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k)
                for (int l = 0; l < 3; ++l) {
                    const double v = c_[i][j][k][l];
                    if (std::abs(v - c_[j][i][k][l]) > tol || std::abs(v - c_[i][j][l][k]) > tol ||
                        std::abs(v - c_[k][l][i][j]) > tol) {
                        throw InvalidModel("elastic tensor violates minor/major symmetry");
                    }
                }
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 6, 6>> eig(mandel());
    if (!(eig.eigenvalues().minCoeff() > 1e-12 * std::max(scale, 1e-300))) {
        throw InvalidModel("elastic tensor is not positive definite on symmetric matrices");
    }
}

void validate(const ElasticModel& model) {
    std::visit([](const auto& m) { m.validate(); }, model);
}

double q3_eval(const ElasticModel& model, const Mat3& f) {
    const Mat3 e = 0.5 * (f + f.transpose());
    if (const auto* iso = std::get_if<IsotropicModuli>(&model)) {
        const double tr = e.trace();
        return 2.0 * iso->mu * e.squaredNorm() + iso->lambda * tr * tr;
    }
    return std::get<ElasticTensor3>(model).bilinear(e, e);
}

Mat3 embed(const SymMat2& g) {
    Mat3 m = Mat3::Zero();
    m(0, 0) = g.a11;
    m(1, 1) = g.a22;
    m(0, 1) = m(1, 0) = g.a12;
    return m;
}

Vec3 optimal_stretch(const ElasticModel& model, const SymMat2& g) {
    const ElasticTensor3 c = as_tensor(model);
    const Mat3 ghat = embed(g);
    // Q3(G^ + sum_p a_p B_p) = C(G^,G^) + 2 a.b + a^T H a
    Mat3 h;
    Vec3 b;
    for (int p = 0; p < 3; ++p) {
        const Mat3 bp = stretch_direction(p);
        b(p) = c.bilinear(ghat, bp);
        for (int q = 0; q < 3; ++q) h(p, q) = c.bilinear(bp, stretch_direction(q));
    }
    const Eigen::SelfAdjointEigenSolver<Mat3> eig(h);
    const double lmax = eig.eigenvalues().cwiseAbs().maxCoeff();
    if (!(eig.eigenvalues().minCoeff() > 1e-12 * lmax) || !(lmax > 0.0)) {
        throw InvalidModel("transverse stretch system is singular; the elastic model is invalid");
    }
    return -(eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose()) * b;
}

double q2_from_q3(const ElasticModel& model, const SymMat2& g) {
    const Vec3 a = optimal_stretch(model, g);
    Mat3 f = embed(g);
    for (int p = 0; p < 3; ++p) f += a(p) * stretch_direction(p);
    return q3_eval(model, f);
}

double q2_isotropic_closed_form(const IsotropicModuli& m, const SymMat2& g) {
    const double tr = g.trace();
    return 2.0 * m.mu * g.dot(g) + 2.0 * m.mu * m.lambda / (2.0 * m.mu + m.lambda) * tr * tr;
}

PlaneForm::PlaneForm(const Mat3& a) : a_(0.5 * (a + a.transpose())) {}

PlaneForm plane_form(const ElasticModel& model) {
    std::array<SymMat2, 3> basis{SymMat2{1.0, 0.0, 0.0}, SymMat2{0.0, 1.0, 0.0}, SymMat2{0.0, 0.0, 1.0 / kSqrt2}};
    Vec3 diag;
    for (int i = 0; i < 3; ++i) diag(i) = q2_from_q3(model, basis[i]);
    Mat3 a;
    for (int i = 0; i < 3; ++i) {
        a(i, i) = diag(i);
        for (int j = i + 1; j < 3; ++j) {
            a(i, j) = a(j, i) = 0.5 * (q2_from_q3(model, basis[i] + basis[j]) - diag(i) - diag(j));
        }
    }
    const Eigen::SelfAdjointEigenSolver<Mat3> eig(a);
    if (!(eig.eigenvalues().minCoeff() > 1e-12 * eig.eigenvalues().cwiseAbs().maxCoeff())) {
        // isotropic case: needs 2 mu + 3 lambda > 0
        throw InvalidModel("plane form Q2 is not positive definite on symmetric matrices");
    }
    return PlaneForm(a);
}

}  // namespace wrinkle::elastic
