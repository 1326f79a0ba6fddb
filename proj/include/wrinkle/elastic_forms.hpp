#pragma once

#include <array>
#include <stdexcept>
#include <variant>

#include <Eigen/Dense>

namespace wrinkle::elastic {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

class InvalidModel : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Symmetric 2x2 matrix [[a11, a12], [a12, a22]].
///
/// Whenever a Euclidean inner product has to reproduce the Frobenius product
/// the matrix is mapped to scaled coordinates (a11, a22, sqrt(2) a12).
struct SymMat2 {
    double a11 = 0.0;
    double a22 = 0.0;
    double a12 = 0.0;

    static SymMat2 from_scaled(const Vec3& z);
    Vec3 scaled() const;

    double trace() const { return a11 + a22; }
    /// Frobenius product a11 b11 + a22 b22 + 2 a12 b12.
    double dot(const SymMat2& other) const;
    double norm() const;

    SymMat2 operator+(const SymMat2& o) const { return {a11 + o.a11, a22 + o.a22, a12 + o.a12}; }
    SymMat2 operator-(const SymMat2& o) const { return {a11 - o.a11, a22 - o.a22, a12 - o.a12}; }
    SymMat2 operator*(double s) const { return {a11 * s, a22 * s, a12 * s}; }
    friend SymMat2 operator*(double s, const SymMat2& m) { return m * s; }
};

struct IsotropicModuli {
    double mu = 1.0;
    double lambda = 0.0;

    /// Throws InvalidModel unless mu > 0 and 2 mu + lambda > 0.
    void validate() const;
};

/// Rank-4 stiffness C[i][j][k][l] with minor and major symmetries.
class ElasticTensor3 {
public:
    using Storage = std::array<std::array<std::array<std::array<double, 3>, 3>, 3>, 3>;

    explicit ElasticTensor3(const Storage& c);

    static ElasticTensor3 from_isotropic(const IsotropicModuli& m);

    /// Builds the tensor from the 21 upper-triangular entries (row-major) of the
    /// 6x6 Voigt stiffness with index pairs ordered (11, 22, 33, 23, 13, 12).
    /// Voigt entries are the plain tensor components C_ijkl, no shear factors.
    static ElasticTensor3 from_voigt21(const std::array<double, 21>& upper);

    double operator()(int i, int j, int k, int l) const { return c_[i][j][k][l]; }

    /// Sum C_ijkl A_ij B_kl.
    double bilinear(const Mat3& a, const Mat3& b) const;

    /// Matrix of the form on symmetric 3x3 matrices in orthonormal (Mandel)
    /// coordinates; positive definite for a valid tensor.
    Eigen::Matrix<double, 6, 6> mandel() const;

    /// Throws InvalidModel if a symmetry is broken or the form is not
    /// positive definite on symmetric matrices.
    void validate() const;

private:
    Storage c_{};
};

using ElasticModel = std::variant<IsotropicModuli, ElasticTensor3>;

void validate(const ElasticModel& model);

/// Q3(F); depends only on sym F.
double q3_eval(const ElasticModel& model, const Mat3& f);

/// Upper-left embedding of a 2x2 symmetric matrix into 3x3.
Mat3 embed(const SymMat2& g);

/// argmin over a of Q3(G^ + a (x) e3 + e3 (x) a). Linear in G.
Vec3 optimal_stretch(const ElasticModel& model, const SymMat2& g);

/// Q2(G) = min_a Q3(G^ + a (x) e3 + e3 (x) a), via the exact 3x3 solve.
double q2_from_q3(const ElasticModel& model, const SymMat2& g);

/// Closed form 2 mu |G|^2 + 2 mu lambda / (2 mu + lambda) (tr G)^2.
double q2_isotropic_closed_form(const IsotropicModuli& m, const SymMat2& g);

/// Q2 in scaled coordinates: Q2(G) = z^T A z, z = G.scaled().
/// A is also the matrix of the operator realizing Q2 under the Frobenius product.
class PlaneForm {
public:
    explicit PlaneForm(const Mat3& a);

    const Mat3& matrix() const { return a_; }

    double q2(const SymMat2& g) const { return q2_scaled(g.scaled()); }
    double q2_scaled(const Vec3& z) const { return z.dot(a_ * z); }

    /// The operator A applied to G, returned as a symmetric matrix so that
    /// apply(G).dot(H) == z(H)^T A z(G).
    SymMat2 apply(const SymMat2& g) const { return SymMat2::from_scaled(a_ * g.scaled()); }

private:
    Mat3 a_;
};

/// Polarization of q2_from_q3 over (e11, e22, e12 / sqrt(2)).
/// Throws InvalidModel if the result is not positive definite (for isotropic
/// moduli this happens when 2 mu + 3 lambda <= 0).
PlaneForm plane_form(const ElasticModel& model);

}  // namespace wrinkle::elastic
