#pragma once

#include <array>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "wrinkle/elastic_forms.hpp"
#include "wrinkle/fourier.hpp"
#include "wrinkle/shape.hpp"

namespace wrinkle::cell {

using elastic::PlaneForm;
using elastic::SymMat2;
using shape::ShapeFunction;
using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix6 = Eigen::Matrix<double, 6, 6>;
using CoeffVector = Eigen::VectorXcd;

/// Macroscopic membrane strain G and curvature F.
struct CellLoad {
    SymMat2 G;
    SymMat2 F;

    /// Coordinates z = (G11, G22, sqrt2 G12, F11, F22, sqrt2 F12).
    Vector6 z() const;
    static CellLoad from_z(const Vector6& z);
    double norm_squared() const { return G.dot(G) + F.dot(F); }
};

/// Names of the six coordinate loads, in z order.
extern const std::array<std::string, 6> kBasisNames;

struct CellParams {
    int N = 8;             ///< corrector band limit
    double cg_tol = 1e-10; ///< relative residual target
    int max_iter = 2000;
    bool dealias = true;

    /// Throws std::invalid_argument on N < shape band, cg_tol outside (0,1) or max_iter < 1.
    void validate(int shape_band) const;
};

class NonConvergence : public std::runtime_error {
public:
    NonConvergence(const std::string& what, double residual, std::string load_tag = {})
        : std::runtime_error(what), residual_(residual), load_tag_(std::move(load_tag)) {}
    double residual() const { return residual_; }
    const std::string& load_tag() const { return load_tag_; }

private:
    double residual_;
    std::string load_tag_;
};

/// Mean-zero periodic correctors (u1, v1) held as Fourier coefficients of band N.
struct CorrectorSolution {
    fourier::ModeArray u1_1;
    fourier::ModeArray u1_2;
    fourier::ModeArray v1;
    double residual = 0.0; ///< final relative residual of the linear solve
    int iterations = 0;

    int band() const { return v1.band(); }
    /// |u1|^2 in the H1 seminorm plus |v1|^2 in the H2 seminorm.
    double seminorm_squared() const;
};

CorrectorSolution linear_combination(double a, const CorrectorSolution& x, double b, const CorrectorSolution& y);

/// Discretized cell problem for a fixed shape, plane form and resolution.
///
/// Unknowns are the Fourier coefficients of (u1_1, u1_2, v1) for 0 < |k|_inf <= N,
/// stacked into one complex vector; the inner product is Re(a^H b), which equals
/// the L2 product of the corresponding real fields. Products with theta0 are taken
/// pointwise on a padded M x M grid; with dealiasing on, M is large enough that the
/// grid quadrature integrates every term exactly, so the discrete problem is the
/// Galerkin restriction of the continuous one.
class CellProblem {
public:
    CellProblem(const ShapeFunction& s, const PlaneForm& pf, const CellParams& params);

    int band() const { return params_.N; }
    int grid_size() const { return grid_; }
    Eigen::Index size() const { return 3 * block_; }
    const CellParams& params() const { return params_; }

    /// B x: the symmetric positive semidefinite bilinear form
    /// int <A(sym grad u - grad^2 v theta0), sym grad phi - grad^2 w theta0> + 1/12 int <A grad^2 v, grad^2 w>.
    CoeffVector apply(const CoeffVector& x) const;

    /// Right-hand side -int <A(G + F theta0), sym grad phi - grad^2 w theta0>.
    CoeffVector rhs(const CellLoad& load) const;

    /// Exact inverse of the theta0 = 0 operator, mode by mode.
    CoeffVector precondition(const CoeffVector& r) const;

    static double dot(const CoeffVector& a, const CoeffVector& b) { return a.dot(b).real(); }

    /// Preconditioned conjugate gradients. Throws NonConvergence.
    CorrectorSolution solve(const CellLoad& load) const;

    /// I^H_{G,F}(u1, v1) by quadrature on the padded grid.
    double energy(const CellLoad& load, const CorrectorSolution& sol) const;

    /// Symmetric bilinear form whose diagonal is energy().
    double bilinear(const CellLoad& la, const CorrectorSolution& sa, const CellLoad& lb,
                    const CorrectorSolution& sb) const;

    CoeffVector pack(const CorrectorSolution& sol) const;
    CorrectorSolution unpack(const CoeffVector& x) const;

    /// Random real mean-zero band-limited vector with coefficients decaying like 1/(1+|k|^2).
    CoeffVector random_vector(std::mt19937_64& rng) const;

private:
    struct PointFields;
    PointFields fields(const CellLoad& load, const CoeffVector& x) const;
    CoeffVector adjoint(const std::array<std::vector<double>, 3>& stress,
                        const std::array<std::vector<double>, 3>& moment) const;

    CellParams params_;
    elastic::Mat3 a_;
    int grid_ = 0;
    Eigen::Index block_ = 0;
    std::vector<double> theta0_;
    std::vector<Eigen::Matrix2d> membrane_inverse_;
    std::vector<double> bending_inverse_;
};

/// Padded grid size: 3/2 rule on 2N+1, enlarged to 2(N + N_theta) + 1 when the shape
/// band requires it. Without dealiasing, 2N+1.
int padded_grid_size(int N, int shape_band, bool dealias);

CoeffVector cell_operator_apply(const CoeffVector& x, const ShapeFunction& s, const PlaneForm& pf,
                                const CellParams& params);

CorrectorSolution solve_cell(const CellLoad& load, const ShapeFunction& s, const PlaneForm& pf,
                             const CellParams& params);

double effective_value(const CellLoad& load, const CorrectorSolution& sol, const ShapeFunction& s,
                       const PlaneForm& pf, bool dealias = true);

/// Q2(G) + int Q2(F theta0): the cell functional at zero correctors.
double zero_corrector_bound(const CellLoad& load, const ShapeFunction& s, const PlaneForm& pf);

/// The effective form Q2H(G, F) = z^T M z.
struct EffectiveForm {
    Matrix6 M = Matrix6::Zero();
    shape::KernelBasis kernel;
    double coercivity_mu = 0.0;
    /// max |M_polarization - M_bilinear| / |M|, filled by assembly.
    double polarization_mismatch = 0.0;
    /// sup over loads of (|u1|^2 + |v1|^2) / (|G|^2 + |F|^2).
    double bound_constant = 0.0;
    std::array<int, 6> iterations{};

    double value(const Vector6& z) const { return z.dot(M * z); }
    double value(const CellLoad& load) const { return value(load.z()); }
    double norm() const;
    Vector6 eigenvalues() const;
    /// Number of eigenvalues below rel_threshold * |M|.
    int numerical_kernel_dim(double rel_threshold = 1e-8) const;
    /// Orthonormal z-vectors (0, F) with F in V.
    Eigen::MatrixXd kernel_directions() const;
    /// Smallest eigenvalue of M on the orthogonal complement of {0} x V.
    double restricted_min_eigenvalue() const;

    static constexpr const char* kConvention =
        "z = (G11, G22, sqrt(2)*G12, F11, F22, sqrt(2)*F12); Q2H(G,F) = z^T M z";
};

/// Correctors of the six coordinate loads, in kBasisNames order.
/// Throws NonConvergence tagged with the basis load name.
std::array<CorrectorSolution, 6> solve_basis(const CellProblem& problem);

/// Six basis solves, polarization, kernel of V and coercivity constant.
/// Throws NonConvergence tagged with the basis load name.
EffectiveForm assemble_effective_matrix(const ShapeFunction& s, const PlaneForm& pf, const CellParams& params);

/// Effective form built from the basis correctors without re-solving.
EffectiveForm assemble_from_correctors(const CellProblem& problem, const std::array<CorrectorSolution, 6>& sols,
                                       const ShapeFunction& s);

}  // namespace wrinkle::cell
