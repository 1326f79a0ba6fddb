#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "wrinkle/cell_solver.hpp"
#include "wrinkle/descent.hpp"

namespace wrinkle::plate {

using Vector = Eigen::VectorXd;
using cell::EffectiveForm;
using elastic::PlaneForm;

/// Rectangle [0, Lx] x [0, Ly] with m1 x m2 nodes including the edges.
/// Grid values are stored x2-outer, x1-inner: index = j * m1 + i.
struct PlateDomain {
    double Lx = 1.0;
    double Ly = 1.0;
    int m1 = 33;
    int m2 = 33;

    void validate() const;
    double h1() const { return Lx / (m1 - 1); }
    double h2() const { return Ly / (m2 - 1); }
    Eigen::Index points() const { return static_cast<Eigen::Index>(m1) * m2; }
    Eigen::Index index(int i, int j) const { return static_cast<Eigen::Index>(j) * m1 + i; }
    double x1(int i) const { return i * h1(); }
    double x2(int j) const { return j * h2(); }
    /// Trapezoidal quadrature weights.
    Vector weights() const;
};

struct PlateState {
    Vector u1;
    Vector u2;
    Vector v;

    static PlateState zero(const PlateDomain& dom);
    Vector pack() const;
    static PlateState unpack(const Vector& x);
    double max_abs() const;
};

enum class SignMode { plus, minus, automatic };

class InvalidLoad : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct LoadSpec {
    Vector f3;
    SignMode sign = SignMode::automatic;

    /// "dipole": A sin(2 pi x1/Lx) cos(pi x2/Ly); "checker": A sin(2 pi x1/Lx) sin(2 pi x2/Ly).
    static LoadSpec catalog(std::string_view name, double amplitude, const PlateDomain& dom);
    static LoadSpec zero(const PlateDomain& dom);

    /// Discrete resultant and first moments must vanish relative to max|f3| * area (* L).
    void validate(const PlateDomain& dom) const;
    /// (int f3, int x1 f3, int x2 f3) by trapezoidal quadrature.
    Eigen::Vector3d moments(const PlateDomain& dom) const;
};

struct EnergyBreakdown {
    double membrane_coupled = 0.0;  ///< 1/2 int Q2H
    double bending = 0.0;           ///< 1/24 int Q2(grad^2 v)
    double load_work = 0.0;         ///< s int f3 v
    double total = 0.0;             ///< membrane_coupled + bending - load_work
};

/// Finite-difference derivatives on the plate grid as sparse matrices: centered
/// second-order stencils inside, one-sided second-order stencils on the edges.
struct PlateOperators {
    Eigen::SparseMatrix<double> d1, d2, d11, d22, d12;
    Vector w;

    explicit PlateOperators(const PlateDomain& dom);
};

/// Discrete homogenized energy J(u, v; s) with gauge projection.
class PlateEnergy {
public:
    PlateEnergy(const PlateDomain& dom, const cell::Matrix6& M, const PlaneForm& pf, const LoadSpec& load);

    const PlateDomain& domain() const { return dom_; }
    Eigen::Index size() const { return 3 * dom_.points(); }

    EnergyBreakdown breakdown(const PlateState& state, double s) const;
    /// Total energy at packed x; unprojected gradient when grad != nullptr.
    double value(const Vector& x, double s, Vector* grad) const;

    /// Orthogonal projection onto the gauge-fixed subspace.
    void project(Vector& x) const;
    /// The six gauge integrals: int u1, int u2, int (d2 u1 - d1 u2), int v, int d1 v, int d2 v.
    Eigen::Matrix<double, 6, 1> gauge(const Vector& x) const;

    /// argmin over gauge-fixed d of 1/2 d'Hd - g'd, H the Hessian at the flat state.
    /// Factored once on first use.
    Vector precondition(const Vector& g) const;

private:
    PlateDomain dom_;
    cell::Matrix6 M_;
    elastic::Mat3 a_;
    Vector f3_;
    PlateOperators ops_;
    Eigen::Matrix<double, 6, Eigen::Dynamic> constraints_;
    Eigen::LDLT<Eigen::Matrix<double, 6, 6>> gram_;
    struct Factor;
    mutable std::shared_ptr<const Factor> factor_;
};

EnergyBreakdown plate_energy(const PlateState& state, const EffectiveForm& eff, const PlaneForm& pf,
                             const PlateDomain& dom, const LoadSpec& load, double s);

/// Gauge-projected gradient of plate_energy with respect to every grid value.
PlateState plate_gradient(const PlateState& state, const EffectiveForm& eff, const PlaneForm& pf,
                          const PlateDomain& dom, const LoadSpec& load, double s);

struct MinimizerParams {
    /// Stop once |P grad| <= tol (1 + |total|).
    double tol = 1e-8;
    int max_iter = 20000;
    int n_starts = 3;
    std::uint64_t seed = 0;
    /// Size of the smooth random initial deflections, relative to min(Lx, Ly).
    double perturbation = 1e-2;
    descent::Method method = descent::Method::lbfgs;
};

struct StartSummary {
    int start = 0;
    int sign = 1;
    double total = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    descent::Status status = descent::Status::converged;
    double max_field = 0.0;  ///< max |u1|, |u2|, |v| at the end
};

struct PlateResult {
    PlateState state;
    EnergyBreakdown energy;
    int s_chosen = 1;
    int iterations = 0;
    double grad_norm = 0.0;
    std::vector<StartSummary> starts;
    /// Energies of the accepted iterates of the winning run.
    std::vector<double> energies;
};

/// Line search stalled (or the iteration cap was hit) before the tolerance.
class NoDecrease : public std::runtime_error {
public:
    NoDecrease(const std::string& what, PlateResult best) : std::runtime_error(what), best_(std::move(best)) {}
    const PlateResult& best() const { return best_; }

private:
    PlateResult best_;
};

/// Initial state of start k (k = 0 is the zero state), gauge-projected.
PlateState initial_state(const PlateEnergy& energy, const MinimizerParams& params, int start);

/// Multi-start descent for each admissible sign; returns the lowest total.
/// Exact ties between the two signs go to the sign of the first grid entry of f3
/// above 1e-12 max|f3|, so that negating f3 negates the choice.
PlateResult minimize_plate(const PlateDomain& dom, const EffectiveForm& eff, const PlaneForm& pf,
                           const LoadSpec& load, const MinimizerParams& params = {});

/// Classical Foppl-von Karman plate, 1/2 int Q2(sym grad u + 1/2 grad v (x) grad v) + 1/24 int Q2(grad^2 v)
/// - s int f3 v, evaluated point by point with its own stencils (no sparse operators).
namespace classical {

double energy(const PlateState& state, const PlaneForm& pf, const PlateDomain& dom, const Vector& f3, double s,
              PlateState* grad = nullptr);

/// Descent on the classical energy with the same gauge conditions. Returns the final energy.
struct Result {
    PlateState state;
    double total = 0.0;
    double grad_norm = 0.0;
    descent::Status status = descent::Status::converged;
};
Result minimize(const PlateDomain& dom, const PlaneForm& pf, const Vector& f3, double s, double tol,
                int max_iter, const PlateState& start);

}  // namespace classical

}  // namespace wrinkle::plate
