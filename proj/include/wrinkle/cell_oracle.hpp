#pragma once

#include <stdexcept>

#include "wrinkle/cell_solver.hpp"
#include "wrinkle/descent.hpp"

namespace wrinkle::cell {

struct OracleParams {
    /// Stop once |grad| <= gtol_factor (1 + |load|).
    double gtol_factor = 1e-8;
    int max_iter = 200000;
    descent::Method method = descent::Method::cg;
};

class OracleIterationCap : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Real-space discretization of the cell functional on an n x n periodic grid:
/// centered second-order differences for sym grad u1 and grad^2 v1, midpoint
/// quadrature, theta0 evaluated pointwise from its Fourier series.
class RealSpaceCell {
public:
    RealSpaceCell(const ShapeFunction& s, const PlaneForm& pf, int n);

    int n() const { return n_; }
    Eigen::Index size() const { return 3 * static_cast<Eigen::Index>(n_) * n_; }

    /// Discrete functional at grid values x = (u1_1, u1_2, v1); gradient if requested.
    double energy(const CellLoad& load, const Eigen::VectorXd& x, Eigen::VectorXd* grad) const;

    /// Subtract the mean of each field.
    void project_mean_zero(Eigen::VectorXd& x) const;

private:
    int n_;
    elastic::Mat3 a_;
    std::vector<double> theta0_;
};

/// Minimal value of the real-space discretization. Throws OracleIterationCap.
double cell_oracle(const CellLoad& load, const ShapeFunction& s, const PlaneForm& pf, int n,
                   const OracleParams& params = {});

/// Richardson extrapolation (4 E_2n - E_n) / 3 of the second-order oracle on n and 2n.
double cell_oracle_extrapolated(const CellLoad& load, const ShapeFunction& s, const PlaneForm& pf, int n,
                                const OracleParams& params = {});

}  // namespace wrinkle::cell
