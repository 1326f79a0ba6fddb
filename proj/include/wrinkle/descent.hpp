#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace wrinkle::descent {

using Vector = Eigen::VectorXd;

/// Returns f(x); writes the gradient when grad != nullptr.
using Objective = std::function<double(const Vector& x, Vector* grad)>;

/// In-place orthogonal projection onto the feasible linear subspace.
using Projector = std::function<void(Vector&)>;

/// Symmetric positive definite approximation of the inverse Hessian, applied to a gradient.
using Preconditioner = std::function<Vector(const Vector&)>;

enum class Method {
    steepest,  ///< gradient direction, Barzilai-Borwein trial step
    cg,        ///< Polak-Ribiere+ conjugate directions
    lbfgs,     ///< limited-memory BFGS
};

enum class Status { converged, max_iterations, stalled };

struct Options {
    Method method = Method::lbfgs;
    /// Stop once |P grad| <= gtol, or gtol (1 + |f|) when scale_by_energy.
    double gtol = 1e-8;
    bool scale_by_energy = false;
    int max_iter = 10000;
    int history = 10;
    double armijo = 1e-4;
    int max_backtracks = 60;
    /// When > 0, a step whose energy change lies within eps |f| is judged by the
    /// trapezoidal estimate step (g0.d + g1.d) / 2 instead (Hager-Zhang). Energies
    /// may then rise by at most eps |f| per step.
    double approx_decrease_eps = 0.0;
    /// Optional; replaces the identity as the metric of every method.
    Preconditioner precondition;
    bool record_energies = false;
};

struct Result {
    Vector x;
    double f = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    int evaluations = 0;
    Status status = Status::max_iterations;
    /// f at every accepted iterate, starting with x0 (only when record_energies).
    std::vector<double> energies;
};

/// Monotone descent with a backtracking (Armijo) line search. Every accepted
/// step satisfies f(x + a d) <= f(x) + c a g.d < f(x) unless approx_decrease_eps
/// is set. Iterates stay in the
/// subspace selected by the projector when x0 does.
Result minimize(const Objective& objective, Vector x0, const Options& options, const Projector& project = {});

std::string to_string(Status s);

}  // namespace wrinkle::descent
