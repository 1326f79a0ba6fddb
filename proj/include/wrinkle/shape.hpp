#pragma once

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "wrinkle/elastic_forms.hpp"
#include "wrinkle/fourier.hpp"

namespace wrinkle::shape {

using fourier::cplx;
using Wavevector = std::pair<int, int>;

class InvalidShape : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// One entry of the raw coefficient list {k1, k2, re, im}.
struct ModeRecord {
    int k1 = 0;
    int k2 = 0;
    double re = 0.0;
    double im = 0.0;
};

enum class Derivative { none, d1, d2, d11, d22, d12 };

/// Real Y-periodic trigonometric polynomial theta(y) = sum_k c_k exp(2 pi i k.y).
class ShapeFunction {
public:
    ShapeFunction() = default;

    /// Validates Hermitian symmetry c_{-k} = conj(c_k). Zero coefficients are dropped.
    static ShapeFunction from_records(std::span<const ModeRecord> records, std::optional<int> band = std::nullopt);

    int band() const { return band_; }
    const std::map<Wavevector, cplx>& coefficients() const { return coeffs_; }
    cplx coefficient(int k1, int k2) const;
    double mean() const { return coefficient(0, 0).real(); }
    double max_coefficient() const;
    bool is_flat() const;

    /// Coefficients (optionally differentiated) packed into an array of the given band.
    fourier::ModeArray modes(int band, Derivative d = Derivative::none) const;

    std::vector<ModeRecord> records() const;

private:
    friend ShapeFunction theta_zero(const ShapeFunction& s);
    std::map<Wavevector, cplx> coeffs_;
    int band_ = 0;
};

/// Catalog: "flat", "uniwave" (A sin 2 pi y1), "eggbox" (A sin 2 pi y1 sin 2 pi y2).
ShapeFunction make_shape(std::string_view catalog, double amplitude = 1.0);

/// theta - <theta>.
ShapeFunction theta_zero(const ShapeFunction& s);

/// Exact values of theta or one of its derivatives on the n x n grid. n >= 2 band + 1.
fourier::Grid sample(const ShapeFunction& s, Derivative d, int n);

/// Orthonormal (Frobenius) basis of the subspace of symmetric A with
/// a11 d22 theta + a22 d11 theta - 2 a12 d12 theta = 0 everywhere.
struct KernelBasis {
    std::vector<elastic::SymMat2> vectors;
    int dim() const { return static_cast<int>(vectors.size()); }
};

/// A mode k != 0 constrains V iff |c_k| > rel_tol * max|c|.
KernelBasis compute_kernel_V(const ShapeFunction& s, double rel_tol = 1e-12);

/// max over the n x n grid of |a11 d22 theta + a22 d11 theta - 2 a12 d12 theta|.
double kernel_residual(const ShapeFunction& s, const elastic::SymMat2& a, int n);

/// max over the n x n grid of the largest second derivative magnitude.
double max_second_derivative(const ShapeFunction& s, int n);

}  // namespace wrinkle::shape
