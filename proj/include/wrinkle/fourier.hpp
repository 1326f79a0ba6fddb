#pragma once

#include <complex>
#include <vector>

namespace wrinkle::fourier {

using cplx = std::complex<double>;

/// Fourier coefficients c_k of a field on the unit torus for |k|_inf <= band,
/// f(y) = sum_k c_k exp(2 pi i k.y).
class ModeArray {
public:
    ModeArray() = default;
    explicit ModeArray(int band) : band_(band), width_(2 * band + 1), c_(width_ * width_) {}

    int band() const { return band_; }
    int width() const { return width_; }
    std::size_t size() const { return c_.size(); }

    cplx& operator()(int k1, int k2) { return c_[index(k1, k2)]; }
    const cplx& operator()(int k1, int k2) const { return c_[index(k1, k2)]; }

    std::vector<cplx>& data() { return c_; }
    const std::vector<cplx>& data() const { return c_; }

    std::size_t index(int k1, int k2) const {
        return static_cast<std::size_t>(k2 + band_) * width_ + static_cast<std::size_t>(k1 + band_);
    }

private:
    int band_ = 0;
    int width_ = 1;
    std::vector<cplx> c_ = std::vector<cplx>(1);
};

/// Real samples on the n x n grid y_j = (j1/n, j2/n), stored x2-outer, x1-inner.
struct Grid {
    int n = 0;
    std::vector<double> values;

    explicit Grid(int n_ = 0) : n(n_), values(static_cast<std::size_t>(n_) * n_, 0.0) {}

    double& operator()(int j1, int j2) { return values[static_cast<std::size_t>(j2) * n + j1]; }
    double operator()(int j1, int j2) const { return values[static_cast<std::size_t>(j2) * n + j1]; }
    double max_abs() const;
};

/// Values of the trigonometric polynomial at the n x n grid. Requires n >= 2 band + 1.
Grid synthesize(const ModeArray& modes, int n);

/// Same, keeping the imaginary part (nonzero only for non-Hermitian input).
std::vector<cplx> synthesize_complex(const ModeArray& modes, int n);

/// Discrete Fourier coefficients (1/n^2) sum_j f_j exp(-2 pi i k.y_j) for |k| <= band.
/// Requires n >= 2 band + 1.
ModeArray analyze(const Grid& grid, int band);

/// In-place unnormalized 2D transforms of an n x n complex array (x2-outer layout).
/// sign = +1 synthesizes values from coefficients, sign = -1 is the forward DFT.
/// Thread-safe; plans are cached per size.
void transform(std::vector<cplx>& data, int n, int sign);

/// Map a wavenumber onto its wrapped position 0..n-1.
inline int wrap(int k, int n) { return ((k % n) + n) % n; }

}  // namespace wrinkle::fourier
