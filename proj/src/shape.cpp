#include "wrinkle/shape.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace wrinkle::shape {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;

cplx multiplier(int k1, int k2, Derivative d) {
    const cplx i1(0.0, kTwoPi * k1);
    const cplx i2(0.0, kTwoPi * k2);
    switch (d) {
        case Derivative::none: return 1.0;
        case Derivative::d1: return i1;
        case Derivative::d2: return i2;
        case Derivative::d11: return i1 * i1;
        case Derivative::d22: return i2 * i2;
        case Derivative::d12: return i1 * i2;
    }
    return 1.0;
}

}  // namespace

ShapeFunction ShapeFunction::from_records(std::span<const ModeRecord> records, std::optional<int> band) {
    ShapeFunction s;
    double cmax = 0.0;
    for (const auto& r : records) {
        if (!std::isfinite(r.re) || !std::isfinite(r.im)) throw InvalidShape("non-finite shape coefficient");
        const Wavevector k{r.k1, r.k2};
        if (s.coeffs_.count(k) != 0) {
            throw InvalidShape("duplicate shape coefficient for k = (" + std::to_string(r.k1) + ", " +
                               std::to_string(r.k2) + ")");
        }
        s.coeffs_[k] = cplx(r.re, r.im);
        cmax = std::max(cmax, std::abs(cplx(r.re, r.im)));
    }
    const double tol = 1e-12 * cmax;
    for (const auto& [k, c] : s.coeffs_) {
        const auto partner = s.coeffs_.find({-k.first, -k.second});
        const cplx cp = partner == s.coeffs_.end() ? cplx(0.0) : partner->second;
        if (std::abs(std::conj(c) - cp) > tol) {
            if (k.first == 0 && k.second == 0) throw InvalidShape("mean coefficient c_0 must be real");
            throw InvalidShape("shape coefficients are not Hermitian at k = (" + std::to_string(k.first) + ", " +
                               std::to_string(k.second) + ")");
        }
    }
    // Drop exact zeros; enforce exact symmetry on the survivors.
    std::map<Wavevector, cplx> clean;
    int largest = 0;
    for (const auto& [k, c] : s.coeffs_) {
        if (c == cplx(0.0)) continue;
        const Wavevector mk{-k.first, -k.second};
        if (s.coeffs_.count(mk) == 0) continue;  // below tolerance without a partner
        clean[k] = (k == mk) ? cplx(c.real(), 0.0) : 0.5 * (c + std::conj(s.coeffs_.at(mk)));
        largest = std::max({largest, std::abs(k.first), std::abs(k.second)});
    }
    s.coeffs_ = std::move(clean);
    if (band && *band < largest) {
        throw InvalidShape("band limit " + std::to_string(*band) + " is below the largest wavenumber " +
                           std::to_string(largest));
    }
    s.band_ = band.value_or(largest);
    return s;
}

cplx ShapeFunction::coefficient(int k1, int k2) const {
    const auto it = coeffs_.find({k1, k2});
    return it == coeffs_.end() ? cplx(0.0) : it->second;
}

double ShapeFunction::max_coefficient() const {
    double m = 0.0;
    for (const auto& [k, c] : coeffs_) m = std::max(m, std::abs(c));
    return m;
}

bool ShapeFunction::is_flat() const {
    return std::all_of(coeffs_.begin(), coeffs_.end(),
                       [](const auto& kv) { return kv.first == Wavevector{0, 0}; });
}

fourier::ModeArray ShapeFunction::modes(int band, Derivative d) const {
    if (band < band_) throw std::invalid_argument("mode array band below shape band limit");
    fourier::ModeArray out(band);
    for (const auto& [k, c] : coeffs_) out(k.first, k.second) = multiplier(k.first, k.second, d) * c;
    return out;
}

std::vector<ModeRecord> ShapeFunction::records() const {
    std::vector<ModeRecord> out;
    for (const auto& [k, c] : coeffs_) out.push_back({k.first, k.second, c.real(), c.imag()});
    return out;
}

ShapeFunction make_shape(std::string_view catalog, double amplitude) {
    std::vector<ModeRecord> r;
    if (catalog == "flat") {
        // theta = 0
    } else if (catalog == "uniwave") {
        // sin(2 pi y1) = (e^{i a} - e^{-i a}) / 2i
        r = {{1, 0, 0.0, -0.5 * amplitude}, {-1, 0, 0.0, 0.5 * amplitude}};
    } else if (catalog == "eggbox") {
        // sin a sin b = -(1/4)(e^{i(a+b)} - e^{i(a-b)} - e^{i(b-a)} + e^{-i(a+b)})
        const double q = 0.25 * amplitude;
        r = {{1, 1, -q, 0.0}, {-1, -1, -q, 0.0}, {1, -1, q, 0.0}, {-1, 1, q, 0.0}};
    } else {
        throw InvalidShape("unknown shape catalog name '" + std::string(catalog) + "'");
    }
    return ShapeFunction::from_records(r);
}

ShapeFunction theta_zero(const ShapeFunction& s) {
    ShapeFunction out = s;
    out.coeffs_.erase({0, 0});
    return out;
}

fourier::Grid sample(const ShapeFunction& s, Derivative d, int n) {
    if (n < 2 * s.band() + 1) {
        throw std::invalid_argument("sample: grid size " + std::to_string(n) + " below aliasing bound " +
                                    std::to_string(2 * s.band() + 1));
    }
    return fourier::synthesize(s.modes(s.band(), d), n);
}

KernelBasis compute_kernel_V(const ShapeFunction& s, double rel_tol) {
    const double threshold = rel_tol * s.max_coefficient();
    // Constraint rows in scaled coordinates z = (a11, a22, sqrt2 a12).
    std::vector<Eigen::RowVector3d> rows;
    for (const auto& [k, c] : s.coefficients()) {
        if (k == Wavevector{0, 0} || !(std::abs(c) > threshold)) continue;
        const double k1 = k.first;
        const double k2 = k.second;
        Eigen::RowVector3d row(k2 * k2, k1 * k1, -kSqrt2 * k1 * k2);
        rows.push_back(row / row.norm());
    }
    KernelBasis basis;
    if (rows.empty()) {
        basis.vectors = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0 / kSqrt2}};
        return basis;
    }
    Eigen::MatrixXd a(rows.size(), 3);
    for (std::size_t i = 0; i < rows.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = rows[i];
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > 1e-10 * smax) ++rank;
    for (int j = rank; j < 3; ++j) {
        Eigen::Vector3d z = svd.matrixV().col(j);
        // Fix the sign so the output is deterministic.
        Eigen::Index piv = 0;
        z.cwiseAbs().maxCoeff(&piv);
        if (z(piv) < 0.0) z = -z;
        basis.vectors.push_back(elastic::SymMat2::from_scaled(z));
    }
    return basis;
}

double kernel_residual(const ShapeFunction& s, const elastic::SymMat2& a, int n) {
    const auto t11 = sample(s, Derivative::d11, n);
    const auto t22 = sample(s, Derivative::d22, n);
    const auto t12 = sample(s, Derivative::d12, n);
    double r = 0.0;
    for (std::size_t i = 0; i < t11.values.size(); ++i) {
        r = std::max(r, std::abs(a.a11 * t22.values[i] + a.a22 * t11.values[i] - 2.0 * a.a12 * t12.values[i]));
    }
    return r;
}

double max_second_derivative(const ShapeFunction& s, int n) {
    return std::max({sample(s, Derivative::d11, n).max_abs(), sample(s, Derivative::d22, n).max_abs(),
                     sample(s, Derivative::d12, n).max_abs()});
}

}  // namespace wrinkle::shape
