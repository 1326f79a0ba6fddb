#include "wrinkle/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

namespace wrinkle::fourier {

namespace {

struct PlanPair {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
};

class PlanCache {
public:
    ~PlanCache() {
        for (auto& [n, p] : plans_) {
            fftw_destroy_plan(p.forward);
            fftw_destroy_plan(p.backward);
        }
    }

    PlanPair get(int n) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = plans_.find(n);
        if (it != plans_.end()) return it->second;
        std::vector<cplx> scratch(static_cast<std::size_t>(n) * n);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        PlanPair p{fftw_plan_dft_2d(n, n, buf, buf, FFTW_FORWARD, flags),
                   fftw_plan_dft_2d(n, n, buf, buf, FFTW_BACKWARD, flags)};
        if (p.forward == nullptr || p.backward == nullptr) throw std::runtime_error("FFTW plan creation failed");
        plans_.emplace(n, p);
        return p;
    }

private:
    std::mutex mutex_;
    std::map<int, PlanPair> plans_;
};

PlanCache& cache() {
    static PlanCache instance;
    return instance;
}

void require_resolvable(int band, int n) {
    if (n < 2 * band + 1) {
        throw std::invalid_argument("grid size " + std::to_string(n) + " aliases band limit " + std::to_string(band));
    }
}

}  // namespace

double Grid::max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

void transform(std::vector<cplx>& data, int n, int sign) {
    if (data.size() != static_cast<std::size_t>(n) * n) throw std::invalid_argument("transform: size mismatch");
    const PlanPair p = cache().get(n);
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(sign > 0 ? p.backward : p.forward, buf, buf);
}

std::vector<cplx> synthesize_complex(const ModeArray& modes, int n) {
    require_resolvable(modes.band(), n);
    std::vector<cplx> data(static_cast<std::size_t>(n) * n);
    const int b = modes.band();
    for (int k2 = -b; k2 <= b; ++k2)
        for (int k1 = -b; k1 <= b; ++k1)
            data[static_cast<std::size_t>(wrap(k2, n)) * n + wrap(k1, n)] = modes(k1, k2);
    transform(data, n, +1);
    return data;
}

Grid synthesize(const ModeArray& modes, int n) {
    const auto data = synthesize_complex(modes, n);
    Grid g(n);
    for (std::size_t i = 0; i < data.size(); ++i) g.values[i] = data[i].real();
    return g;
}

ModeArray analyze(const Grid& grid, int band) {
    const int n = grid.n;
    require_resolvable(band, n);
    std::vector<cplx> data(grid.values.begin(), grid.values.end());
    transform(data, n, -1);
    const double scale = 1.0 / (static_cast<double>(n) * n);
    ModeArray out(band);
    for (int k2 = -band; k2 <= band; ++k2)
        for (int k1 = -band; k1 <= band; ++k1)
            out(k1, k2) = scale * data[static_cast<std::size_t>(wrap(k2, n)) * n + wrap(k1, n)];
    return out;
}

}  // namespace wrinkle::fourier
