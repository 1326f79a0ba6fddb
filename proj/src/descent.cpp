#include "wrinkle/descent.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace wrinkle::descent {

namespace {

struct Pair {
    Vector s;
    Vector y;
    double rho;
};

Vector lbfgs_direction(const Vector& g, const std::deque<Pair>& memory, const Options& options,
                       const Projector& project) {
    Vector q = -g;
    std::vector<double> alpha(memory.size());
    for (std::size_t i = memory.size(); i-- > 0;) {
        alpha[i] = memory[i].rho * memory[i].s.dot(q);
        q -= alpha[i] * memory[i].y;
    }
    if (options.precondition) {
        q = options.precondition(q);
        if (project) project(q);
    } else if (!memory.empty()) {
        const auto& last = memory.back();
        q *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (std::size_t i = 0; i < memory.size(); ++i) {
        const double beta = memory[i].rho * memory[i].y.dot(q);
        q += (alpha[i] - beta) * memory[i].s;
    }
    return q;
}

struct Trial {
    double step = 0.0;
    double f = std::numeric_limits<double>::infinity();
    Vector x;
    Vector g;
};

}  // namespace

std::string to_string(Status s) {
    switch (s) {
        case Status::converged: return "converged";
        case Status::max_iterations: return "max_iterations";
        case Status::stalled: return "stalled";
    }
    return "unknown";
}

Result minimize(const Objective& objective, Vector x0, const Options& options, const Projector& project) {
    Result res;
    if (project) project(x0);
    Vector x = std::move(x0);
    Vector g;
    double f = objective(x, &g);
    ++res.evaluations;
    if (project) project(g);
    if (options.record_energies) res.energies.push_back(f);

    auto evaluate = [&](double step, const Vector& d) {
        Trial t;
        t.step = step;
        t.x = x + step * d;
        t.f = objective(t.x, &t.g);
        ++res.evaluations;
        if (!std::isfinite(t.f)) t.f = std::numeric_limits<double>::infinity();
        return t;
    };

    auto metric = [&](const Vector& v) -> Vector {
        if (!options.precondition) return v;
        Vector z = options.precondition(v);
        if (project) project(z);
        return z;
    };

    std::deque<Pair> memory;
    Vector d_prev;
    Vector g_prev;
    Vector z_prev;
    double step_prev = 0.0;
    double gd_prev = 0.0;
    Vector s_last, y_last;

    res.status = Status::max_iterations;
    for (int it = 0;; ++it) {
        const double gnorm = g.norm();
        const double threshold = options.scale_by_energy ? options.gtol * (1.0 + std::abs(f)) : options.gtol;
        res.grad_norm = gnorm;
        if (gnorm <= threshold) {
            res.status = Status::converged;
            break;
        }
        if (it >= options.max_iter) break;

        Vector d;
        double step0 = 1.0;
        Vector z;
        switch (options.method) {
            case Method::steepest:
                d = -metric(g);
                if (s_last.size() > 0 && s_last.dot(y_last) > 0.0 && !options.precondition) {
                    step0 = s_last.squaredNorm() / s_last.dot(y_last);
                } else {
                    step0 = options.precondition ? 1.0 : std::min(1.0, 1.0 / gnorm);
                }
                break;
            case Method::cg:
                z = metric(g);
                d = -z;
                if (d_prev.size() > 0) {
                    const double beta = std::max(0.0, z.dot(g - g_prev) / z_prev.dot(g_prev));
                    d += beta * d_prev;
                    if (g.dot(d) >= 0.0) d = -z;
                    step0 = step_prev * gd_prev / g.dot(d);
                } else {
                    step0 = options.precondition ? 1.0 : std::min(1.0, 1.0 / gnorm);
                }
                break;
            case Method::lbfgs:
                d = lbfgs_direction(g, memory, options, project);
                if (g.dot(d) >= 0.0) {
                    memory.clear();
                    d = -metric(g);
                }
                step0 = memory.empty() && !options.precondition ? std::min(1.0, 1.0 / gnorm) : 1.0;
                break;
        }
        if (!(step0 > 0.0) || !std::isfinite(step0)) step0 = std::min(1.0, 1.0 / gnorm);

        auto line_search = [&](const Vector& dir, double first) -> Trial {
            const double gd = g.dot(dir);
            auto sufficient = [&](const Trial& t, double gd1) {
                if (t.f <= f + options.armijo * t.step * gd) return true;
                // Hager-Zhang: inside the round-off band of f, use the exact decrease of a quadratic model.
                return options.approx_decrease_eps > 0.0 && std::isfinite(t.f) &&
                       t.f - f <= options.approx_decrease_eps * std::abs(f) &&
                       0.5 * t.step * (gd + gd1) <= options.armijo * t.step * gd;
            };
            Trial t = evaluate(first, dir);
            for (int b = 0; b < options.max_backtracks; ++b) {
                const double gd1 = std::isfinite(t.f) ? t.g.dot(dir) : 0.0;
                if (sufficient(t, gd1)) {
                    // Secant root of the directional derivative; immune to cancellation in f.
                    const double secant = gd1 != gd ? t.step * gd / (gd - gd1) : 0.0;
                    if (options.method == Method::cg && secant > 0.0 && std::isfinite(secant) &&
                        std::abs(secant - t.step) > 1e-2 * t.step) {
                        Trial alt = evaluate(secant, dir);
                        const double gd2 = alt.g.dot(dir);
                        const bool better = alt.f < t.f || (alt.f <= t.f + options.approx_decrease_eps * std::abs(f) &&
                                                            std::abs(gd2) < std::abs(gd1));
                        if (better && sufficient(alt, gd2)) return alt;
                    }
                    return t;
                }
                // Quadratic model through f, f'(0) and f(step).
                const double curv = t.f - f - gd * t.step;
                const double model_step = curv > 0.0 ? -gd * t.step * t.step / (2.0 * curv) : 0.0;
                double next = std::isfinite(t.f) && model_step > 0.0 ? model_step : 0.5 * t.step;
                next = std::clamp(next, 0.1 * t.step, 0.5 * t.step);
                t = evaluate(next, dir);
            }
            t.f = std::numeric_limits<double>::infinity();
            return t;
        };

        Trial t = line_search(d, step0);
        if (!std::isfinite(t.f) && options.method != Method::steepest) {
            // Restart along the gradient.
            memory.clear();
            d_prev.resize(0);
            d = -g;
            z.resize(0);
            t = line_search(d, std::min(1.0, 1.0 / gnorm));
        }
        if (!std::isfinite(t.f)) {
            res.status = Status::stalled;
            break;
        }

        if (project) project(t.g);
        s_last = t.x - x;
        y_last = t.g - g;
        if (options.method == Method::lbfgs) {
            const double sy = s_last.dot(y_last);
            if (sy > 1e-12 * s_last.norm() * y_last.norm()) {
                memory.push_back({s_last, y_last, 1.0 / sy});
                if (static_cast<int>(memory.size()) > options.history) memory.pop_front();
            }
        }
        gd_prev = g.dot(d);
        step_prev = t.step;
        d_prev = d;
        g_prev = g;
        z_prev = z.size() > 0 ? z : g;
        x = std::move(t.x);
        g = std::move(t.g);
        f = t.f;
        res.iterations = it + 1;
        if (options.record_energies) res.energies.push_back(f);
    }
    res.x = std::move(x);
    res.f = f;
    return res;
}

}  // namespace wrinkle::descent
