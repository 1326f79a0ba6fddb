#include "wrinkle/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "wrinkle/cell_oracle.hpp"
#include "wrinkle/fourier.hpp"

namespace wrinkle::cli {

using nlohmann::json;
using Vector = Eigen::VectorXd;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

void require_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items())
        if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

double get_number(const json& obj, const char* key, double fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(where + "." + key + ": not finite");
    return x;
}

int get_int(const json& obj, const char* key, int fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) throw ConfigError(where + "." + key + ": expected an integer");
    return v.get<int>();
}

bool get_bool(const json& obj, const char* key, bool fallback, const std::string& where) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_boolean()) throw ConfigError(where + "." + key + ": expected true or false");
    return v.get<bool>();
}

std::string get_string(const json& obj, const char* key, const std::string& where) {
    const auto& v = obj.at(key);
    if (!v.is_string()) throw ConfigError(where + "." + key + ": expected a string");
    return v.get<std::string>();
}

ShapeConfig parse_shape(const json& j) {
    require_keys(j, "shape", {"catalog", "params", "custom"});
    ShapeConfig sc;
    if (j.contains("catalog") == j.contains("custom")) throw ConfigError("shape: give exactly one of catalog, custom");
    if (j.contains("catalog")) {
        sc.catalog = get_string(j, "catalog", "shape");
        if (j.contains("params")) {
            require_keys(j.at("params"), "shape.params", {"amplitude"});
            sc.amplitude = get_number(j.at("params"), "amplitude", 1.0, "shape.params");
        }
    } else {
        if (j.contains("params")) throw ConfigError("shape.params: only valid with a catalog shape");
        const auto& list = j.at("custom");
        if (!list.is_array()) throw ConfigError("shape.custom: expected a list of {k1, k2, re, im}");
        for (const auto& r : list) {
            require_keys(r, "shape.custom[]", {"k1", "k2", "re", "im"});
            if (!r.contains("k1") || !r.contains("k2")) throw ConfigError("shape.custom[]: k1 and k2 are required");
            sc.custom.push_back({get_int(r, "k1", 0, "shape.custom[]"), get_int(r, "k2", 0, "shape.custom[]"),
                                 get_number(r, "re", 0.0, "shape.custom[]"),
                                 get_number(r, "im", 0.0, "shape.custom[]")});
        }
    }
    return sc;
}

elastic::ElasticModel parse_material(const json& j) {
    require_keys(j, "material", {"isotropic", "tensor"});
    if (j.contains("isotropic") == j.contains("tensor"))
        throw ConfigError("material: give exactly one of isotropic, tensor");
    if (j.contains("isotropic")) {
        const auto& iso = j.at("isotropic");
        require_keys(iso, "material.isotropic", {"mu", "lambda"});
        if (!iso.contains("mu") || !iso.contains("lambda")) throw ConfigError("material.isotropic: mu and lambda are required");
        return elastic::IsotropicModuli{get_number(iso, "mu", 0.0, "material.isotropic"),
                                        get_number(iso, "lambda", 0.0, "material.isotropic")};
    }
    const auto& t = j.at("tensor");
    if (!t.is_array() || t.size() != 21) throw ConfigError("material.tensor: expected 21 numbers");
    std::array<double, 21> upper{};
    for (std::size_t k = 0; k < 21; ++k) {
        if (!t[k].is_number()) throw ConfigError("material.tensor: expected 21 numbers");
        upper[k] = t[k].get<double>();
    }
    return elastic::ElasticTensor3::from_voigt21(upper);
}

plate::SignMode parse_sign(const json& v) {
    if (v.is_string() && v.get<std::string>() == "auto") return plate::SignMode::automatic;
    if (v.is_number_integer() && v.get<int>() == 1) return plate::SignMode::plus;
    if (v.is_number_integer() && v.get<int>() == -1) return plate::SignMode::minus;
    throw ConfigError("plate.sign: expected 1, -1 or \"auto\"");
}

descent::Method parse_method(const std::string& name) {
    if (name == "lbfgs") return descent::Method::lbfgs;
    if (name == "cg") return descent::Method::cg;
    if (name == "steepest") return descent::Method::steepest;
    throw ConfigError("plate.minimizer.method: expected lbfgs, cg or steepest");
}

void parse_plate(const json& j, RunConfig& cfg) {
    require_keys(j, "plate", {"Lx", "Ly", "m1", "m2", "load", "sign", "minimizer"});
    cfg.domain.Lx = get_number(j, "Lx", cfg.domain.Lx, "plate");
    cfg.domain.Ly = get_number(j, "Ly", cfg.domain.Ly, "plate");
    cfg.domain.m1 = get_int(j, "m1", cfg.domain.m1, "plate");
    cfg.domain.m2 = get_int(j, "m2", cfg.domain.m2, "plate");
    if (j.contains("sign")) cfg.load.sign = parse_sign(j.at("sign"));
    if (j.contains("load")) {
        const auto& l = j.at("load");
        require_keys(l, "plate.load", {"catalog", "amplitude", "grid"});
        if (l.contains("catalog") == l.contains("grid")) throw ConfigError("plate.load: give exactly one of catalog, grid");
        if (l.contains("catalog")) {
            cfg.load.catalog = get_string(l, "catalog", "plate.load");
            cfg.load.amplitude = get_number(l, "amplitude", 1.0, "plate.load");
        } else {
            if (l.contains("amplitude")) throw ConfigError("plate.load.amplitude: only valid with a catalog load");
            cfg.load.catalog.clear();
            const auto& rows = l.at("grid");
            if (!rows.is_array()) throw ConfigError("plate.load.grid: expected m2 rows of m1 numbers");
            for (const auto& row : rows) {
                if (!row.is_array()) throw ConfigError("plate.load.grid: expected m2 rows of m1 numbers");
                for (const auto& x : row) {
                    if (!x.is_number()) throw ConfigError("plate.load.grid: non-numeric entry");
                    cfg.load.grid.push_back(x.get<double>());
                }
            }
        }
    }
    if (j.contains("minimizer")) {
        const auto& m = j.at("minimizer");
        require_keys(m, "plate.minimizer", {"tol", "max_iter", "n_starts", "seed", "perturbation", "method"});
        auto& p = cfg.minimizer;
        p.tol = get_number(m, "tol", p.tol, "plate.minimizer");
        p.max_iter = get_int(m, "max_iter", p.max_iter, "plate.minimizer");
        p.n_starts = get_int(m, "n_starts", p.n_starts, "plate.minimizer");
        p.perturbation = get_number(m, "perturbation", p.perturbation, "plate.minimizer");
        if (m.contains("seed")) {
            if (!m.at("seed").is_number_unsigned()) throw ConfigError("plate.minimizer.seed: expected a non-negative integer");
            p.seed = m.at("seed").get<std::uint64_t>();
        }
        if (m.contains("method")) p.method = parse_method(get_string(m, "method", "plate.minimizer"));
    }
}

void check_consistency(const RunConfig& cfg) {
    shape::ShapeFunction s;
    s = cfg.shape.build();
    cfg.cell.validate(s.band());
    elastic::validate(cfg.material);
    (void)elastic::plane_form(cfg.material);
    cfg.domain.validate();
    cfg.load.build(cfg.domain).validate(cfg.domain);
    const auto& p = cfg.minimizer;
    if (!(p.tol > 0.0)) throw ConfigError("plate.minimizer.tol must be positive");
    if (p.max_iter < 1) throw ConfigError("plate.minimizer.max_iter must be at least 1");
    if (p.n_starts < 1) throw ConfigError("plate.minimizer.n_starts must be at least 1");
    if (!(p.perturbation >= 0.0)) throw ConfigError("plate.minimizer.perturbation must be non-negative");
    const auto& v = cfg.validate;
    if (v.oracle_n < 2 * s.band() + 1)
        throw ConfigError("validate.oracle_n must be at least 2 N_theta + 1 = " + std::to_string(2 * s.band() + 1));
    if (v.oracle_loads < 0 || v.gradient_states < 0) throw ConfigError("validate: counts must be non-negative");
}

void dump_value(const json& j, std::ostream& os, int indent, int depth) {
    const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent) * (depth + 1), ' ') : "";
    const std::string close_pad = indent > 0 ? std::string(static_cast<std::size_t>(indent) * depth, ' ') : "";
    const char* nl = indent > 0 ? "\n" : "";
    const char* sep = indent > 0 ? ": " : ":";
    if (j.is_object()) {
        if (j.empty()) {
            os << "{}";
            return;
        }
        os << '{' << nl;
        bool first = true;
        for (const auto& [key, value] : j.items()) {
            if (!first) os << ',' << nl;
            first = false;
            os << pad << json(key).dump() << sep;
            dump_value(value, os, indent, depth + 1);
        }
        os << nl << close_pad << '}';
    } else if (j.is_array()) {
        if (j.empty()) {
            os << "[]";
            return;
        }
        // numeric arrays stay on one line
        const bool flat = std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_primitive(); });
        os << '[' << (flat ? "" : nl);
        bool first = true;
        for (const auto& e : j) {
            if (!first) os << ',' << (flat ? (indent > 0 ? " " : "") : nl);
            first = false;
            if (!flat) os << pad;
            dump_value(e, os, indent, depth + 1);
        }
        os << (flat ? "" : nl) << (flat ? "" : close_pad) << ']';
    } else if (j.is_number_float()) {
        const double x = j.get<double>();
        if (!std::isfinite(x)) {
            os << "null";
            return;
        }
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        os << buf;
    } else {
        os << j.dump();
    }
}

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

json sym_to_json(const elastic::SymMat2& a) { return json::array({a.a11, a.a22, a.a12}); }

std::string corrector_csv(const cell::CorrectorSolution& sol, int n) {
    const auto u1 = fourier::synthesize(sol.u1_1, n);
    const auto u2 = fourier::synthesize(sol.u1_2, n);
    const auto v = fourier::synthesize(sol.v1, n);
    std::ostringstream os;
    os << "y1,y2,u1_1,u1_2,v1\n";
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const std::size_t p = static_cast<std::size_t>(j) * n + i;
            os << fmt17(double(i) / n) << ',' << fmt17(double(j) / n) << ',' << fmt17(u1.values[p]) << ','
               << fmt17(u2.values[p]) << ',' << fmt17(v.values[p]) << '\n';
        }
    return os.str();
}

cell::EffectiveForm assemble(const RunConfig& cfg, const shape::ShapeFunction& s, const elastic::PlaneForm& pf,
                             std::array<cell::CorrectorSolution, 6>* sols, int* grid) {
    const cell::CellProblem problem(s, pf, cfg.cell);
    auto basis = cell::solve_basis(problem);
    auto eff = cell::assemble_from_correctors(problem, basis, s);
    if (sols) *sols = std::move(basis);
    if (grid) *grid = problem.grid_size();
    return eff;
}

Check make_check(std::string name, double measured, double tol, std::string relation = "<=") {
    Check c{std::move(name), measured, tol, false, relation};
    if (relation == "<=") c.pass = measured <= tol;
    else if (relation == ">") c.pass = measured > tol;
    else c.pass = measured == tol;
    return c;
}

std::vector<Check> cell_checks(const RunConfig& cfg, const shape::ShapeFunction& s, const elastic::PlaneForm& pf,
                               const cell::EffectiveForm& eff) {
    std::vector<Check> out;
    std::mt19937_64 rng(cfg.minimizer.seed);
    const cell::CellProblem problem(s, pf, cfg.cell);
    {
        const auto x = problem.random_vector(rng), y = problem.random_vector(rng);
        const auto bx = problem.apply(x), by = problem.apply(y);
        const double scale = bx.norm() * y.norm() + x.norm() * by.norm();
        out.push_back(make_check("cell_operator_symmetry",
                                 std::abs(problem.dot(bx, y) - problem.dot(x, by)) / scale, 1e-12));
        double worst = 0.0;
        for (const auto* z : {&x, &y}) {
            const auto bz = problem.apply(*z);
            worst = std::max(worst, -problem.dot(bz, *z) / (bz.norm() * z->norm()));
        }
        out.push_back(make_check("cell_operator_psd", worst, 1e-12));
    }
    out.push_back(make_check("polarization_consistency", eff.polarization_mismatch, 1e-10));
    out.push_back(make_check("kernel_dimension", eff.numerical_kernel_dim(), eff.kernel.dim(), "=="));
    double kernel_energy = 0.0;
    const Eigen::MatrixXd kd = eff.kernel_directions();
    for (Eigen::Index c = 0; c < kd.cols(); ++c) kernel_energy = std::max(kernel_energy, eff.value(cell::Vector6(kd.col(c))));
    out.push_back(make_check("kernel_energy", kernel_energy / eff.norm(), 1e-8));
    out.push_back(make_check("coercivity", eff.restricted_min_eigenvalue(), 0.0, ">"));
    if (s.is_flat()) {
        cell::Matrix6 expected = cell::Matrix6::Zero();
        expected.topLeftCorner<3, 3>() = pf.matrix();
        out.push_back(make_check("flat_reduction", (eff.M - expected).cwiseAbs().maxCoeff(), 1e-12));
    }
    std::normal_distribution<double> normal;
    for (int k = 0; k < cfg.validate.oracle_loads; ++k) {
        cell::Vector6 z;
        for (auto& c : z) c = normal(rng);
        const auto load = cell::CellLoad::from_z(z);
        const double spectral = eff.value(z);
        const double oracle = cell::cell_oracle_extrapolated(load, s, pf, cfg.validate.oracle_n);
        out.push_back(make_check("oracle_agreement_richardson_" + std::to_string(k),
                                 std::abs(spectral - oracle) / std::abs(oracle), 1e-3));
    }
    return out;
}

plate::PlateState smooth_state(const plate::PlateDomain& dom, std::mt19937_64& rng, double amplitude) {
    std::normal_distribution<double> normal;
    auto st = plate::PlateState::zero(dom);
    for (Vector* f : {&st.u1, &st.u2, &st.v})
        for (int p = 0; p <= 2; ++p)
            for (int q = 0; q <= 2; ++q) {
                const double c = amplitude * normal(rng) / (1 + p * p + q * q);
                for (int j = 0; j < dom.m2; ++j)
                    for (int i = 0; i < dom.m1; ++i)
                        (*f)(dom.index(i, j)) += c * std::cos(p * kPi * dom.x1(i) / dom.Lx) *
                                                 std::cos(q * kPi * dom.x2(j) / dom.Ly);
            }
    return st;
}

std::vector<Check> plate_checks(const RunConfig& cfg, const shape::ShapeFunction& s, const elastic::PlaneForm& pf,
                                const cell::EffectiveForm& eff, std::ostream& err) {
    std::vector<Check> out;
    const auto& dom = cfg.domain;
    const auto load = cfg.load.build(dom);
    const plate::PlateEnergy energy(dom, eff.M, pf, load);
    std::mt19937_64 rng(cfg.minimizer.seed ^ 0x5bd1e995u);

    for (int k = 0; k < cfg.validate.gradient_states; ++k) {
        const Vector x = smooth_state(dom, rng, 0.05).pack();
        Vector dir = smooth_state(dom, rng, 1.0).pack();
        dir /= dir.norm();
        Vector g;
        energy.value(x, 1.0, &g);
        const double h = 1e-6 * (1.0 + x.norm());
        const double fd = (energy.value(x + h * dir, 1.0, nullptr) - energy.value(x - h * dir, 1.0, nullptr)) / (2 * h);
        const double an = g.dot(dir);
        out.push_back(make_check("plate_gradient_fd_" + std::to_string(k),
                                 std::abs(fd - an) / std::max(std::abs(an), 1e-300), 1e-5));
    }

    {
        plate::PlateState st = smooth_state(dom, rng, 0.05);
        Vector x = st.pack();
        energy.project(x);
        const double base = energy.value(x, 1.0, nullptr);
        double worst = 0.0;
        const Eigen::Index n = dom.points();
        for (int variant = 0; variant < 3; ++variant) {
            Vector y = x;
            for (int j = 0; j < dom.m2; ++j)
                for (int i = 0; i < dom.m1; ++i) {
                    const auto p = dom.index(i, j);
                    if (variant == 0) y(2 * n + p) += 0.3;
                    if (variant == 1) y(p) += 0.2, y(n + p) -= 0.1;
                    if (variant == 2) y(p) -= 1e-6 * dom.x2(j), y(n + p) += 1e-6 * dom.x1(i);
                }
            worst = std::max(worst, std::abs(energy.value(y, 1.0, nullptr) - base) / std::abs(base));
        }
        out.push_back(make_check("plate_gauge_invariance", worst, 1e-10));
    }

    plate::MinimizerParams params = cfg.minimizer;
    {
        const auto zero = plate::LoadSpec::zero(dom);
        const auto r = plate::minimize_plate(dom, eff, pf, zero, params);
        double total = 0.0, field = 0.0;
        for (const auto& st : r.starts) {
            total = std::max(total, std::abs(st.total));
            field = std::max(field, st.max_field);
        }
        out.push_back(make_check("zero_load_energy", total, 1e-12));
        out.push_back(make_check("zero_load_fields", field, 1e-5));
    }

    if (load.f3.cwiseAbs().maxCoeff() > 0.0 && cfg.load.sign == plate::SignMode::automatic) {
        try {
            auto neg = load;
            neg.f3 = -load.f3;
            const auto a = plate::minimize_plate(dom, eff, pf, load, params);
            const auto b = plate::minimize_plate(dom, eff, pf, neg, params);
            out.push_back(make_check("sign_flip_choice", a.s_chosen + b.s_chosen, 0.0, "=="));
            out.push_back(make_check("sign_flip_energy",
                                     std::abs(a.energy.total - b.energy.total) / std::abs(a.energy.total), 1e-10));
            if (s.is_flat()) {
                const auto c = plate::classical::minimize(dom, pf, load.f3, a.s_chosen, 1e-6, 100000,
                                                          plate::PlateState::zero(dom));
                out.push_back(make_check("classical_reduction",
                                         std::abs(a.energy.total - c.total) / std::abs(c.total), 1e-6));
            }
        } catch (const plate::NoDecrease& e) {
            err << "validate: plate minimizer: " << e.what() << '\n';
            out.push_back(make_check("plate_minimizer_converged", 0.0, 1.0, "=="));
        }
    }
    return out;
}

}  // namespace

shape::ShapeFunction ShapeConfig::build() const {
    if (!catalog.empty()) return shape::make_shape(catalog, amplitude);
    return shape::ShapeFunction::from_records(custom);
}

plate::LoadSpec LoadConfig::build(const plate::PlateDomain& dom) const {
    plate::LoadSpec load;
    if (!catalog.empty()) {
        load = plate::LoadSpec::catalog(catalog, amplitude, dom);
    } else {
        if (static_cast<Eigen::Index>(grid.size()) != dom.points())
            throw ConfigError("plate.load.grid: " + std::to_string(grid.size()) + " values for an " +
                              std::to_string(dom.m1) + " x " + std::to_string(dom.m2) + " grid");
        load.f3 = Eigen::Map<const Vector>(grid.data(), dom.points());
    }
    load.sign = sign;
    return load;
}

RunConfig parse_config(const json& doc) {
    require_keys(doc, "config", {"shape", "material", "cell", "plate", "validate", "outputs"});
    RunConfig cfg;
    if (!doc.contains("shape")) throw ConfigError("config: shape is required");
    cfg.shape = parse_shape(doc.at("shape"));
    if (doc.contains("material")) cfg.material = parse_material(doc.at("material"));
    if (doc.contains("cell")) {
        const auto& c = doc.at("cell");
        require_keys(c, "cell", {"N", "cg_tol", "max_iter", "dealias"});
        cfg.cell.N = get_int(c, "N", cfg.cell.N, "cell");
        cfg.cell.cg_tol = get_number(c, "cg_tol", cfg.cell.cg_tol, "cell");
        cfg.cell.max_iter = get_int(c, "max_iter", cfg.cell.max_iter, "cell");
        cfg.cell.dealias = get_bool(c, "dealias", cfg.cell.dealias, "cell");
    }
    if (doc.contains("plate")) parse_plate(doc.at("plate"), cfg);
    if (doc.contains("validate")) {
        const auto& v = doc.at("validate");
        require_keys(v, "validate", {"oracle_n", "oracle_loads", "gradient_states", "plate"});
        cfg.validate.oracle_n = get_int(v, "oracle_n", cfg.validate.oracle_n, "validate");
        cfg.validate.oracle_loads = get_int(v, "oracle_loads", cfg.validate.oracle_loads, "validate");
        cfg.validate.gradient_states = get_int(v, "gradient_states", cfg.validate.gradient_states, "validate");
        cfg.validate.plate = get_bool(v, "plate", cfg.validate.plate, "validate");
    }
    if (doc.contains("outputs")) {
        const auto& o = doc.at("outputs");
        require_keys(o, "outputs", {"dir", "correctors"});
        if (o.contains("dir")) cfg.out_dir = get_string(o, "dir", "outputs");
        cfg.write_correctors = get_bool(o, "correctors", cfg.write_correctors, "outputs");
    }
    try {
        check_consistency(cfg);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

RunConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    return parse_config(doc);
}

std::string dump_json(const json& doc, int indent) {
    std::ostringstream os;
    dump_value(doc, os, indent, 0);
    os << '\n';
    return os.str();
}

void write_atomic(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << text;
        out.flush();
        if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

json effective_to_json(const cell::EffectiveForm& eff) {
    json m = json::array();
    for (int i = 0; i < 6; ++i)
        for (int k = 0; k < 6; ++k) m.push_back(eff.M(i, k));
    json kernel = json::array();
    for (const auto& a : eff.kernel.vectors) kernel.push_back(sym_to_json(a));
    return json{{"M", m},
                {"kernel", kernel},
                {"kernel_dim", eff.kernel.dim()},
                {"coercivity_mu", eff.coercivity_mu},
                {"convention", cell::EffectiveForm::kConvention},
                {"kernel_convention", "kernel entries are (F11, F22, F12)"}};
}

cell::EffectiveForm effective_from_json(const json& doc) {
    cell::EffectiveForm eff;
    try {
        const auto& m = doc.at("M");
        if (!m.is_array() || m.size() != 36) throw ConfigError("effective form: M must have 36 entries");
        for (int i = 0; i < 6; ++i)
            for (int k = 0; k < 6; ++k) eff.M(i, k) = m.at(static_cast<std::size_t>(6 * i + k)).get<double>();
        for (const auto& a : doc.at("kernel")) {
            if (!a.is_array() || a.size() != 3) throw ConfigError("effective form: kernel entries need 3 numbers");
            eff.kernel.vectors.push_back({a[0].get<double>(), a[1].get<double>(), a[2].get<double>()});
        }
        eff.coercivity_mu = doc.at("coercivity_mu").get<double>();
        if (doc.at("convention").get<std::string>() != cell::EffectiveForm::kConvention)
            throw ConfigError("effective form: unknown coordinate convention");
    } catch (const json::exception& e) {
        throw ConfigError("effective form: " + std::string(e.what()));
    }
    if (!eff.M.allFinite() || (eff.M - eff.M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * eff.M.cwiseAbs().maxCoeff())
        throw ConfigError("effective form: M is not a finite symmetric matrix");
    return eff;
}

std::string solution_csv(const plate::PlateDomain& dom, const plate::PlateState& state) {
    std::ostringstream os;
    os << "x1,x2,u1,u2,v\n";
    for (int j = 0; j < dom.m2; ++j)
        for (int i = 0; i < dom.m1; ++i) {
            const auto p = dom.index(i, j);
            os << fmt17(dom.x1(i)) << ',' << fmt17(dom.x2(j)) << ',' << fmt17(state.u1(p)) << ','
               << fmt17(state.u2(p)) << ',' << fmt17(state.v(p)) << '\n';
        }
    return os.str();
}

json energy_to_json(const plate::PlateResult& r) {
    json starts = json::array();
    for (const auto& st : r.starts)
        starts.push_back({{"start", st.start},
                          {"sign", st.sign},
                          {"total", st.total},
                          {"grad_norm", st.grad_norm},
                          {"iterations", st.iterations},
                          {"status", descent::to_string(st.status)}});
    return json{{"membrane_coupled", r.energy.membrane_coupled},
                {"bending", r.energy.bending},
                {"load_work", r.energy.load_work},
                {"total", r.energy.total},
                {"s_chosen", r.s_chosen},
                {"iterations", r.iterations},
                {"grad_norm", r.grad_norm},
                {"starts", starts}};
}

int cmd_effective(const RunConfig& cfg, std::ostream& err) {
    try {
        const auto s = cfg.shape.build();
        const auto pf = elastic::plane_form(cfg.material);
        std::array<cell::CorrectorSolution, 6> sols;
        int grid = 0;
        const auto eff = assemble(cfg, s, pf, &sols, &grid);
        if (cfg.write_correctors)
            for (std::size_t k = 0; k < 6; ++k)
                write_atomic(cfg.out_dir / ("correctors_" + cell::kBasisNames[k] + ".csv"), corrector_csv(sols[k], grid));
        write_atomic(cfg.out_dir / "effective_form.json", dump_json(effective_to_json(eff)));
        return kOk;
    } catch (const cell::NonConvergence& e) {
        err << "effective: " << e.what() << '\n';
        return kNonConvergence;
    }
}

int cmd_solve(const RunConfig& cfg, const std::optional<fs::path>& reuse_effective, std::ostream& err) {
    const auto pf = elastic::plane_form(cfg.material);
    cell::EffectiveForm eff;
    if (reuse_effective) {
        std::ifstream in(*reuse_effective);
        if (!in) {
            err << "solve: cannot open '" << reuse_effective->string() << "'\n";
            return kConfigError;
        }
        try {
            eff = effective_from_json(json::parse(in));
        } catch (const json::parse_error& e) {
            err << "solve: effective form is not valid JSON: " << e.what() << '\n';
            return kConfigError;
        } catch (const ConfigError& e) {
            err << "solve: " << e.what() << '\n';
            return kConfigError;
        }
    } else {
        try {
            eff = assemble(cfg, cfg.shape.build(), pf, nullptr, nullptr);
        } catch (const cell::NonConvergence& e) {
            err << "solve: " << e.what() << '\n';
            return kNonConvergence;
        }
    }
    const auto load = cfg.load.build(cfg.domain);
    plate::PlateResult result;
    int code = kOk;
    try {
        result = plate::minimize_plate(cfg.domain, eff, pf, load, cfg.minimizer);
    } catch (const plate::NoDecrease& e) {
        err << "solve: " << e.what() << '\n';
        result = e.best();
        code = kNoDecrease;
    }
    write_atomic(cfg.out_dir / "plate_solution.csv", solution_csv(cfg.domain, result.state));
    write_atomic(cfg.out_dir / "energy.json", dump_json(energy_to_json(result)));
    return code;
}

int cmd_validate(const RunConfig& cfg, std::ostream& err) {
    const auto s = cfg.shape.build();
    const auto pf = elastic::plane_form(cfg.material);
    std::vector<Check> checks;
    try {
        const auto eff = assemble(cfg, s, pf, nullptr, nullptr);
        checks = cell_checks(cfg, s, pf, eff);
        if (cfg.validate.plate) {
            auto more = plate_checks(cfg, s, pf, eff, err);
            checks.insert(checks.end(), more.begin(), more.end());
        }
    } catch (const cell::NonConvergence& e) {
        err << "validate: " << e.what() << '\n';
        return kNonConvergence;
    } catch (const cell::OracleIterationCap& e) {
        err << "validate: " << e.what() << '\n';
        checks.push_back(make_check("oracle_converged", 0.0, 1.0, "=="));
    }
    json list = json::array();
    bool all = true;
    for (const auto& c : checks) {
        list.push_back({{"name", c.name},
                        {"measured", c.measured},
                        {"tolerance", c.tolerance},
                        {"relation", c.relation},
                        {"pass", c.pass}});
        all = all && c.pass;
        if (!c.pass) err << "validate: FAIL " << c.name << " measured " << fmt17(c.measured) << '\n';
    }
    write_atomic(cfg.out_dir / "validate_report.json", dump_json(json{{"checks", list}, {"all_pass", all}}));
    return all ? kOk : kValidationFailed;
}

int run(const std::string& verb, const fs::path& config_path, const CommandOptions& options, std::ostream& err) {
    RunConfig cfg;
    try {
        if (verb != "effective" && verb != "solve" && verb != "validate") throw ConfigError("unknown verb '" + verb + "'");
        cfg = load_config(config_path);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    if (options.out_dir) cfg.out_dir = *options.out_dir;
    if (options.seed) cfg.minimizer.seed = *options.seed;
    try {
        if (verb == "effective") return cmd_effective(cfg, err);
        if (verb == "solve") return cmd_solve(cfg, options.reuse_effective, err);
        return cmd_validate(cfg, err);
    } catch (const fs::filesystem_error& e) {
        err << "output error: " << e.what() << '\n';
        return kConfigError;
    }
}

}  // namespace wrinkle::cli
