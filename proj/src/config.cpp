#include "fracvi/config.hpp"

#include "fracvi/expression.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace fracvi {

namespace {

std::string join(const std::vector<std::string>& parts)
{
    std::string out;
    for (const auto& p : parts)
        out += "\n  " + p;
    return out;
}

class Section {
public:
    Section(const Json* obj, std::string path, std::vector<std::string>& errors, Section* parent = nullptr,
            std::string key = {})
        : obj_(obj), path_(std::move(path)), errors_(errors), parent_(parent), key_(std::move(key))
    {
        if (obj_ && !obj_->is_object()) {
            error("", "must be an object");
            obj_ = nullptr;
        }
    }

    const Json& resolved() const noexcept { return resolved_; }

    std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void error(const std::string& key, const std::string& what)
    {
        const std::string where = key.empty() ? path_ : key_path(key);
        errors_.push_back((where.empty() ? std::string("config") : where) + ": " + what);
    }

    const Json* raw(const std::string& key)
    {
        seen_.insert(key);
        if (!obj_)
            return nullptr;
        const auto it = obj_->find(key);
        return it == obj_->end() ? nullptr : &*it;
    }

    bool has(const std::string& key) const { return obj_ && obj_->contains(key); }

    double number(const std::string& key, std::optional<double> fallback)
    {
        const Json* v = raw(key);
        if (!v) {
            if (!fallback) {
                error(key, "required");
                return std::numeric_limits<double>::quiet_NaN();
            }
            resolved_[key] = *fallback;
            return *fallback;
        }
        if (!v->is_number()) {
            error(key, "must be a number");
            return fallback.value_or(std::numeric_limits<double>::quiet_NaN());
        }
        resolved_[key] = *v;
        return v->get<double>();
    }

    long long integer(const std::string& key, std::optional<long long> fallback)
    {
        const Json* v = raw(key);
        if (!v) {
            if (!fallback) {
                error(key, "required");
                return 0;
            }
            resolved_[key] = *fallback;
            return *fallback;
        }
        if (!v->is_number_integer()) {
            error(key, "must be an integer");
            return fallback.value_or(0);
        }
        resolved_[key] = *v;
        return v->get<long long>();
    }

    bool boolean(const std::string& key, bool fallback)
    {
        const Json* v = raw(key);
        if (!v) {
            resolved_[key] = fallback;
            return fallback;
        }
        if (!v->is_boolean()) {
            error(key, "must be true or false");
            return fallback;
        }
        resolved_[key] = *v;
        return v->get<bool>();
    }

    std::string choice(const std::string& key, std::optional<std::string> fallback,
                       const std::vector<std::string>& allowed)
    {
        const Json* v = raw(key);
        std::string out;
        if (!v) {
            if (!fallback) {
                error(key, "required (one of" + list(allowed) + ")");
                return {};
            }
            out = *fallback;
        } else if (!v->is_string()) {
            error(key, "must be a string");
            return fallback.value_or("");
        } else {
            out = v->get<std::string>();
        }
        if (std::find(allowed.begin(), allowed.end(), out) == allowed.end()) {
            error(key, "unknown value \"" + out + "\" (one of" + list(allowed) + ")");
            return {};
        }
        resolved_[key] = out;
        return out;
    }

    std::vector<double> numbers(const std::string& key, std::optional<std::vector<double>> fallback)
    {
        const Json* v = raw(key);
        if (!v) {
            if (!fallback) {
                error(key, "required");
                return {};
            }
            resolved_[key] = *fallback;
            return *fallback;
        }
        std::vector<double> out;
        if (!v->is_array()) {
            error(key, "must be an array of numbers");
            return out;
        }
        for (const auto& e : *v) {
            if (!e.is_number()) {
                error(key, "must be an array of numbers");
                return {};
            }
            out.push_back(e.get<double>());
        }
        resolved_[key] = *v;
        return out;
    }

    /// Field-valued key; the value is echoed and sampled by the caller.
    std::optional<Json> field(const std::string& key, const std::optional<Json>& fallback)
    {
        const Json* v = raw(key);
        if (!v) {
            if (!fallback)
                error(key, "required");
            else
                resolved_[key] = *fallback;
            return fallback;
        }
        resolved_[key] = *v;
        return *v;
    }

    /// The child's resolved object is written back on its finish().
    Section child(const std::string& key)
    {
        const Json* v = raw(key);
        resolved_[key] = Json::object();
        return Section(v, key_path(key), errors_, this, key);
    }

    void finish()
    {
        if (obj_)
            for (auto it = obj_->begin(); it != obj_->end(); ++it)
                if (!seen_.count(it.key()))
                    error(it.key(), "unknown key");
        if (parent_)
            parent_->resolved_[key_] = resolved_;
    }

private:
    static std::string list(const std::vector<std::string>& allowed)
    {
        std::string s;
        for (const auto& a : allowed)
            s += " " + a;
        return s;
    }

    const Json* obj_;
    std::string path_;
    std::vector<std::string>& errors_;
    Section* parent_;
    std::string key_;
    Json resolved_ = Json::object();
    std::set<std::string> seen_;
};

std::vector<std::string> coordinate_names(int d, const char* prefix)
{
    std::vector<std::string> out;
    for (int j = 1; j <= d; ++j)
        out.push_back(prefix + std::to_string(j));
    return out;
}

void collect(std::vector<std::string>& errors, const std::string& key, const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const ConfigError& e) {
        errors.insert(errors.end(), e.errors().begin(), e.errors().end());
    } catch (const std::exception& e) {
        errors.push_back(key + ": " + e.what());
    }
}

Expression parse_expression(const Json& v, const std::vector<std::string>& vars, const std::string& key)
{
    if (!v.is_string())
        throw ConfigError({key + ": must be an expression string"});
    try {
        return Expression::parse(v.get<std::string>(), vars);
    } catch (const ExpressionError& e) {
        throw ConfigError({key + ": " + e.what()});
    }
}

struct Base {
    std::vector<std::string> errors;
    Json resolved = Json::object();
    bool grid_ok = false;
    TorusGrid grid{1, std::numbers::pi, 8};
    std::optional<DomainMask> mask;
};

// d, L, N and omega; `top` must outlive the returned state.
void parse_geometry(Section& top, Base& b)
{
    const long long d = top.integer("d", 1);
    const double L = top.number("L", std::numbers::pi);
    const long long N = top.integer("N", 256);
    bool ok = true;
    if (d < 1 || d > 3) {
        top.error("d", "must be 1, 2 or 3");
        ok = false;
    }
    if (!(L > 0.0)) {
        top.error("L", "must be positive");
        ok = false;
    }
    if (N < 4 || N % 2 != 0 || N > 8192) {
        top.error("N", "must be even and within [4, 8192]");
        ok = false;
    }
    if (ok) {
        b.grid = TorusGrid(static_cast<int>(d), L, static_cast<int>(N));
        b.grid_ok = true;
    }

    Section om = top.child("omega");
    const std::string type = om.choice("type", d == 1 ? "interval" : "ball", {"interval", "box", "ball", "full"});
    const int dim = b.grid.dim();
    const auto point = [&](const std::vector<double>& v, const std::string& key) {
        Point x{0.0, 0.0, 0.0};
        if (static_cast<int>(v.size()) != dim) {
            om.error(key, "needs " + std::to_string(dim) + " entries");
            return x;
        }
        for (int j = 0; j < dim; ++j)
            x[static_cast<std::size_t>(j)] = v[static_cast<std::size_t>(j)];
        return x;
    };
    const std::size_t before = b.errors.size();
    if (type == "interval") {
        if (d != 1)
            om.error("type", "interval needs d = 1");
        const double lo = om.number("lower", -1.0), hi = om.number("upper", 1.0);
        if (!(lo < hi))
            om.error("", "lower must be below upper");
        if (b.grid_ok && b.errors.size() == before)
            b.mask = DomainMask::interval(b.grid, lo, hi);
    } else if (type == "box") {
        const Point c = point(om.numbers("center", std::vector<double>(static_cast<std::size_t>(dim), 0.0)), "center");
        const Point r = point(om.numbers("half_widths", std::nullopt), "half_widths");
        if (b.grid_ok && b.errors.size() == before)
            b.mask = DomainMask::box(b.grid, c, r);
    } else if (type == "ball") {
        const Point c = point(om.numbers("center", std::vector<double>(static_cast<std::size_t>(dim), 0.0)), "center");
        const double r = om.number("radius", 1.0);
        if (!(r > 0.0))
            om.error("radius", "must be positive");
        if (b.grid_ok && b.errors.size() == before)
            b.mask = DomainMask::ball(b.grid, c, r);
    } else if (type == "full") {
        if (b.grid_ok)
            b.mask = DomainMask::full(b.grid);
    }
    om.finish();
    if (b.mask && b.mask->count() == 0) {
        om.error("", "contains no grid node");
        b.mask.reset();
    }
}

ScalarField sample_or_zero(const std::optional<Json>& v, Base& b, const std::string& key)
{
    if (!v)
        return ScalarField(b.grid);
    if (!b.grid_ok) {
        // No grid to sample on, but expression syntax can still be reported.
        if (v->is_string())
            collect(b.errors, key, [&] { parse_expression(*v, coordinate_names(3, "x"), key); });
        return ScalarField(b.grid);
    }
    ScalarField out(b.grid);
    collect(b.errors, key, [&] { out = field_from_json(*v, b.grid, key); });
    return out;
}

double order_value(Section& sec, const std::string& key, std::optional<double> fallback)
{
    const double s = sec.number(key, fallback);
    if (!(s >= 0.0 && s <= 1.0))
        sec.error(key, key + " out of [0,1]");
    return s;
}

SolverConfig parse_solver(Section& sec, double& kkt_max)
{
    SolverConfig c;
    c.tol = sec.number("tol", c.tol);
    c.max_iters = static_cast<int>(sec.integer("max_iters", c.max_iters));
    c.armijo_c = sec.number("armijo_c", c.armijo_c);
    c.backtrack = sec.number("backtrack", c.backtrack);
    c.rho = sec.number("rho", c.rho);
    c.rho_band = sec.number("rho_band", c.rho_band);
    c.rho_scale = sec.number("rho_scale", c.rho_scale);
    c.omega = sec.number("omega", c.omega);
    c.picard_max = static_cast<int>(sec.integer("picard_max", c.picard_max));
    kkt_max = sec.number("kkt_max", kkt_max);
    try {
        c.validate();
    } catch (const std::exception& e) {
        sec.error("", e.what());
    }
    sec.finish();
    return c;
}

// Everything a solve needs except the order s and the command-specific sections.
struct ProblemParts {
    double p = 2.0;
    std::optional<Coefficients> coeffs;
    std::optional<DualDatum> F;
    ConstraintSet K = Unconstrained{};
    std::string constraint_type = "none";
    SolverConfig solver;
    double kkt_max = 1e-6;
};

ProblemParts parse_problem(Section& top, Base& b)
{
    ProblemParts out;
    out.p = top.number("p", 2.0);
    if (!(out.p > 1.0 && std::isfinite(out.p)))
        top.error("p", "must be finite and > 1");
    const double beta = top.number("beta", 0.0);
    if (!(beta >= 0.0))
        top.error("beta", "must be nonnegative");

    Section pr = top.child("principal");
    const std::string ptype = pr.choice("type", "p_laplace", {"p_laplace", "linear"});
    if (ptype == "p_laplace") {
        const ScalarField alpha = sample_or_zero(pr.field("alpha", Json(1.0)), b, pr.key_path("alpha"));
        out.coeffs = Coefficients{out.p, PLaplace{alpha}, beta, std::nullopt, std::nullopt};
    } else if (ptype == "linear") {
        const std::optional<Json> m = pr.field("matrix", std::nullopt);
        const double ell = pr.number("ellipticity", std::nullopt);
        const int d = b.grid.dim();
        LinearMatrix lm;
        lm.ellipticity = ell;
        if (m && (!m->is_array() || static_cast<int>(m->size()) != d)) {
            pr.error("matrix", "must be a " + std::to_string(d) + "x" + std::to_string(d) + " array of fields");
        } else if (m) {
            for (int j = 0; j < d; ++j) {
                const Json& row = (*m)[static_cast<std::size_t>(j)];
                if (!row.is_array() || static_cast<int>(row.size()) != d) {
                    pr.error("matrix", "row " + std::to_string(j + 1) + " must have " + std::to_string(d) + " entries");
                    continue;
                }
                std::vector<ScalarField> r;
                for (int k = 0; k < d; ++k)
                    r.push_back(sample_or_zero(row[static_cast<std::size_t>(k)], b,
                                               pr.key_path("matrix") + "[" + std::to_string(j) + "][" +
                                                   std::to_string(k) + "]"));
                lm.entries.push_back(std::move(r));
            }
        }
        out.coeffs = Coefficients{out.p, lm, beta, std::nullopt, std::nullopt};
    }
    pr.finish();

    Section rhs = top.child("rhs");
    ScalarField f0 = sample_or_zero(rhs.field("f0", Json(0.0)), b, rhs.key_path("f0"));
    const bool mask_f0 = rhs.boolean("mask_f0", true);
    if (mask_f0 && b.mask)
        apply_mask_inplace(f0, *b.mask);
    VectorField f(b.grid);
    if (const Json* fv = rhs.raw("f")) {
        rhs.field("f", std::nullopt);
        if (!fv->is_array() || static_cast<int>(fv->size()) != b.grid.dim()) {
            rhs.error("f", "must be an array of " + std::to_string(b.grid.dim()) + " fields");
        } else {
            for (int j = 0; j < b.grid.dim(); ++j) {
                const ScalarField c = sample_or_zero((*fv)[static_cast<std::size_t>(j)], b,
                                                     rhs.key_path("f") + "[" + std::to_string(j) + "]");
                std::copy(c.values().begin(), c.values().end(), f.data(j).begin());
            }
        }
    }
    rhs.finish();
    out.F = DualDatum(std::move(f0), std::move(f));

    Section cs = top.child("constraint");
    out.constraint_type =
        cs.choice("type", "none", {"none", "obstacle_lower", "obstacle_upper", "gradient_bound"});
    if (out.constraint_type == "obstacle_lower") {
        out.K = ObstacleLower{sample_or_zero(cs.field("psi", std::nullopt), b, cs.key_path("psi"))};
    } else if (out.constraint_type == "obstacle_upper") {
        out.K = ObstacleUpper{sample_or_zero(cs.field("phi", std::nullopt), b, cs.key_path("phi"))};
    } else if (out.constraint_type == "gradient_bound") {
        ScalarField g = sample_or_zero(cs.field("g", std::nullopt), b, cs.key_path("g"));
        const double nu = cs.number("nu", std::nullopt);
        if (!(nu > 0.0))
            cs.error("nu", "must be positive (the bound needs g >= nu > 0)");
        else if (b.grid_ok)
            for (double v : g.values())
                if (v < nu) {
                    cs.error("g", "falls below nu = " + format_double(nu));
                    break;
                }
        out.K = GradientBound{std::move(g), nu};
    }
    cs.finish();

    Section sv = top.child("solver");
    out.solver = parse_solver(sv, out.kkt_max);
    return out;
}

void validate_problem(Base& b, const ProblemParts& parts, double s)
{
    if (!b.mask || !parts.coeffs || !(s >= 0.0 && s <= 1.0))
        return;
    collect(b.errors, "principal", [&] { parts.coeffs->validate(b.grid, FracOrder(s)); });
    collect(b.errors, "rhs", [&] { parts.F->require_support(*b.mask); });
}

void finish(Base& b, const Section& top)
{
    if (!b.errors.empty())
        throw ConfigError(b.errors);
    b.resolved = top.resolved();
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error("config error:" + join(errors)), errors_(std::move(errors))
{
}

Json load_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError({path + ": cannot open file"});
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError({path + ": " + e.what()});
    }
}

ScalarField field_from_json(const Json& value, const TorusGrid& grid, const std::string& key)
{
    ScalarField out(grid);
    if (value.is_number()) {
        const double v = value.get<double>();
        for (double& x : out.values())
            x = v;
        return out;
    }
    if (value.is_string()) {
        const Expression e = parse_expression(value, coordinate_names(grid.dim(), "x"), key);
        std::array<double, 3> x{};
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const Point pt = grid.node(i);
            for (int j = 0; j < grid.dim(); ++j)
                x[static_cast<std::size_t>(j)] = pt[static_cast<std::size_t>(j)];
            out[i] = e.eval(std::span<const double>(x.data(), static_cast<std::size_t>(grid.dim())));
            if (!std::isfinite(out[i]))
                throw ConfigError({key + ": not finite at node " + std::to_string(i)});
        }
        return out;
    }
    if (value.is_array()) {
        if (value.size() != grid.size())
            throw ConfigError({key + ": sample array has " + std::to_string(value.size()) + " entries, grid has " +
                               std::to_string(grid.size())});
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (!value[i].is_number())
                throw ConfigError({key + ": sample " + std::to_string(i) + " is not a number"});
            out[i] = value[i].get<double>();
        }
        return out;
    }
    throw ConfigError({key + ": must be a number, an expression string or a sample array"});
}

SolveSetup parse_solve_config(const Json& doc)
{
    Base b;
    Section top(&doc, "", b.errors);
    parse_geometry(top, b);
    const double s = order_value(top, "s", 0.5);
    ProblemParts parts = parse_problem(top, b);
    const auto seed = top.integer("seed", 0);
    top.finish();
    validate_problem(b, parts, s);
    finish(b, top);
    SolveSetup out{b.resolved, b.grid, *b.mask, s, *parts.coeffs, *parts.F, parts.K, parts.solver,
                   static_cast<std::uint64_t>(seed), parts.kkt_max};
    out.solver.seed = out.seed;
    return out;
}

SweepSetup parse_sweep_config(const Json& doc)
{
    Base b;
    Section top(&doc, "", b.errors);
    parse_geometry(top, b);
    if (top.has("s"))
        top.error("s", "not used by sweep configs; set sweep.sigma");
    top.raw("s");
    ProblemParts parts = parse_problem(top, b);
    const auto seed = top.integer("seed", std::nullopt);

    Section sw = top.child("sweep");
    const double sigma = order_value(sw, "sigma", std::nullopt);
    std::vector<double> orders;
    if (sw.has("orders")) {
        if (sw.has("schedule"))
            sw.error("schedule", "give either orders or schedule, not both");
        orders = sw.numbers("orders", std::nullopt);
        for (double s : orders)
            if (!(s >= 0.0 && s <= 1.0))
                sw.error("orders", "s out of [0,1] (" + format_double(s) + ")");
    } else {
        Section sc = sw.child("schedule");
        const auto first = sc.integer("first", 1), last = sc.integer("last", 6);
        const bool below = sc.boolean("below", true), above = sc.boolean("above", true);
        if (first < 0 || last < first || last > 40)
            sc.error("", "needs 0 <= first <= last <= 40");
        else if (std::isfinite(sigma)) {
            if (below)
                orders = dyadic_orders(sigma, static_cast<int>(first), static_cast<int>(last), true);
            if (above) {
                const auto up = dyadic_orders(sigma, static_cast<int>(first), static_cast<int>(last), false);
                orders.insert(orders.end(), up.begin(), up.end());
            }
        }
        sc.finish();
    }
    const std::string rule =
        sw.choice("rule", "fixed", {"fixed", "obstacle_translated", "gradient_riesz_lifted"});
    const std::string recovery = sw.choice("recovery", "constant", {"constant", "mollified"});
    const double tol_factor = sw.number("tol_factor", 10.0);
    if (!(tol_factor > 0.0))
        sw.error("tol_factor", "must be positive");
    sw.finish();
    top.finish();
    validate_problem(b, parts, std::isfinite(sigma) ? sigma : 0.5);

    SweepSpec spec{parts.coeffs ? *parts.coeffs : Coefficients::p_laplace(b.grid, 2.0),
                   parts.F ? *parts.F : DualDatum::zero(b.grid),
                   b.mask ? *b.mask : DomainMask::full(b.grid),
                   sigma,
                   orders,
                   rule == "obstacle_translated"     ? ConstraintRule::obstacle_translated
                   : rule == "gradient_riesz_lifted" ? ConstraintRule::gradient_riesz_lifted
                                                     : ConstraintRule::fixed,
                   parts.K,
                   recovery == "mollified" ? ObstacleRecovery::mollified : ObstacleRecovery::constant,
                   static_cast<std::uint64_t>(seed)};
    if (b.errors.empty())
        collect(b.errors, "sweep", [&] { spec.validate(); });
    finish(b, top);
    SweepSetup out{b.resolved, std::move(spec), parts.solver, tol_factor};
    out.solver.seed = out.spec.seed;
    return out;
}

QviSetup parse_qvi_config(const Json& doc)
{
    Base b;
    Section top(&doc, "", b.errors);
    parse_geometry(top, b);
    const double s = order_value(top, "s", 0.5);
    ProblemParts parts = parse_problem(top, b);
    if (parts.constraint_type != "none")
        top.error("constraint", "qvi configs build their constraint from the qvi section; remove it");
    const auto seed = top.integer("seed", 0);

    Section q = top.child("qvi");
    const std::string type = q.choice("type", std::nullopt, {"obstacle", "gradient"});
    QviConfig cfg;
    cfg.omega = q.number("omega", cfg.omega);
    cfg.picard_cap = static_cast<int>(q.integer("picard_cap", cfg.picard_cap));
    cfg.tol = q.number("tol", cfg.tol);
    cfg.inner = parts.solver;
    cfg.inner.tol = q.number("inner_tol", 1e-10);
    collect(b.errors, "qvi", [&] { cfg.validate(); });

    const int d = b.grid.dim();
    std::vector<std::string> xy = coordinate_names(d, "x");
    for (const auto& y : coordinate_names(d, "y"))
        xy.push_back(y);
    const auto split_point = [d](const Point& x, const Point& y, std::array<double, 7>& buf) {
        for (int j = 0; j < d; ++j) {
            buf[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(j)];
            buf[static_cast<std::size_t>(d + j)] = y[static_cast<std::size_t>(j)];
        }
    };

    std::optional<std::variant<ObstacleQviSpec, GradientQviSpec>> spec;
    const DomainMask mask = b.mask ? *b.mask : DomainMask::full(b.grid);
    const Coefficients coeffs = parts.coeffs ? *parts.coeffs : Coefficients::p_laplace(b.grid, 2.0);
    const DualDatum F = parts.F ? *parts.F : DualDatum::zero(b.grid);
    if (type == "obstacle") {
        const double t = order_value(q, "t", std::isfinite(s) ? s : 0.5);
        Section T = q.child("T");
        const std::string ttype = T.choice("type", std::nullopt, {"truncation", "zero", "uryson"});
        std::optional<SourceOperator> source;
        if (ttype == "truncation") {
            ScalarField k = sample_or_zero(T.field("k", std::nullopt), b, T.key_path("k"));
            if (T.boolean("mask_k", true) && b.mask)
                apply_mask_inplace(k, *b.mask);
            collect(b.errors, T.key_path("k"), [&] { source = SourceOperator::truncation(k, parts.p); });
        } else if (ttype == "zero") {
            source = SourceOperator::custom(
                [](const ScalarField& u, const VectorField&) { return ScalarField(u.grid()); }, 0.0, "zero");
        } else if (ttype == "uryson") {
            std::vector<std::string> vars = xy;
            vars.push_back("r");
            const std::optional<Json> tau = T.field("tau", std::nullopt);
            const double M = T.number("bound", std::nullopt);
            if (!(M >= 0.0))
                T.error("bound", "must be nonnegative");
            if (tau)
                collect(b.errors, T.key_path("tau"), [&] {
                    const Expression e = parse_expression(*tau, vars, T.key_path("tau"));
                    source = SourceOperator::uryson(
                        [e, split_point, d](const Point& x, const Point& y, double r) {
                            std::array<double, 7> buf{};
                            split_point(x, y, buf);
                            buf[static_cast<std::size_t>(2 * d)] = r;
                            return e.eval(std::span<const double>(buf.data(), static_cast<std::size_t>(2 * d + 1)));
                        },
                        M);
                });
        }
        T.finish();
        if (q.has("G"))
            q.error("G", "only used by gradient QVIs");
        if (source)
            spec = ObstacleQviSpec{coeffs, s, t, F, *source, mask};
    } else if (type == "gradient") {
        Section G = q.child("G");
        const std::string gtype = G.choice("type", std::nullopt, {"constant", "integral"});
        std::optional<BoundOperator> bound;
        if (gtype == "constant") {
            const ScalarField g = sample_or_zero(G.field("g", std::nullopt), b, G.key_path("g"));
            bound = BoundOperator::constant(g);
            if (b.grid_ok && !(bound->nu > 0.0))
                G.error("g", "must stay >= nu > 0");
        } else if (gtype == "integral") {
            const std::optional<Json> theta = G.field("theta", std::nullopt);
            const std::optional<Json> fb = G.field("bound", std::nullopt);
            const double nu = G.number("nu", std::nullopt);
            const double cap = G.number("cap", std::nullopt);
            if (!(nu > 0.0))
                G.error("nu", "must be positive (the bound needs G(u) >= nu > 0)");
            if (!(cap >= nu))
                G.error("cap", "must be at least nu");
            std::vector<std::string> xw = coordinate_names(d, "x");
            xw.push_back("w");
            if (theta && fb)
                collect(b.errors, "qvi.G", [&] {
                    const Expression te = parse_expression(*theta, xy, G.key_path("theta"));
                    const Expression be = parse_expression(*fb, xw, G.key_path("bound"));
                    bound = BoundOperator::integral(
                        [te, split_point, d](const Point& x, const Point& y) {
                            std::array<double, 7> buf{};
                            split_point(x, y, buf);
                            return te.eval(std::span<const double>(buf.data(), static_cast<std::size_t>(2 * d)));
                        },
                        [be, d](const Point& x, double w) {
                            std::array<double, 4> buf{};
                            for (int j = 0; j < d; ++j)
                                buf[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(j)];
                            buf[static_cast<std::size_t>(d)] = w;
                            return be.eval(std::span<const double>(buf.data(), static_cast<std::size_t>(d + 1)));
                        },
                        mask, nu, cap);
                });
        }
        G.finish();
        if (q.has("T"))
            q.error("T", "only used by obstacle QVIs");
        if (q.has("t"))
            q.error("t", "only used by obstacle QVIs");
        if (bound)
            spec = GradientQviSpec{coeffs, s, F, *bound, mask};
    }
    q.raw("T");
    q.raw("G");
    q.raw("t");
    q.finish();
    top.finish();
    validate_problem(b, parts, std::isfinite(s) ? s : 0.5);
    if (b.errors.empty() && spec)
        collect(b.errors, "qvi", [&] { std::visit([](const auto& sp) { sp.validate(); }, *spec); });
    finish(b, top);
    cfg.inner.seed = static_cast<std::uint64_t>(seed);
    return QviSetup{b.resolved, *spec, cfg};
}

PoincareSetup parse_poincare_config(const Json& doc)
{
    Base b;
    Section top(&doc, "", b.errors);
    parse_geometry(top, b);
    Section pc = top.child("poincare");
    std::vector<double> orders = pc.numbers("orders", std::nullopt);
    for (double s : orders)
        if (!(s > 0.0 && s <= 1.0))
            pc.error("orders", "s out of (0,1] (" + format_double(s) + ")");
    PoincareOptions opt;
    opt.tol = pc.number("tol", opt.tol);
    opt.max_iters = static_cast<int>(pc.integer("max_iters", opt.max_iters));
    if (!(opt.tol > 0.0))
        pc.error("tol", "must be positive");
    if (opt.max_iters < 1)
        pc.error("max_iters", "must be positive");
    pc.finish();
    top.finish();
    if (b.mask && !b.mask->is_strict())
        top.error("omega", "must leave part of the box outside");
    finish(b, top);
    return PoincareSetup{b.resolved, *b.mask, std::move(orders), opt};
}

}  // namespace fracvi
