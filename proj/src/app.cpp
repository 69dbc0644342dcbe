#include "fracvi/app.hpp"

#include "fracvi/parallel.hpp"
#include "fracvi/report.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fracvi {

namespace fs = std::filesystem;

namespace {

std::string field_csv(const ScalarField& f)
{
    std::ostringstream os;
    write_field_csv(os, f);
    return os.str();
}

class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    void put(const std::string& name, const std::string& text)
    {
        const fs::path p = dir_ / name;
        write_text(p, text);
        outcome.files.push_back(p);
    }

    CommandOutcome outcome;

private:
    fs::path dir_;
};

}  // namespace

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out)
        throw std::runtime_error("write failed for " + path.string());
}

std::string read_text(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

CommandOutcome run_solve(const Json& doc, const fs::path& out_dir)
{
    const SolveSetup setup = parse_solve_config(doc);
    const FracOrder s(setup.s);
    const SolveReport r = std::holds_alternative<GradientBound>(setup.K)
                              ? solve_gradient_vi(setup.coeffs, setup.F, std::get<GradientBound>(setup.K).g,
                                                  std::get<GradientBound>(setup.K).nu, s, setup.mask, setup.solver)
                              : solve_vi(setup.coeffs, setup.F, setup.K, s, setup.mask, setup.solver);
    Outputs out(out_dir);
    out.put("solution.csv", field_csv(r.solution));
    out.put("energy.csv", energy_trace_csv(r));
    out.put("report.json", solve_report_json(r, setup.resolved).dump(2) + "\n");

    const bool kkt_ok = r.kkt.max() <= setup.kkt_max;
    out.outcome.exit_code = r.converged && kkt_ok ? 0 : 1;
    out.outcome.summary = "solve: " + r.method + ", " + std::to_string(r.iterations) + " iterations, " +
                          (r.converged ? "converged" : "not converged (" + r.message + ")") +
                          ", kkt max " + format_double(r.kkt.max()) + (kkt_ok ? "" : " above solver.kkt_max");
    return out.outcome;
}

CommandOutcome run_sweep(const Json& doc, const fs::path& out_dir)
{
    const SweepSetup setup = parse_sweep_config(doc);
    const SweepReport r = sweep_orders(setup.spec, setup.solver);
    const Verdict v = convergence_verdict(r, setup.tol_factor);
    Outputs out(out_dir);
    out.put("sweep.csv", r.csv());
    out.put("sigma_solution.csv", field_csv(r.sigma_solution));
    out.put("report.json", sweep_report_json(r, v, setup.resolved).dump(2) + "\n");
    out.outcome.exit_code = v.ok && r.sigma_converged ? 0 : 1;
    out.outcome.summary = "sweep: " + std::to_string(r.rows.size()) + " orders, verdict " +
                          (v.ok ? "true" : "false (" + v.summary + ")") +
                          (r.sigma_converged ? "" : ", limit solve did not converge");
    return out.outcome;
}

CommandOutcome run_qvi(const Json& doc, const fs::path& out_dir)
{
    const QviSetup setup = parse_qvi_config(doc);
    const QviReport r = std::visit(
        [&](const auto& spec) {
            if constexpr (std::is_same_v<std::decay_t<decltype(spec)>, ObstacleQviSpec>)
                return obstacle_qvi_solve(spec, setup.config);
            else
                return gradient_qvi_solve(spec, setup.config);
        },
        setup.spec);
    Outputs out(out_dir);
    out.put("solution.csv", field_csv(r.solution));
    if (r.constraint)
        out.put("constraint.csv", field_csv(*r.constraint));
    out.put("trace.csv", qvi_trace_csv(r));
    out.put("report.json", qvi_report_json(r, setup.resolved).dump(2) + "\n");
    out.outcome.exit_code = r.converged ? 0 : 1;
    out.outcome.summary = "qvi: " + std::to_string(r.iterations) + " Picard steps, " +
                          (r.converged ? "converged, residual " + format_double(r.residuals.back())
                                       : "not converged (" + r.message + ")");
    return out.outcome;
}

CommandOutcome run_poincare(const Json& doc, const fs::path& out_dir)
{
    const PoincareSetup setup = parse_poincare_config(doc);
    std::vector<PoincareReport> rows(setup.orders.size());
    parallel_for(rows.size(), [&](std::size_t i) {
        rows[i] = poincare_best_constant(setup.mask, FracOrder(setup.orders[i]), setup.options);
    });
    Outputs out(out_dir);
    out.put("poincare.csv", poincare_csv(rows));
    out.put("report.json", poincare_report_json(rows, setup.resolved).dump(2) + "\n");
    bool ok = true;
    for (const auto& r : rows)
        ok = ok && r.converged;
    out.outcome.exit_code = ok ? 0 : 1;
    out.outcome.summary = "poincare: " + std::to_string(rows.size()) + " orders" + (ok ? "" : ", some not converged");
    return out.outcome;
}

}  // namespace fracvi
