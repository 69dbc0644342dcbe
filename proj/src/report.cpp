#include "fracvi/report.hpp"

namespace fracvi {

namespace {

Json kkt_json(const KktResiduals& k)
{
    return Json{{"primal", k.primal}, {"multiplier", k.multiplier}, {"complementarity", k.complementarity}};
}

}  // namespace

Json solve_report_json(const SolveReport& r, const Json& config)
{
    Json out;
    out["command"] = "solve";
    out["config"] = config;
    out["result"] = Json{{"method", r.method},
                         {"s", r.s},
                         {"converged", r.converged},
                         {"iterations", r.iterations},
                         {"residual", r.residual},
                         {"kkt", kkt_json(r.kkt)},
                         {"final_energy", r.energy_trace.empty() ? Json() : Json(r.energy_trace.back())},
                         {"rho", r.rho},
                         {"wall_time", r.wall_time},
                         {"message", r.message}};
    return out;
}

Json sweep_report_json(const SweepReport& r, const Verdict& verdict, const Json& config)
{
    Json rows = Json::array();
    for (const auto& row : r.rows)
        rows.push_back(Json{{"s", row.s},
                            {"err_u", row.err_u},
                            {"err_grad", row.err_grad},
                            {"weak", row.weak},
                            {"iterations", row.iterations},
                            {"converged", row.converged},
                            {"message", row.message}});
    Json out;
    out["command"] = "sweep";
    out["config"] = config;
    out["result"] = Json{{"sigma", r.sigma},
                         {"p", r.p},
                         {"solver_tol", r.solver_tol},
                         {"sigma_converged", r.sigma_converged},
                         {"verdict", verdict.ok},
                         {"verdict_summary", verdict.summary},
                         {"rows", rows},
                         {"note", "recovery and limit consistency only; weak closedness is not certified by a "
                                  "finite sweep"}};
    return out;
}

Json qvi_report_json(const QviReport& r, const Json& config)
{
    Json out;
    out["command"] = "qvi";
    out["config"] = config;
    out["result"] = Json{{"converged", r.converged},
                         {"iterations", r.iterations},
                         {"final_residual", r.residuals.empty() ? Json() : Json(r.residuals.back())},
                         {"radius", r.radius},
                         {"sobolev_constant", r.constant},
                         {"max_obstacle_norm", r.max_obstacle_norm},
                         {"message", r.message}};
    return out;
}

Json poincare_report_json(const std::vector<PoincareReport>& rows, const Json& config)
{
    Json list = Json::array();
    for (const auto& r : rows)
        list.push_back(Json{{"s", r.s},
                            {"lambda", r.lambda},
                            {"c", r.c},
                            {"iterations", r.iterations},
                            {"residual", r.residual},
                            {"converged", r.converged}});
    Json out;
    out["command"] = "poincare";
    out["config"] = config;
    out["result"] = list;
    return out;
}

std::string energy_trace_csv(const SolveReport& report)
{
    std::string out = "k,energy\n";
    for (std::size_t k = 0; k < report.energy_trace.size(); ++k)
        out += std::to_string(k) + "," + format_double(report.energy_trace[k]) + "\n";
    return out;
}

std::string qvi_trace_csv(const QviReport& report)
{
    std::string out = "k,residual,inner_iters,inner_converged\n";
    for (std::size_t k = 0; k < report.residuals.size(); ++k)
        out += std::to_string(k + 1) + "," + format_double(report.residuals[k]) + "," +
               std::to_string(report.inner[k].iterations) + "," + (report.inner[k].converged ? "true" : "false") +
               "\n";
    return out;
}

std::string poincare_csv(const std::vector<PoincareReport>& rows)
{
    std::string out = PoincareReport::csv_header() + "\n";
    for (const auto& r : rows)
        out += r.csv_row() + "\n";
    return out;
}

}  // namespace fracvi
