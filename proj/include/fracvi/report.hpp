#pragma once

/// JSON reports (each embeds the resolved config) and the small CSV tables
/// that go with them.

#include "fracvi/config.hpp"

#include <string>
#include <vector>

namespace fracvi {

Json solve_report_json(const SolveReport& report, const Json& config);
Json sweep_report_json(const SweepReport& report, const Verdict& verdict, const Json& config);
Json qvi_report_json(const QviReport& report, const Json& config);
Json poincare_report_json(const std::vector<PoincareReport>& rows, const Json& config);

/// "k,energy"
std::string energy_trace_csv(const SolveReport& report);
/// "k,residual,inner_iters,inner_converged"
std::string qvi_trace_csv(const QviReport& report);
/// PoincareReport::csv_header() and one row per order.
std::string poincare_csv(const std::vector<PoincareReport>& rows);

}  // namespace fracvi
