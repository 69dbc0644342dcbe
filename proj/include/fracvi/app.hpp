#pragma once

/**
 * @file app.hpp
 * @brief Command runners behind the fracvi executable.
 *
 * Each runner takes a parsed JSON document, writes its CSV and JSON outputs
 * into `out_dir` (created if needed) and returns exit code 0 when every
 * enabled assertion holds and 1 otherwise. Config problems surface as
 * ConfigError before anything is written; the caller maps them to exit code 2.
 */

#include "fracvi/config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace fracvi {

struct CommandOutcome {
    int exit_code = 0;
    std::string summary;
    std::vector<std::filesystem::path> files;
};

/// solution.csv, energy.csv, report.json. Asserts convergence and KKT max <= solver.kkt_max.
CommandOutcome run_solve(const Json& doc, const std::filesystem::path& out_dir);
/// sweep.csv, sigma_solution.csv, report.json. Asserts the convergence verdict.
CommandOutcome run_sweep(const Json& doc, const std::filesystem::path& out_dir);
/// solution.csv, constraint.csv, trace.csv, report.json. Asserts convergence.
CommandOutcome run_qvi(const Json& doc, const std::filesystem::path& out_dir);
/// poincare.csv, report.json. Asserts every order converged.
CommandOutcome run_poincare(const Json& doc, const std::filesystem::path& out_dir);

/// Writes text to a file, replacing it.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace fracvi
