#pragma once

/**
 * @file config.hpp
 * @brief JSON problem and experiment files for the fracvi command.
 *
 * Every parser fills defaults, validates everything it can, and throws a
 * ConfigError listing all problems, each prefixed with the offending key.
 * Unknown keys are errors. The `resolved` member of every setup echoes the
 * input with all defaults filled in, so reports can embed it.
 *
 * Field values are a number, an expression string over x1..xd, or an array
 * of N^d samples in node order.
 */

#include "fracvi/qvi.hpp"
#include "fracvi/stability.hpp"
#include "fracvi/vi_solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace fracvi {

using Json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> errors);
    const std::vector<std::string>& errors() const noexcept { return errors_; }

private:
    std::vector<std::string> errors_;
};

/// Reads and parses a JSON file; unreadable or malformed files raise ConfigError.
Json load_json(const std::string& path);

struct SolveSetup {
    Json resolved;
    TorusGrid grid;
    DomainMask mask;
    double s = 0.5;
    Coefficients coeffs;
    DualDatum F;
    ConstraintSet K;
    SolverConfig solver;
    std::uint64_t seed = 0;
    /// Exit-code assertion: converged and KKT max <= kkt_max.
    double kkt_max = 1e-6;
};

struct SweepSetup {
    Json resolved;
    SweepSpec spec;
    SolverConfig solver;
    double tol_factor = 10.0;
};

struct QviSetup {
    Json resolved;
    std::variant<ObstacleQviSpec, GradientQviSpec> spec;
    QviConfig config;
};

struct PoincareSetup {
    Json resolved;
    DomainMask mask;
    std::vector<double> orders;
    PoincareOptions options;
};

SolveSetup parse_solve_config(const Json& doc);
SweepSetup parse_sweep_config(const Json& doc);
QviSetup parse_qvi_config(const Json& doc);
PoincareSetup parse_poincare_config(const Json& doc);

/// Samples a field value (number, expression over x1..xd, or sample array).
/// Throws ConfigError naming `key`.
ScalarField field_from_json(const Json& value, const TorusGrid& grid, const std::string& key);

}  // namespace fracvi
