#pragma once

/**
 * @file acceptance.hpp
 * @brief The numbered acceptance criteria, runnable one at a time.
 *
 * Shared by the `fracvi verify` command and the acceptance test binary.
 * Each criterion returns a pass flag plus the measured numbers, so a
 * failure says by how much.
 */

#include <string>
#include <vector>

namespace fracvi {

inline constexpr int kCriterionCount = 14;

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;

    /// "[PASS] 07 unconstrained-closed-form: ..." style line.
    std::string line() const;
};

/// Short kebab-case name of criterion `id` (1-based).
std::string criterion_name(int id);

/// Exceptions inside a criterion are caught and reported as failures.
CriterionResult run_criterion(int id);

/// Criterion ids of a suite: spectral, spaces, vi_solver, stability, qvi,
/// cli or all. Throws std::invalid_argument for an unknown name.
std::vector<int> suite_criteria(const std::string& suite);

}  // namespace fracvi
