// fracvi: command-line front end.
//
//   fracvi verify [--suite NAME]
//   fracvi solve|sweep|qvi|poincare CONFIG.json [-o DIR]
//
// Exit codes: 0 all assertions hold, 1 an assertion failed, 2 bad input.

#include "fracvi/acceptance.hpp"
#include "fracvi/app.hpp"
#include "fracvi/parallel.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

int verify(const std::string& suite)
{
    std::vector<int> ids;
    try {
        ids = fracvi::suite_criteria(suite);
    } catch (const std::exception& e) {
        std::cerr << "fracvi verify: " << e.what() << "\n";
        return 2;
    }
    std::vector<fracvi::CriterionResult> results(ids.size());
    fracvi::parallel_for(ids.size(), [&](std::size_t i) { results[i] = fracvi::run_criterion(ids[i]); });
    int failed = 0;
    for (const auto& r : results) {
        std::cout << r.line() << "\n";
        failed += r.passed ? 0 : 1;
    }
    std::cout << (results.size() - failed) << "/" << results.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}

int run_command(const std::string& name, const std::string& config, const std::string& out_dir)
{
    try {
        const fracvi::Json doc = fracvi::load_json(config);
        fracvi::CommandOutcome outcome;
        if (name == "solve")
            outcome = fracvi::run_solve(doc, out_dir);
        else if (name == "sweep")
            outcome = fracvi::run_sweep(doc, out_dir);
        else if (name == "qvi")
            outcome = fracvi::run_qvi(doc, out_dir);
        else
            outcome = fracvi::run_poincare(doc, out_dir);
        std::cout << outcome.summary << "\n";
        for (const auto& f : outcome.files)
            std::cout << "  wrote " << f.string() << "\n";
        return outcome.exit_code;
    } catch (const fracvi::ConfigError& e) {
        std::cerr << "fracvi " << name << ": invalid config " << config << "\n";
        for (const auto& msg : e.errors())
            std::cerr << "  " << msg << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "fracvi " << name << ": " << e.what() << "\n";
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Fractional Riesz variational inequalities on a periodic box"};
    app.require_subcommand(1);

    std::string suite = "all";
    auto* verify_cmd = app.add_subcommand("verify", "Run the numbered acceptance criteria");
    verify_cmd->add_option("--suite", suite, "spectral, spaces, vi_solver, stability, qvi, cli or all");

    std::string config, out_dir = "out";
    const std::pair<const char*, const char*> commands[] = {
        {"solve", "Solve one VI at a fixed order"},
        {"sweep", "Order sweep toward a limit order with convergence verdict"},
        {"qvi", "Quasi-variational inequality by damped Picard iteration"},
        {"poincare", "Best Poincare constants over a list of orders"},
    };
    std::vector<CLI::App*> subs;
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("config", config, "JSON config file")->required()->check(CLI::ExistingFile);
        sub->add_option("-o,--out", out_dir, "Output directory")->capture_default_str();
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (*verify_cmd)
        return verify(suite);
    for (auto* sub : subs)
        if (*sub)
            return run_command(sub->get_name(), config, out_dir);
    return 2;
}
