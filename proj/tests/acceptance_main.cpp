// Usage: acceptance [id ...]   (no ids runs all criteria)
#include "fracvi/acceptance.hpp"

#include <cstdio>
#include <string>

int main(int argc, char** argv)
{
    std::vector<int> ids;
    try {
        for (int i = 1; i < argc; ++i)
            ids.push_back(std::stoi(argv[i]));
        if (ids.empty())
            ids = fracvi::suite_criteria("all");
        for (int id : ids)
            fracvi::criterion_name(id);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "acceptance: %s\n", e.what());
        return 2;
    }
    bool all = true;
    for (int id : ids) {
        const fracvi::CriterionResult r = fracvi::run_criterion(id);
        std::printf("%s (%.1fs)\n", r.line().c_str(), r.seconds);
        std::fflush(stdout);
        all = all && r.passed;
    }
    return all ? 0 : 1;
}
