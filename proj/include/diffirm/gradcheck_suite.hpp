#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace diffirm {

struct OpCheck {
    std::string name;
    double max_error = 0.0; // worst relative error over all trials and inputs
};

// Central-difference sweep over every differentiable primitive and every
// network (backbones, denoiser chain, mask net), each on `trials` seeded
// random instances. Passing means max_error < 1e-4 for every row.
std::vector<OpCheck> run_gradcheck_suite(int trials = 20, std::uint64_t seed = 1234);

bool gradcheck_suite_passed(const std::vector<OpCheck>& results, double tol = 1e-4);

} // namespace diffirm
