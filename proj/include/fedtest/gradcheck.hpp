#pragma once

#include <cstdint>
#include <vector>

#include "fedtest/learner.hpp"

namespace fedtest {

/// Central differences of mean_loss with step h, one parameter at a time.
Vector finite_difference_gradient(const ModelParams& model, const Dataset& batch, double h = 1e-5);

/// max_i |a_i - n_i| / max(|a_i|, |n_i|, floor)
double max_relative_error(const Vector& analytic, const Vector& numeric, double floor = 1e-6);

struct GradCheckCase {
    Architecture arch;
    std::size_t batch_size = 0;
    double max_rel_error = 0.0;
};

/// `cases` random small models (layer sizes <= [6,5,4], batch <= 8), cycling
/// through the activations.
std::vector<GradCheckCase> run_gradcheck(std::uint64_t seed, int cases = 10, double h = 1e-5);

}  // namespace fedtest
