#pragma once

// Randomized invariant checks shared by the unit suites and the acceptance runner.

#include <cstdint>
#include <string>
#include <vector>

namespace fedtest::testing {

struct PropertyResult {
    std::string name;
    int cases = 0;
    int failures = 0;
    std::string first_failure;

    [[nodiscard]] bool ok() const { return cases > 0 && failures == 0; }
};

PropertyResult weight_normalization(std::uint64_t seed, int cases);
PropertyResult permutation_equivariance(std::uint64_t seed, int cases);
PropertyResult fedtest_scale_invariance(std::uint64_t seed, int cases);
PropertyResult fedtest_sharpening(std::uint64_t seed, int cases);
PropertyResult partition_disjointness(std::uint64_t seed, int cases);
PropertyResult rotation_coverage(std::uint64_t seed, int cases);
PropertyResult score_range(std::uint64_t seed, int cases);

std::vector<PropertyResult> all_properties(std::uint64_t seed, int cases);

}  // namespace fedtest::testing
