#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "fedtest/learner.hpp"

namespace fedtest {

/// How a lying tester rewrites its accuracy reports.
enum class LiePolicy { invert, constant_high, random };

struct Behavior {
    enum class Kind { honest, random_weights, lying_tester };

    Kind kind = Kind::honest;
    double noise_scale = 0.0;            // random_weights
    LiePolicy lie_policy = LiePolicy::invert;  // lying_tester

    static Behavior honest() { return {}; }
    static Behavior random_weights(double scale) { return {Kind::random_weights, scale, LiePolicy::invert}; }
    static Behavior lying_tester(LiePolicy p) { return {Kind::lying_tester, 0.0, p}; }

    [[nodiscard]] bool is_malicious() const { return kind != Kind::honest; }

    bool operator==(const Behavior&) const = default;
};

void validate(const Behavior& b);

std::string_view to_string(Behavior::Kind k);
Behavior::Kind parse_behavior_kind(std::string_view name);
std::string_view to_string(LiePolicy p);
LiePolicy parse_lie_policy(std::string_view name);

/// Parameters drawn i.i.d. from N(0, scale^2).
ModelParams malicious_update(const Architecture& arch, double scale, std::uint64_t seed);

/// invert: 1 - a; constant_high: 1; random: U[0,1] from `seed`.
std::vector<double> lying_report(std::span<const double> true_accuracies, LiePolicy policy, std::uint64_t seed);

}  // namespace fedtest
