#include "fedtest/adversary.hpp"

#include <cmath>
#include <string>

namespace fedtest {

void validate(const Behavior& b) {
    if (b.kind == Behavior::Kind::random_weights && !(b.noise_scale > 0.0 && std::isfinite(b.noise_scale)))
        throw InvalidArgument("random_weights noise scale must be > 0");
}

std::string_view to_string(Behavior::Kind k) {
    switch (k) {
        case Behavior::Kind::honest: return "honest";
        case Behavior::Kind::random_weights: return "random_weights";
        case Behavior::Kind::lying_tester: return "lying_tester";
    }
    return "?";
}

Behavior::Kind parse_behavior_kind(std::string_view name) {
    if (name == "honest") return Behavior::Kind::honest;
    if (name == "random_weights") return Behavior::Kind::random_weights;
    if (name == "lying_tester") return Behavior::Kind::lying_tester;
    throw InvalidArgument("unknown behavior '" + std::string(name) + "'");
}

std::string_view to_string(LiePolicy p) {
    switch (p) {
        case LiePolicy::invert: return "invert";
        case LiePolicy::constant_high: return "constant_high";
        case LiePolicy::random: return "random";
    }
    return "?";
}

LiePolicy parse_lie_policy(std::string_view name) {
    if (name == "invert") return LiePolicy::invert;
    if (name == "constant_high") return LiePolicy::constant_high;
    if (name == "random") return LiePolicy::random;
    throw InvalidArgument("unknown lie policy '" + std::string(name) + "'");
}

ModelParams malicious_update(const Architecture& arch, double scale, std::uint64_t seed) {
    validate(arch);
    if (!(scale > 0.0)) throw InvalidArgument("malicious noise scale must be > 0");
    ModelParams m{arch, Vector(arch.num_params())};
    Rng rng(seed);
    std::normal_distribution<Scalar> normal(0.0, scale);
    for (Eigen::Index i = 0; i < m.theta.size(); ++i) m.theta[i] = normal(rng);
    return m;
}

std::vector<double> lying_report(std::span<const double> true_accuracies, LiePolicy policy, std::uint64_t seed) {
    std::vector<double> out;
    out.reserve(true_accuracies.size());
    Rng rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (double a : true_accuracies) {
        if (!(a >= 0.0 && a <= 1.0)) throw InvalidArgument("accuracy outside [0,1]");
        switch (policy) {
            case LiePolicy::invert: out.push_back(1.0 - a); break;
            case LiePolicy::constant_high: out.push_back(1.0); break;
            case LiePolicy::random: out.push_back(unit(rng)); break;
        }
    }
    return out;
}

}  // namespace fedtest
