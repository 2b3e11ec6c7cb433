#include "fedtest/gradcheck.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace fedtest {

Vector finite_difference_gradient(const ModelParams& model, const Dataset& batch, double h) {
    Vector g(model.theta.size());
    ModelParams probe = model;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        const Scalar orig = probe.theta[i];
        probe.theta[i] = orig + h;
        const double up = mean_loss(probe, batch);
        probe.theta[i] = orig - h;
        const double down = mean_loss(probe, batch);
        probe.theta[i] = orig;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

double max_relative_error(const Vector& analytic, const Vector& numeric, double floor) {
    if (analytic.size() != numeric.size()) throw InvalidArgument("gradient length mismatch");
    double worst = 0.0;
    for (Eigen::Index i = 0; i < analytic.size(); ++i) {
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
        worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
    }
    return worst;
}

std::vector<GradCheckCase> run_gradcheck(std::uint64_t seed, int cases, double h) {
    constexpr std::array kActivations{Activation::tanh, Activation::sigmoid, Activation::relu};
    Rng rng(seed);
    std::uniform_int_distribution<int> in_dim(1, 6), hidden(1, 5), classes(2, 4), batch(1, 8), depth(0, 1);
    std::normal_distribution<Scalar> normal(0.0, 1.0);

    std::vector<GradCheckCase> out;
    for (int c = 0; c < cases; ++c) {
        Architecture arch;
        arch.activation = kActivations[static_cast<std::size_t>(c) % kActivations.size()];
        arch.layer_sizes.push_back(in_dim(rng));
        if (depth(rng) == 1) arch.layer_sizes.push_back(hidden(rng));
        arch.layer_sizes.push_back(classes(rng));

        ModelParams model = init_model(arch, rng());
        for (Eigen::Index i = 0; i < model.theta.size(); ++i) model.theta[i] += 0.1 * normal(rng);

        Dataset data;
        data.num_classes = arch.num_classes();
        const int n = batch(rng);
        data.features.resize(n, arch.input_dim());
        for (Eigen::Index r = 0; r < data.features.rows(); ++r)
            for (Eigen::Index j = 0; j < data.features.cols(); ++j) data.features(r, j) = normal(rng);
        std::uniform_int_distribution<int> label(0, data.num_classes - 1);
        for (int r = 0; r < n; ++r) data.labels.push_back(label(rng));

        const Vector analytic = loss_gradient(model, data);
        const Vector numeric = finite_difference_gradient(model, data, h);
        out.push_back({arch, static_cast<std::size_t>(n), max_relative_error(analytic, numeric)});
    }
    return out;
}

}  // namespace fedtest
