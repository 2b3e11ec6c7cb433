#include "fedtest/aggregation.hpp"

#include <cmath>
#include <string>

namespace fedtest {

namespace {

AggregationWeights uniform_weights(std::size_t n, bool fallback) {
    return {Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n)), fallback};
}

}  // namespace

ModelParams weighted_aggregate(std::span<const ModelParams> models, const AggregationWeights& weights) {
    if (models.empty()) throw InvalidArgument("nothing to aggregate");
    if (static_cast<Eigen::Index>(models.size()) != weights.w.size())
        throw InvalidArgument("got " + std::to_string(models.size()) + " models but " +
                              std::to_string(weights.w.size()) + " weights");
    const ModelParams& ref = models.front();
    for (const auto& m : models) {
        if (m.arch != ref.arch) throw InvalidArgument("cannot aggregate models with different architectures");
        if (m.theta.size() != ref.theta.size()) throw InvalidArgument("theta length mismatch");
    }
    if ((weights.w.array() < 0.0).any() || std::abs(weights.w.sum() - 1.0) > 1e-9)
        throw InvalidArgument("aggregation weights must be nonnegative and sum to 1");
    ModelParams out = ref;
    for (std::size_t i = 1; i < models.size(); ++i)
        out.theta += weights.w[static_cast<Eigen::Index>(i)] * (models[i].theta - ref.theta);
    return out;
}

AggregationWeights fedavg_weights(std::span<const std::size_t> sample_counts) {
    if (sample_counts.empty()) throw InvalidArgument("fedavg_weights: no clients");
    Vector w(static_cast<Eigen::Index>(sample_counts.size()));
    double total = 0.0;
    for (std::size_t i = 0; i < sample_counts.size(); ++i) {
        if (sample_counts[i] == 0) throw InvalidArgument("fedavg_weights: sample counts must be >= 1");
        w[static_cast<Eigen::Index>(i)] = static_cast<double>(sample_counts[i]);
        total += w[static_cast<Eigen::Index>(i)];
    }
    return {w / total, false};
}

AggregationWeights accuracy_weights(std::span<const double> server_accuracies) {
    if (server_accuracies.empty()) throw InvalidArgument("accuracy_weights: no clients");
    Vector w(static_cast<Eigen::Index>(server_accuracies.size()));
    for (std::size_t i = 0; i < server_accuracies.size(); ++i) {
        const double a = server_accuracies[i];
        if (!(a >= 0.0 && a <= 1.0)) throw InvalidArgument("accuracy " + std::to_string(a) + " outside [0,1]");
        w[static_cast<Eigen::Index>(i)] = a;
    }
    const double total = w.sum();
    if (total <= 0.0) return uniform_weights(server_accuracies.size(), true);
    return {w / total, false};
}

ScoreBoard ScoreBoard::uniform(std::size_t num_clients, double initial, double beta, double power) {
    ScoreBoard b{Vector::Constant(static_cast<Eigen::Index>(num_clients), initial), beta, power};
    validate(b);
    return b;
}

void validate(const ScoreBoard& board) {
    if (!(board.beta > 0.0 && board.beta <= 1.0)) throw InvalidArgument("score beta must be in (0,1]");
    if (!(board.power > 0.0) || !std::isfinite(board.power)) throw InvalidArgument("score power must be > 0");
    if ((board.scores.array() < 0.0).any() || (board.scores.array() > 1.0).any() || !board.scores.allFinite())
        throw InvalidArgument("scores must lie in [0,1]");
}

ScoreBoard update_scores(const ScoreBoard& board, std::span<const std::optional<double>> round_accuracies) {
    validate(board);
    if (static_cast<Eigen::Index>(round_accuracies.size()) != board.scores.size())
        throw InvalidArgument("update_scores: expected " + std::to_string(board.scores.size()) +
                              " accuracies, got " + std::to_string(round_accuracies.size()));
    ScoreBoard next = board;
    for (std::size_t i = 0; i < round_accuracies.size(); ++i) {
        if (!round_accuracies[i]) continue;
        const double a = *round_accuracies[i];
        if (!(a >= 0.0 && a <= 1.0))
            throw InvalidArgument("accuracy " + std::to_string(a) + " for client " + std::to_string(i) +
                                  " outside [0,1]");
        auto& s = next.scores[static_cast<Eigen::Index>(i)];
        s = (1.0 - board.beta) * s + board.beta * a;
        // rounding can push a convex combination of 1.0s a hair above 1
        s = std::min(std::max(s, 0.0), 1.0);
    }
    return next;
}

AggregationWeights fedtest_weights(const ScoreBoard& board, std::span<const std::size_t> participants) {
    validate(board);
    if (participants.empty()) throw InvalidArgument("fedtest_weights: no participants");
    Vector w(static_cast<Eigen::Index>(participants.size()));
    for (std::size_t k = 0; k < participants.size(); ++k) {
        const auto i = participants[k];
        if (static_cast<Eigen::Index>(i) >= board.scores.size())
            throw InvalidArgument("participant " + std::to_string(i) + " has no score");
        w[static_cast<Eigen::Index>(k)] = std::pow(board.scores[static_cast<Eigen::Index>(i)], board.power);
    }
    const double total = w.sum();
    if (!(total > 0.0)) return uniform_weights(participants.size(), true);
    return {w / total, false};
}

std::vector<std::optional<double>>
fuse_reports(std::span<const std::vector<std::optional<double>>> reports, std::size_t num_models) {
    std::vector<std::optional<double>> fused(num_models);
    for (std::size_t m = 0; m < num_models; ++m) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& row : reports) {
            if (row.size() != num_models) throw InvalidArgument("report row has the wrong length");
            if (row[m]) {
                sum += *row[m];
                ++count;
            }
        }
        if (count > 0) fused[m] = sum / static_cast<double>(count);
    }
    return fused;
}

}  // namespace fedtest
