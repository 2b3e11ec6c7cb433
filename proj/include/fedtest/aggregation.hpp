#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fedtest/common.hpp"
#include "fedtest/learner.hpp"

namespace fedtest {

/// Convex combination weights, one per contributing client.
struct AggregationWeights {
    Vector w;
    /// Set when the inputs carried no signal and uniform weights were substituted.
    bool fallback = false;
};

/// theta_out = sum_i w_i * theta_i.
///
/// Accumulated as theta_0 + sum_i w_i * (theta_i - theta_0), so a set of
/// identical models aggregates to that model bit for bit.
ModelParams weighted_aggregate(std::span<const ModelParams> models, const AggregationWeights& weights);

/// w_i = n_i / sum_j n_j.
AggregationWeights fedavg_weights(std::span<const std::size_t> sample_counts);

/// w_i = a_i / sum_j a_j; uniform with `fallback` set when every a_i is zero.
AggregationWeights accuracy_weights(std::span<const double> server_accuracies);

/// Per-client smoothed accuracy.
struct ScoreBoard {
    Vector scores;
    double beta = 0.5;
    double power = 4.0;

    /// Every client starts at `initial` (chance level 1/C by default).
    static ScoreBoard uniform(std::size_t num_clients, double initial, double beta, double power);
};

void validate(const ScoreBoard& board);

/// Exponential moving average: s_i <- (1 - beta) s_i + beta a_i for clients
/// measured this round; clients without a measurement keep their score.
ScoreBoard update_scores(const ScoreBoard& board, std::span<const std::optional<double>> round_accuracies);

/// w_i = s_i^p / sum_{j in participants} s_j^p, one weight per participant in
/// the given order. Uniform with `fallback` set when every s_j^p is zero.
AggregationWeights fedtest_weights(const ScoreBoard& board, std::span<const std::size_t> participants);

/// Mean of the present entries per column: reports[t][m] is tester t's
/// accuracy for model m. Columns with no report yield nullopt.
std::vector<std::optional<double>>
fuse_reports(std::span<const std::vector<std::optional<double>>> reports, std::size_t num_models);

}  // namespace fedtest
