#include <doctest.h>

#include <array>
#include <cmath>

#include "fedtest/aggregation.hpp"
#include "support/properties.hpp"

using namespace fedtest;

namespace {

ModelParams flat(std::initializer_list<double> values) {
    // A 1 -> 1 layer has exactly two parameters; wider vectors use 1 -> k.
    const int n = static_cast<int>(values.size());
    ModelParams m{Architecture{{1, n / 2}, Activation::relu}, Vector(n)};
    int i = 0;
    for (double v : values) m.theta[i++] = v;
    return m;
}

AggregationWeights weights(std::initializer_list<double> values) {
    AggregationWeights w;
    w.w.resize(static_cast<Eigen::Index>(values.size()));
    int i = 0;
    for (double v : values) w.w[i++] = v;
    return w;
}

}  // namespace

TEST_CASE("weighted_aggregate") {
    const std::array models{flat({1, 3}), flat({3, 5})};

    const auto mid = weighted_aggregate(models, weights({0.5, 0.5}));
    CHECK(mid.theta[0] == doctest::Approx(2.0));
    CHECK(mid.theta[1] == doctest::Approx(4.0));

    CHECK(weighted_aggregate(models, weights({1.0, 0.0})) == models[0]);
    CHECK(weighted_aggregate(models, weights({0.0, 1.0})) == models[1]);

    const auto m = flat({0.1, -0.7, 1e-3, 3.3});
    const std::array same{m, m, m};
    CHECK(weighted_aggregate(same, weights({0.2, 0.3, 0.5})) == m);

    CHECK_THROWS_AS(weighted_aggregate(models, weights({0.6, 0.6})), InvalidArgument);
    CHECK_THROWS_AS(weighted_aggregate(models, weights({1.5, -0.5})), InvalidArgument);
    CHECK_THROWS_AS(weighted_aggregate(models, weights({1.0})), InvalidArgument);
    const std::array mixed{flat({1, 3}), flat({1, 2, 3, 4})};
    CHECK_THROWS_AS(weighted_aggregate(mixed, weights({0.5, 0.5})), InvalidArgument);
}

TEST_CASE("fedavg_weights") {
    const std::array<std::size_t, 2> counts{10, 30};
    const auto w = fedavg_weights(counts);
    CHECK(w.w[0] == doctest::Approx(0.25));
    CHECK(w.w[1] == doctest::Approx(0.75));
    CHECK_FALSE(w.fallback);

    CHECK_THROWS_AS(fedavg_weights(std::span<const std::size_t>{}), InvalidArgument);
    const std::array<std::size_t, 2> with_zero{0, 4};
    CHECK_THROWS_AS(fedavg_weights(with_zero), InvalidArgument);
}

TEST_CASE("accuracy_weights") {
    const std::array acc{0.6, 0.2};
    const auto w = accuracy_weights(acc);
    CHECK(w.w[0] == doctest::Approx(0.75));
    CHECK(w.w[1] == doctest::Approx(0.25));

    const std::array zeros{0.0, 0.0};
    const auto fb = accuracy_weights(zeros);
    CHECK(fb.fallback);
    CHECK(fb.w[0] == 0.5);
    CHECK(fb.w[1] == 0.5);

    const std::array bad{0.5, 1.2};
    CHECK_THROWS_AS(accuracy_weights(bad), InvalidArgument);
}

TEST_CASE("update_scores") {
    auto board = ScoreBoard::uniform(3, 0.4, 0.5, 4.0);
    const std::array<std::optional<double>, 3> round{0.8, std::nullopt, 0.0};
    const auto next = update_scores(board, round);
    CHECK(next.scores[0] == doctest::Approx(0.6));
    CHECK(next.scores[1] == 0.4);
    CHECK(next.scores[2] == doctest::Approx(0.2));

    board.beta = 1.0;
    const auto replaced = update_scores(board, round);
    CHECK(replaced.scores[0] == 0.8);
    CHECK(replaced.scores[1] == 0.4);

    const std::array<std::optional<double>, 3> out_of_range{1.5, std::nullopt, 0.2};
    CHECK_THROWS_AS(update_scores(board, out_of_range), InvalidArgument);
    const std::array<std::optional<double>, 2> short_row{0.5, 0.5};
    CHECK_THROWS_AS(update_scores(board, short_row), InvalidArgument);
}

TEST_CASE("fedtest_weights") {
    ScoreBoard board{Vector(3), 0.5, 4.0};
    board.scores << 0.9, 0.3, 0.5;
    const std::array<std::size_t, 2> pair{0, 1};

    const auto sharp = fedtest_weights(board, pair);
    CHECK(sharp.w[0] == doctest::Approx(0.98780488).epsilon(1e-5));
    CHECK(sharp.w[1] == doctest::Approx(0.01219512).epsilon(1e-3));

    board.power = 1.0;
    const auto linear = fedtest_weights(board, pair);
    CHECK(linear.w[0] == doctest::Approx(0.75));
    CHECK(linear.w[1] == doctest::Approx(0.25));

    board.scores.setZero();
    const auto fb = fedtest_weights(board, pair);
    CHECK(fb.fallback);
    CHECK(fb.w[0] == 0.5);

    const std::array<std::size_t, 1> outside{7};
    CHECK_THROWS_AS(fedtest_weights(board, outside), InvalidArgument);
}

TEST_CASE("fuse_reports averages the present entries") {
    const std::vector<std::vector<std::optional<double>>> rows{
        {0.2, std::nullopt, std::nullopt},
        {0.4, 0.9, std::nullopt},
    };
    const auto fused = fuse_reports(rows, 3);
    CHECK(*fused[0] == doctest::Approx(0.3));
    CHECK(*fused[1] == 0.9);
    CHECK_FALSE(fused[2].has_value());
}

TEST_CASE("aggregation properties over randomized cases") {
    using namespace fedtest::testing;
    for (const auto& r : {weight_normalization(11, 200), permutation_equivariance(12, 200),
                          fedtest_scale_invariance(13, 200), fedtest_sharpening(14, 200), score_range(15, 200)}) {
        INFO(r.name << ": " << r.first_failure);
        CHECK(r.cases >= 100);
        CHECK(r.ok());
    }
}
