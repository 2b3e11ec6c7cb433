#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fedtest/config.hpp"

using namespace fedtest;

TEST_CASE("minimal config takes the documented defaults") {
    const auto spec = parse_config_text("seed = 7\n");
    REQUIRE(spec.runs.size() == 3);
    CHECK(spec.runs[0].method == Method::fedavg);
    CHECK(spec.runs[1].method == Method::accuracy_based);
    CHECK(spec.runs[2].method == Method::fedtest);
    const auto& b = spec.base();
    CHECK(b.seed == 7);
    CHECK(b.clients == 20);
    CHECK(b.num_testers() == 4);
    CHECK(b.malicious == 0);
    CHECK(b.rounds == 30);
    CHECK(b.beta == 0.5);
    CHECK(b.power == 4.0);
    CHECK(b.data.eval_fraction == 0.2);
    CHECK(b.data.server_test_fraction == 0.1);
    CHECK(b.tester_policy == TesterPolicy::round_robin);
    CHECK(spec.targets == std::vector<double>{0.5, 0.8, 0.9});
    CHECK(spec.output_dir.empty());
    for (const auto& r : spec.runs) {
        SimConfig same = r;
        same.method = b.method;
        CHECK(same == b);
    }
}

TEST_CASE("values and comments") {
    const auto spec = parse_config_text(R"(
# a comment line
methods = fedtest
clients = 8        # trailing comment
testers = 3
malicious = 2
model.hidden = 16, 8
model.activation = tanh
train.learning_rate = 0.1
scheduler.policy = random
adversary.kind = lying_tester
adversary.lie_policy = constant_high
adversary.ids = 1, 4
partition.classes_min = 2
partition.classes_max = 4
report.targets = 0.6
output.dir = results
)",
                                        "/tmp/base");
    REQUIRE(spec.runs.size() == 1);
    const auto& c = spec.base();
    CHECK(c.clients == 8);
    CHECK(c.num_testers() == 3);
    CHECK(c.hidden == std::vector<int>{16, 8});
    CHECK(c.activation == Activation::tanh);
    CHECK(c.train.learning_rate == 0.1);
    CHECK(c.tester_policy == TesterPolicy::random);
    CHECK(c.adversary.kind == Behavior::Kind::lying_tester);
    CHECK(c.adversary.lie_policy == LiePolicy::constant_high);
    CHECK(c.adversary.ids == std::vector<std::size_t>{1, 4});
    CHECK(c.partition.classes == IntRange{2, 4});
    CHECK(spec.targets == std::vector<double>{0.6});
    CHECK(spec.output_dir == std::filesystem::path("/tmp/base/results"));
    CHECK(parse_config_text("model.hidden = none\n").base().hidden.empty());
}

TEST_CASE("rejections name the problem") {
    CHECK_THROWS_WITH_AS(parse_config_text("clients = 5\ntesters = 5\n"), doctest::Contains("K < N"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("clients = 5\nmalicious = 5\n"), doctest::Contains("M must be < N"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("clients = 5\nclinets = 4\n"), doctest::Contains("line 2: 'clinets': unknown key"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("score.beta = 1.5\n"), doctest::Contains("line 1"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("rounds = many\n"), doctest::Contains("'rounds'"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("seed = 1\nseed = 2\n"), doctest::Contains("duplicate key"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("methods = fedavg, fedavg\n"), doctest::Contains("listed twice"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("just words\n"), doctest::Contains("key = value"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_config_text("data.source = idx\ndata.images = nowhere/images\ndata.labels = nowhere/labels\n", "/tmp"),
        doctest::Contains("dataset file not found"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("data.source = idx\n"), doctest::Contains("data.images"), ConfigError);
    CHECK_THROWS_AS(parse_config(std::filesystem::path("/nonexistent/x.cfg")), ConfigError);
}

TEST_CASE("only fedtest runs enforce K < N") {
    CHECK_NOTHROW(parse_config_text("methods = fedavg\nclients = 5\ntesters = 5\n"));
}

TEST_CASE("echo round trip") {
    const std::string text = R"(
methods = fedtest, fedavg
clients = 7
malicious = 1
model.hidden = 12, 6
train.epochs = 3
score.power = 2.5
data.spread = 0.75
adversary.noise_scale = 0.3
report.targets = 0.4, 0.7
output.dir = /tmp/out
)";
    const auto spec = parse_config_text(text);
    const auto echoed = echo_config(spec);
    CHECK(parse_config_text(echoed) == spec);
    CHECK(echo_config(parse_config_text(echoed)) == echoed);
    CHECK(echoed.find("score.beta = 0.5") != std::string::npos);
}

TEST_CASE("relative dataset paths resolve against the config file") {
    const auto dir = std::filesystem::temp_directory_path() / "fedtest-config-test";
    std::filesystem::create_directories(dir / "d");
    const auto root = std::filesystem::path(FEDTEST_SOURCE_DIR) / "data" / "mnist-2k";
    std::filesystem::copy_file(root / "labels-idx1-ubyte", dir / "d" / "labels", std::filesystem::copy_options::overwrite_existing);
    std::filesystem::copy_file(root / "images-idx3-ubyte", dir / "d" / "images", std::filesystem::copy_options::overwrite_existing);
    std::ofstream(dir / "exp.cfg") << "data.source = idx\ndata.images = d/images\ndata.labels = d/labels\n";
    const auto spec = parse_config(dir / "exp.cfg");
    CHECK(spec.base().data.images == dir / "d" / "images");
    std::filesystem::remove_all(dir);
}

TEST_CASE("override_seed touches every run") {
    auto spec = parse_config_text("seed = 3\n");
    override_seed(spec, 11);
    for (const auto& r : spec.runs) CHECK(r.seed == 11);
}
