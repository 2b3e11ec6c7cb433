#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "fedtest/data.hpp"
#include "support/properties.hpp"

using namespace fedtest;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("fedtest_data_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::vector<std::uint8_t> ramp_pixels(std::size_t n) {
    std::vector<std::uint8_t> px(n);
    for (std::size_t i = 0; i < n; ++i) px[i] = static_cast<std::uint8_t>((i * 37) % 256);
    return px;
}

}  // namespace

TEST_CASE("idx round trip reproduces the source arrays") {
    const auto dir = scratch_dir("roundtrip");
    const auto px = ramp_pixels(4 * 3 * 2);
    const std::vector<std::uint8_t> labels{3, 0, 2, 3};
    write_idx_images(dir / "img", px, 4, 3, 2);
    write_idx_labels(dir / "lab", labels);

    const Dataset ds = load_idx(dir / "img", dir / "lab");
    CHECK(ds.size() == 4);
    CHECK(ds.dim() == 6);
    CHECK(ds.num_classes == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(ds.labels[i] == labels[i]);
        for (Eigen::Index j = 0; j < 6; ++j)
            CHECK(ds.features(static_cast<Eigen::Index>(i), j) == static_cast<double>(px[i * 6 + static_cast<std::size_t>(j)]) / 255.0);
    }
    CHECK(ds.features.minCoeff() >= 0.0);
    CHECK(ds.features.maxCoeff() <= 1.0);
}

TEST_CASE("idx errors") {
    const auto dir = scratch_dir("errors");
    write_idx_images(dir / "img", ramp_pixels(4 * 4), 4, 2, 2);
    write_idx_labels(dir / "lab5", std::vector<std::uint8_t>{0, 1, 0, 1, 0});
    write_idx_labels(dir / "lab4", std::vector<std::uint8_t>{0, 1, 0, 1});

    SUBCASE("count mismatch") { CHECK_THROWS_AS(load_idx(dir / "img", dir / "lab5"), IdxError); }
    SUBCASE("bad magic") {
        // labels file where images are expected
        CHECK_THROWS_WITH_AS(load_idx(dir / "lab4", dir / "lab4"), doctest::Contains("bad magic"), IdxError);
    }
    SUBCASE("truncated pixels") {
        auto bytes = std::filesystem::file_size(dir / "img");
        std::filesystem::resize_file(dir / "img", bytes - 3);
        CHECK_THROWS_WITH_AS(load_idx(dir / "img", dir / "lab4"), doctest::Contains("truncated"), IdxError);
    }
    SUBCASE("truncated header") {
        std::ofstream(dir / "short", std::ios::binary) << "\x00\x00";
        CHECK_THROWS_AS(load_idx(dir / "short", dir / "lab4"), IdxError);
    }
    SUBCASE("missing file") { CHECK_THROWS_AS(load_idx(dir / "nope", dir / "lab4"), IdxError); }
}

TEST_CASE("bundled MNIST subset loads with its header count") {
    const std::filesystem::path root = FEDTEST_SOURCE_DIR;
    const Dataset ds = load_idx(root / "data/mnist-2k/images-idx3-ubyte", root / "data/mnist-2k/labels-idx1-ubyte");
    CHECK(ds.size() == 2000);
    CHECK(ds.dim() == 784);
    CHECK(ds.num_classes == 10);
    const auto by_class = indices_by_class(ds);
    for (const auto& c : by_class) CHECK(c.size() == 200);
    CHECK_NOTHROW(validate(ds));
}

TEST_CASE("generate_synthetic") {
    const Dataset a = generate_synthetic(2, 2, 3, 0.1, 7);
    CHECK(a.size() == 6);
    CHECK(a.labels == std::vector<int>{0, 0, 0, 1, 1, 1});
    CHECK(a == generate_synthetic(2, 2, 3, 0.1, 7));
    CHECK_FALSE(a == generate_synthetic(2, 2, 3, 0.1, 8));
    CHECK_THROWS_AS(generate_synthetic(1, 2, 3, 0.1, 7), InvalidArgument);
    CHECK_THROWS_AS(generate_synthetic(2, 2, 0, 0.1, 7), InvalidArgument);
    CHECK_THROWS_AS(generate_synthetic(2, 2, 3, 0.0, 7), InvalidArgument);
}

TEST_CASE("partition of one client taking everything is the whole dataset") {
    const Dataset ds = generate_synthetic(3, 2, 5, 0.5, 1);
    const Partition p = partition_non_iid(ds, 1, {3, 3}, {5, 5}, 11);
    REQUIRE(p.shards.size() == 1);
    std::set<std::size_t> got(p.shards[0].begin(), p.shards[0].end());
    CHECK(got.size() == ds.size());
    CHECK(*got.rbegin() == ds.size() - 1);
}

TEST_CASE("single-class shards have constant labels") {
    const Dataset ds = generate_synthetic(2, 2, 20, 0.5, 1);
    const Partition p = partition_non_iid(ds, 2, {1, 1}, {3, 8}, 42);
    for (const auto& shard : p.shards) {
        REQUIRE_FALSE(shard.empty());
        for (auto i : shard) CHECK(ds.labels[i] == ds.labels[shard.front()]);
    }
}

TEST_CASE("ten-client partition: sizes in range and pairwise disjoint") {
    const Dataset ds = generate_synthetic(10, 4, 150, 1.0, 5);
    const Partition p = partition_non_iid(ds, 10, {1, 4}, {10, 30}, 3);
    REQUIRE(p.shards.size() == 10);
    for (std::size_t i = 0; i < p.shards.size(); ++i) {
        CHECK(p.shards[i].size() >= 10);
        CHECK(p.shards[i].size() <= 120);
        for (std::size_t j = i + 1; j < p.shards.size(); ++j)
            for (auto a : p.shards[i])
                for (auto b : p.shards[j]) REQUIRE(a != b);
    }
}

TEST_CASE("label skew: fixed class count gives exactly that many labels") {
    const Dataset ds = generate_synthetic(6, 2, 40, 1.0, 2);
    for (int k = 1; k <= 3; ++k) {
        const Partition p = partition_non_iid(ds, 5, {k, k}, {2, 4}, 100 + k);
        for (const auto& shard : p.shards) {
            std::set<int> labels;
            for (auto i : shard) labels.insert(ds.labels[i]);
            CHECK(static_cast<int>(labels.size()) == k);
        }
    }
}

TEST_CASE("partition exhaustion names the class") {
    const Dataset ds = generate_synthetic(2, 2, 5, 0.5, 1);
    try {
        (void)partition_non_iid(ds, 4, {2, 2}, {3, 3}, 1);
        FAIL("expected exhaustion");
    } catch (const PartitionExhausted& e) {
        CHECK((e.label == 0 || e.label == 1));
        CHECK(std::string(e.what()).find("class " + std::to_string(e.label)) != std::string::npos);
    }
}

TEST_CASE("partition restricted to a pool stays inside it") {
    const Dataset ds = generate_synthetic(3, 2, 30, 0.5, 1);
    std::vector<std::size_t> all(ds.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto [held, pool] = stratified_split(ds, all, 0.3, 9);
    CHECK(held.size() == 27);
    const std::set<std::size_t> pool_set(pool.begin(), pool.end());
    const Partition p = partition_non_iid(ds, 4, {1, 2}, {2, 5}, 4, pool);
    for (const auto& s : p.shards)
        for (auto i : s) CHECK(pool_set.count(i) == 1);
}

TEST_CASE("partition invariants hold over randomized cases") {
    const auto r = testing::partition_disjointness(2024, 120);
    INFO(r.first_failure);
    CHECK(r.ok());
}
