#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fedtest/common.hpp"

namespace fedtest {

/// Labeled feature vectors; one sample per row.
struct Dataset {
    RowMatrix features;      // num_samples x dim
    std::vector<int> labels; // in [0, num_classes)
    int num_classes = 0;

    [[nodiscard]] std::size_t size() const { return labels.size(); }
    [[nodiscard]] Eigen::Index dim() const { return features.cols(); }

    bool operator==(const Dataset&) const = default;
};

/// Throws InvalidArgument if the dataset breaks its invariants
/// (label range, finiteness, row/label count agreement, non-empty).
void validate(const Dataset& ds);

/// Copy of the rows named by `indices`, in that order.
Dataset subset(const Dataset& ds, std::span<const std::size_t> indices);

/// Indices of `ds` grouped by label.
std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& ds);

// ---------------------------------------------------------------------------
// IDX files
// ---------------------------------------------------------------------------

class IdxError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Load an IDX image/label pair. Pixels are scaled to [0,1]; the class count
/// is 1 + the largest label present.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);

/// Write raw IDX files. `pixels` is count*rows*cols bytes, row-major.
void write_idx_images(const std::filesystem::path& path, std::span<const std::uint8_t> pixels,
                      std::uint32_t count, std::uint32_t rows, std::uint32_t cols);
void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

/// Gaussian blobs: class c is drawn around its own mean (standard-normal
/// coordinates), isotropic noise with standard deviation `spread`.
/// Samples are emitted class by class.
Dataset generate_synthetic(int num_classes, int dim, int per_class, double spread,
                           std::uint64_t seed);

// ---------------------------------------------------------------------------
// Partitioning
// ---------------------------------------------------------------------------

struct Partition {
    std::vector<std::vector<std::size_t>> shards;
    std::uint64_t seed = 0;

    bool operator==(const Partition&) const = default;
};

class PartitionExhausted : public std::runtime_error {
public:
    PartitionExhausted(int label, std::size_t requested, std::size_t available);
    int label;
};

struct IntRange {
    int min = 1;
    int max = 1;
    bool operator==(const IntRange&) const = default;
};

/// Non-IID label-skew partition over the samples named by `pool` (all of
/// `ds` when empty). Client i draws k_i ~ U{classes.min..classes.max}
/// distinct classes, then U{samples.min..samples.max} unused samples of each.
/// Indices in the shards refer to `ds`.
Partition partition_non_iid(const Dataset& ds, int num_clients, IntRange classes,
                            IntRange samples, std::uint64_t seed,
                            std::span<const std::size_t> pool = {});

/// 64-bit FNV-1a over the shard contents, for auditing shared partitions.
std::uint64_t partition_hash(const Partition& p);

/// Stratified split of `pool` into (taken, rest): round(fraction * n_c)
/// samples of each class are moved to `taken`. Both halves are sorted.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
stratified_split(const Dataset& ds, std::span<const std::size_t> pool, double fraction,
                 std::uint64_t seed);

}  // namespace fedtest
