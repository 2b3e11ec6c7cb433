#include "fedtest/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>

namespace fedtest {

void validate(const Dataset& ds) {
    if (ds.size() == 0) throw InvalidArgument("dataset is empty");
    if (static_cast<std::size_t>(ds.features.rows()) != ds.size())
        throw InvalidArgument("dataset has " + std::to_string(ds.features.rows()) +
                              " feature rows but " + std::to_string(ds.size()) + " labels");
    if (ds.num_classes < 1) throw InvalidArgument("dataset needs at least one class");
    for (int y : ds.labels)
        if (y < 0 || y >= ds.num_classes)
            throw InvalidArgument("label " + std::to_string(y) + " outside [0, " +
                                  std::to_string(ds.num_classes) + ")");
    if (!ds.features.allFinite()) throw InvalidArgument("dataset contains non-finite features");
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> indices) {
    Dataset out;
    out.num_classes = ds.num_classes;
    out.features.resize(static_cast<Eigen::Index>(indices.size()), ds.dim());
    out.labels.reserve(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto i = indices[r];
        if (i >= ds.size()) throw InvalidArgument("subset index out of range");
        out.features.row(static_cast<Eigen::Index>(r)) = ds.features.row(static_cast<Eigen::Index>(i));
        out.labels.push_back(ds.labels[i]);
    }
    return out;
}

std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& ds) {
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.num_classes));
    for (std::size_t i = 0; i < ds.size(); ++i)
        by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
    return by_class;
}

// ---------------------------------------------------------------------------
// IDX

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IdxError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& buf, std::size_t offset,
                        const std::filesystem::path& path) {
    if (buf.size() < offset + 4) throw IdxError(path.string() + ": truncated header");
    return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
           (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
    const std::array<char, 4> b{static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                                static_cast<char>(v >> 8), static_cast<char>(v)};
    out.write(b.data(), b.size());
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
    const auto img = read_all(images_path);
    const auto lab = read_all(labels_path);

    const auto img_magic = read_be32(img, 0, images_path);
    if (img_magic != kImagesMagic)
        throw IdxError(images_path.string() + ": bad magic number " + std::to_string(img_magic));
    const auto lab_magic = read_be32(lab, 0, labels_path);
    if (lab_magic != kLabelsMagic)
        throw IdxError(labels_path.string() + ": bad magic number " + std::to_string(lab_magic));

    const std::size_t count = read_be32(img, 4, images_path);
    const std::size_t rows = read_be32(img, 8, images_path);
    const std::size_t cols = read_be32(img, 12, images_path);
    const std::size_t label_count = read_be32(lab, 4, labels_path);
    if (count != label_count)
        throw IdxError("count mismatch: " + std::to_string(count) + " images vs " +
                       std::to_string(label_count) + " labels");
    if (count == 0) throw IdxError(images_path.string() + ": no samples");

    const std::size_t dim = rows * cols;
    if (img.size() < 16 + count * dim) throw IdxError(images_path.string() + ": truncated pixel data");
    if (lab.size() < 8 + count) throw IdxError(labels_path.string() + ": truncated label data");

    Dataset ds;
    ds.features.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
    ds.labels.resize(count);
    const std::uint8_t* px = img.data() + 16;
    for (std::size_t i = 0; i < count; ++i)
        for (std::size_t j = 0; j < dim; ++j)
            ds.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                static_cast<Scalar>(px[i * dim + j]) / 255.0;
    int max_label = 0;
    for (std::size_t i = 0; i < count; ++i) {
        ds.labels[i] = lab[8 + i];
        max_label = std::max(max_label, ds.labels[i]);
    }
    ds.num_classes = max_label + 1;
    return ds;
}

void write_idx_images(const std::filesystem::path& path, std::span<const std::uint8_t> pixels,
                      std::uint32_t count, std::uint32_t rows, std::uint32_t cols) {
    if (pixels.size() != std::size_t{count} * rows * cols)
        throw InvalidArgument("pixel buffer does not match count*rows*cols");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IdxError("cannot write " + path.string());
    put_be32(out, kImagesMagic);
    put_be32(out, count);
    put_be32(out, rows);
    put_be32(out, cols);
    out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IdxError("cannot write " + path.string());
    put_be32(out, kLabelsMagic);
    put_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

// ---------------------------------------------------------------------------
// Synthetic

Dataset generate_synthetic(int num_classes, int dim, int per_class, double spread,
                           std::uint64_t seed) {
    if (num_classes < 2) throw InvalidArgument("synthetic data needs at least 2 classes");
    if (dim < 1) throw InvalidArgument("synthetic dim must be >= 1");
    if (per_class < 1) throw InvalidArgument("per_class must be >= 1");
    if (!(spread > 0)) throw InvalidArgument("spread must be > 0");

    Rng rng(seed);
    std::normal_distribution<Scalar> normal(0.0, 1.0);

    Matrix means(num_classes, dim);
    for (Eigen::Index c = 0; c < means.rows(); ++c)
        for (Eigen::Index j = 0; j < means.cols(); ++j) means(c, j) = normal(rng);

    Dataset ds;
    ds.num_classes = num_classes;
    ds.features.resize(Eigen::Index{num_classes} * per_class, dim);
    ds.labels.reserve(static_cast<std::size_t>(num_classes) * per_class);
    Eigen::Index row = 0;
    for (int c = 0; c < num_classes; ++c) {
        for (int s = 0; s < per_class; ++s, ++row) {
            for (Eigen::Index j = 0; j < dim; ++j) ds.features(row, j) = means(c, j) + spread * normal(rng);
            ds.labels.push_back(c);
        }
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Partitioning

PartitionExhausted::PartitionExhausted(int label_, std::size_t requested, std::size_t available)
    : std::runtime_error("class " + std::to_string(label_) + " exhausted: requested " +
                         std::to_string(requested) + " samples, " + std::to_string(available) +
                         " left"),
      label(label_) {}

Partition partition_non_iid(const Dataset& ds, int num_clients, IntRange classes,
                            IntRange samples, std::uint64_t seed,
                            std::span<const std::size_t> pool) {
    if (num_clients < 1) throw InvalidArgument("partition needs at least one client");
    if (classes.min < 1 || classes.min > classes.max || classes.max > ds.num_classes)
        throw InvalidArgument("classes range must satisfy 1 <= min <= max <= " +
                              std::to_string(ds.num_classes));
    if (samples.min < 1 || samples.min > samples.max)
        throw InvalidArgument("samples range must satisfy 1 <= min <= max");

    // Per-class queues of unused indices, shuffled once.
    std::vector<std::vector<std::size_t>> available(static_cast<std::size_t>(ds.num_classes));
    if (pool.empty()) {
        for (std::size_t i = 0; i < ds.size(); ++i)
            available[static_cast<std::size_t>(ds.labels[i])].push_back(i);
    } else {
        for (auto i : pool) {
            if (i >= ds.size()) throw InvalidArgument("pool index out of range");
            available[static_cast<std::size_t>(ds.labels[i])].push_back(i);
        }
    }
    Rng rng(seed);
    for (auto& q : available) std::shuffle(q.begin(), q.end(), rng);

    std::vector<int> all_classes(static_cast<std::size_t>(ds.num_classes));
    std::iota(all_classes.begin(), all_classes.end(), 0);

    Partition part;
    part.seed = seed;
    part.shards.resize(static_cast<std::size_t>(num_clients));
    std::uniform_int_distribution<int> num_classes_dist(classes.min, classes.max);
    std::uniform_int_distribution<int> num_samples_dist(samples.min, samples.max);
    for (auto& shard : part.shards) {
        const int k = num_classes_dist(rng);
        std::vector<int> chosen;
        std::sample(all_classes.begin(), all_classes.end(), std::back_inserter(chosen), k, rng);
        for (int c : chosen) {
            const auto want = static_cast<std::size_t>(num_samples_dist(rng));
            auto& q = available[static_cast<std::size_t>(c)];
            if (q.size() < want) throw PartitionExhausted(c, want, q.size());
            shard.insert(shard.end(), q.end() - static_cast<std::ptrdiff_t>(want), q.end());
            q.resize(q.size() - want);
        }
    }
    return part;
}

std::uint64_t partition_hash(const Partition& p) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xff;
            h *= 0x100000001b3ull;
        }
    };
    mix(p.shards.size());
    for (const auto& s : p.shards) {
        mix(s.size());
        for (auto i : s) mix(i);
    }
    return h;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
stratified_split(const Dataset& ds, std::span<const std::size_t> pool, double fraction,
                 std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction < 1.0)) throw InvalidArgument("split fraction must be in [0,1)");
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.num_classes));
    for (auto i : pool) by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);

    Rng rng(seed);
    std::vector<std::size_t> taken, rest;
    for (auto& members : by_class) {
        std::shuffle(members.begin(), members.end(), rng);
        const auto n_take = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(members.size())));
        taken.insert(taken.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_take));
        rest.insert(rest.end(), members.begin() + static_cast<std::ptrdiff_t>(n_take), members.end());
    }
    std::sort(taken.begin(), taken.end());
    std::sort(rest.begin(), rest.end());
    return {std::move(taken), std::move(rest)};
}

}  // namespace fedtest
