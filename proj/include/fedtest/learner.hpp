#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fedtest/common.hpp"
#include "fedtest/data.hpp"

namespace fedtest {

enum class Activation { relu, tanh, sigmoid };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

/// Fully connected network shape: [input_dim, hidden..., num_classes].
struct Architecture {
    std::vector<int> layer_sizes;
    Activation activation = Activation::relu;

    [[nodiscard]] int input_dim() const { return layer_sizes.front(); }
    [[nodiscard]] int num_classes() const { return layer_sizes.back(); }
    [[nodiscard]] std::size_t num_layers() const { return layer_sizes.size() - 1; }
    /// Length of the flat parameter vector.
    [[nodiscard]] Eigen::Index num_params() const;

    bool operator==(const Architecture&) const = default;
};

void validate(const Architecture& arch);

/// Flat parameters. Layout, layer by layer: the weight matrix
/// (out x in, column-major) followed by the bias vector (out).
struct ModelParams {
    Architecture arch;
    Vector theta;

    bool operator==(const ModelParams& o) const {
        return arch == o.arch && theta.size() == o.theta.size() && theta == o.theta;
    }
};

struct TrainConfig {
    int epochs = 1;
    int batch_size = 32;
    double learning_rate = 0.05;
    std::uint64_t seed = 0;

    bool operator==(const TrainConfig&) const = default;
};

void validate(const TrainConfig& cfg);

/// Raised when a training step produces a non-finite loss.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(std::size_t step);
    DivergenceError(std::size_t step, std::string what);
    std::size_t step;
};

struct Evaluation {
    double accuracy = 0.0;
    double loss = 0.0;
};

/// Weights ~ N(0, 2/fan_in) for relu, N(0, 1/fan_in) otherwise; biases zero.
ModelParams init_model(const Architecture& arch, std::uint64_t seed);

/// Class probabilities for a single feature vector.
Vector forward(const ModelParams& model, const Eigen::Ref<const Vector>& x);

/// Class probabilities for every row of `x` (rows x num_classes).
RowMatrix forward_batch(const ModelParams& model, const Eigen::Ref<const RowMatrix>& x);

/// Gradient of the mean cross-entropy over `batch` with respect to theta.
Vector loss_gradient(const ModelParams& model, const Dataset& batch);

/// Mean cross-entropy over `data`.
double mean_loss(const ModelParams& model, const Dataset& data);

/// Mini-batch gradient descent: epochs x ceil(n / batch_size) steps on a
/// per-epoch seeded shuffle. The input model is not modified.
ModelParams local_train(const ModelParams& model, const Dataset& shard, const TrainConfig& cfg);

/// Argmax accuracy (ties go to the lowest class index) and mean cross-entropy.
Evaluation evaluate(const ModelParams& model, const Dataset& data);

/// Index of the largest entry, lowest index on ties.
Eigen::Index argmax(const Eigen::Ref<const Vector>& v);

// Checkpoint format: "FTMP" magic, u32 layer count, u32 activation, u32 layer
// sizes, then theta as float32; all little-endian.
void write_model(std::ostream& out, const ModelParams& model);
ModelParams read_model(std::istream& in);
void save_model(const std::filesystem::path& path, const ModelParams& model);
ModelParams load_model(const std::filesystem::path& path);

/// Serialized payload size of one model's parameters (float32 per entry).
std::size_t model_payload_bytes(const Architecture& arch);

}  // namespace fedtest
