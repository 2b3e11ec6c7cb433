#include "fedtest/learner.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>

namespace fedtest {

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::sigmoid: return "sigmoid";
    }
    return "?";
}

Activation parse_activation(std::string_view name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "sigmoid") return Activation::sigmoid;
    throw InvalidArgument("unknown activation '" + std::string(name) + "'");
}

Eigen::Index Architecture::num_params() const {
    Eigen::Index n = 0;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l)
        n += Eigen::Index{layer_sizes[l]} * layer_sizes[l + 1] + layer_sizes[l + 1];
    return n;
}

void validate(const Architecture& arch) {
    if (arch.layer_sizes.size() < 2) throw InvalidArgument("architecture needs at least 2 layer sizes");
    for (int s : arch.layer_sizes)
        if (s < 1) throw InvalidArgument("layer sizes must be >= 1");
}

void validate(const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw InvalidArgument("epochs must be >= 1");
    if (cfg.batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
    if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate))
        throw InvalidArgument("learning_rate must be finite and >= 0");
}

DivergenceError::DivergenceError(std::size_t step_)
    : DivergenceError(step_, "training diverged (non-finite loss) at step " + std::to_string(step_)) {}

DivergenceError::DivergenceError(std::size_t step_, std::string what)
    : std::runtime_error(std::move(what)), step(step_) {}

namespace {

struct Layer {
    Eigen::Map<const Matrix> weights;
    Eigen::Map<const Vector> bias;
};

Layer layer_view(const Architecture& arch, const Vector& theta, std::size_t l, Eigen::Index& offset) {
    const Eigen::Index in = arch.layer_sizes[l];
    const Eigen::Index out = arch.layer_sizes[l + 1];
    Layer layer{Eigen::Map<const Matrix>(theta.data() + offset, out, in),
                Eigen::Map<const Vector>(theta.data() + offset + out * in, out)};
    offset += out * in + out;
    return layer;
}

void check_params(const ModelParams& m) {
    if (m.theta.size() != m.arch.num_params())
        throw InvalidArgument("theta length " + std::to_string(m.theta.size()) +
                              " does not match architecture (" + std::to_string(m.arch.num_params()) + ")");
}

void check_input(const ModelParams& m, Eigen::Index dim) {
    check_params(m);
    if (dim != m.arch.input_dim())
        throw InvalidArgument("input dimension " + std::to_string(dim) + " does not match model input " +
                              std::to_string(m.arch.input_dim()));
}

void apply_activation(Activation a, Matrix& z) {
    switch (a) {
        case Activation::relu: z = z.cwiseMax(0.0); break;
        case Activation::tanh: z = z.array().tanh().matrix(); break;
        case Activation::sigmoid: z = (1.0 / (1.0 + (-z.array()).exp())).matrix(); break;
    }
}

// Derivative expressed through the activation output h = act(z).
void scale_by_derivative(Activation a, const Matrix& h, Matrix& delta) {
    switch (a) {
        case Activation::relu: delta.array() *= (h.array() > 0.0).cast<Scalar>(); break;
        case Activation::tanh: delta.array() *= 1.0 - h.array().square(); break;
        case Activation::sigmoid: delta.array() *= h.array() * (1.0 - h.array()); break;
    }
}

// Per layer input activations; the final entry holds the output logits.
std::vector<Matrix> forward_pass(const Architecture& arch, const Vector& theta,
                                 const Eigen::Ref<const RowMatrix>& x) {
    std::vector<Matrix> acts;
    acts.reserve(arch.num_layers() + 1);
    acts.emplace_back(x);
    Eigen::Index offset = 0;
    for (std::size_t l = 0; l < arch.num_layers(); ++l) {
        const Layer layer = layer_view(arch, theta, l, offset);
        Matrix z = acts.back() * layer.weights.transpose();
        z.rowwise() += layer.bias.transpose();
        if (l + 1 < arch.num_layers()) apply_activation(arch.activation, z);
        acts.push_back(std::move(z));
    }
    return acts;
}

// Row-wise log-softmax, stable.
Matrix log_softmax(const Matrix& logits) {
    const Vector row_max = logits.rowwise().maxCoeff();
    Matrix shifted = logits.colwise() - row_max;
    const Vector lse = shifted.array().exp().rowwise().sum().log().matrix();
    shifted.colwise() -= lse;
    return shifted;
}

struct LossGrad {
    double loss;
    Vector grad;
};

LossGrad loss_and_gradient(const Architecture& arch, const Vector& theta,
                           const Eigen::Ref<const RowMatrix>& x, std::span<const int> labels) {
    const auto n = static_cast<Eigen::Index>(labels.size());
    const auto acts = forward_pass(arch, theta, x);
    const Matrix logp = log_softmax(acts.back());

    double loss = 0.0;
    Matrix delta = logp.array().exp().matrix();  // probabilities
    for (Eigen::Index i = 0; i < n; ++i) {
        loss -= logp(i, labels[static_cast<std::size_t>(i)]);
        delta(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
    }
    loss /= static_cast<double>(n);
    delta /= static_cast<Scalar>(n);

    // Offsets of each layer's block in theta.
    std::vector<Eigen::Index> offsets(arch.num_layers());
    Eigen::Index off = 0;
    for (std::size_t l = 0; l < arch.num_layers(); ++l) {
        offsets[l] = off;
        off += Eigen::Index{arch.layer_sizes[l]} * arch.layer_sizes[l + 1] + arch.layer_sizes[l + 1];
    }

    Vector grad(theta.size());
    for (std::size_t l = arch.num_layers(); l-- > 0;) {
        const Eigen::Index in = arch.layer_sizes[l];
        const Eigen::Index out = arch.layer_sizes[l + 1];
        Eigen::Map<Matrix> g_w(grad.data() + offsets[l], out, in);
        Eigen::Map<Vector> g_b(grad.data() + offsets[l] + out * in, out);
        g_w.noalias() = delta.transpose() * acts[l];
        g_b = delta.colwise().sum().transpose();
        if (l > 0) {
            Eigen::Map<const Matrix> w(theta.data() + offsets[l], out, in);
            Matrix prev = delta * w;
            scale_by_derivative(arch.activation, acts[l], prev);
            delta = std::move(prev);
        }
    }
    return {loss, std::move(grad)};
}

RowMatrix gather_rows(const RowMatrix& x, std::span<const std::size_t> rows) {
    RowMatrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t r = 0; r < rows.size(); ++r)
        out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(rows[r]));
    return out;
}

}  // namespace

ModelParams init_model(const Architecture& arch, std::uint64_t seed) {
    validate(arch);
    ModelParams m{arch, Vector::Zero(arch.num_params())};
    Rng rng(seed);
    std::normal_distribution<Scalar> normal(0.0, 1.0);
    const double gain = arch.activation == Activation::relu ? 2.0 : 1.0;
    Eigen::Index offset = 0;
    for (std::size_t l = 0; l < arch.num_layers(); ++l) {
        const Eigen::Index in = arch.layer_sizes[l];
        const Eigen::Index out = arch.layer_sizes[l + 1];
        const double stddev = std::sqrt(gain / static_cast<double>(in));
        for (Eigen::Index k = 0; k < out * in; ++k) m.theta[offset + k] = stddev * normal(rng);
        offset += out * in + out;
    }
    return m;
}

RowMatrix forward_batch(const ModelParams& model, const Eigen::Ref<const RowMatrix>& x) {
    check_input(model, x.cols());
    const auto acts = forward_pass(model.arch, model.theta, x);
    return log_softmax(acts.back()).array().exp().matrix();
}

Vector forward(const ModelParams& model, const Eigen::Ref<const Vector>& x) {
    check_input(model, x.size());
    const RowMatrix row = x.transpose();
    return forward_batch(model, row).row(0).transpose();
}

Vector loss_gradient(const ModelParams& model, const Dataset& batch) {
    if (batch.size() == 0) throw InvalidArgument("gradient batch is empty");
    check_input(model, batch.dim());
    return loss_and_gradient(model.arch, model.theta, batch.features, batch.labels).grad;
}

double mean_loss(const ModelParams& model, const Dataset& data) {
    return evaluate(model, data).loss;
}

ModelParams local_train(const ModelParams& model, const Dataset& shard, const TrainConfig& cfg) {
    validate(cfg);
    if (shard.size() == 0) throw InvalidArgument("cannot train on an empty shard");
    check_input(model, shard.dim());

    ModelParams out = model;
    Rng rng(cfg.seed);
    std::vector<std::size_t> order(shard.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    std::vector<int> labels;
    std::size_t step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += batch, ++step) {
            const std::span<const std::size_t> rows(order.data() + start, std::min(batch, order.size() - start));
            const RowMatrix x = gather_rows(shard.features, rows);
            labels.clear();
            for (auto r : rows) labels.push_back(shard.labels[r]);
            const auto lg = loss_and_gradient(out.arch, out.theta, x, labels);
            if (!std::isfinite(lg.loss) || !lg.grad.allFinite()) throw DivergenceError(step);
            out.theta -= cfg.learning_rate * lg.grad;
        }
    }
    return out;
}

Eigen::Index argmax(const Eigen::Ref<const Vector>& v) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

Evaluation evaluate(const ModelParams& model, const Dataset& data) {
    if (data.size() == 0) throw InvalidArgument("cannot evaluate on an empty dataset");
    check_input(model, data.dim());
    const auto acts = forward_pass(model.arch, model.theta, data.features);
    const Matrix logp = log_softmax(acts.back());
    std::size_t correct = 0;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < logp.rows(); ++i) {
        const int y = data.labels[static_cast<std::size_t>(i)];
        // argmax on logits so that ties in the exact outputs are preserved
        if (argmax(acts.back().row(i).transpose()) == y) ++correct;
        loss -= logp(i, y);
    }
    const auto n = static_cast<double>(data.size());
    return {static_cast<double>(correct) / n, loss / n};
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr std::array<char, 4> kModelMagic{'F', 'T', 'M', 'P'};

void put_u32(std::ostream& out, std::uint32_t v) {
    const std::array<char, 4> b{static_cast<char>(v), static_cast<char>(v >> 8),
                                static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
    out.write(b.data(), b.size());
}

std::uint32_t get_u32(std::istream& in) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), b.size())) throw InvalidArgument("model file truncated");
    return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
           (std::uint32_t{b[3]} << 24);
}

}  // namespace

void write_model(std::ostream& out, const ModelParams& model) {
    check_params(model);
    out.write(kModelMagic.data(), kModelMagic.size());
    put_u32(out, static_cast<std::uint32_t>(model.arch.layer_sizes.size()));
    put_u32(out, static_cast<std::uint32_t>(model.arch.activation));
    for (int s : model.arch.layer_sizes) put_u32(out, static_cast<std::uint32_t>(s));
    for (Eigen::Index i = 0; i < model.theta.size(); ++i)
        put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(model.theta[i])));
}

ModelParams read_model(std::istream& in) {
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kModelMagic)
        throw InvalidArgument("not a model file (bad magic)");
    const auto layers = get_u32(in);
    const auto act = get_u32(in);
    if (act > static_cast<std::uint32_t>(Activation::sigmoid)) throw InvalidArgument("unknown activation code");
    ModelParams m;
    m.arch.activation = static_cast<Activation>(act);
    for (std::uint32_t l = 0; l < layers; ++l) m.arch.layer_sizes.push_back(static_cast<int>(get_u32(in)));
    validate(m.arch);
    m.theta.resize(m.arch.num_params());
    for (Eigen::Index i = 0; i < m.theta.size(); ++i) m.theta[i] = std::bit_cast<float>(get_u32(in));
    return m;
}

void save_model(const std::filesystem::path& path, const ModelParams& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    write_model(out, model);
}

ModelParams load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open " + path.string());
    return read_model(in);
}

std::size_t model_payload_bytes(const Architecture& arch) {
    return static_cast<std::size_t>(arch.num_params()) * sizeof(float);
}

}  // namespace fedtest
