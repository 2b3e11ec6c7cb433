#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fedtest/adversary.hpp"
#include "fedtest/aggregation.hpp"
#include "fedtest/data.hpp"
#include "fedtest/learner.hpp"
#include "fedtest/scheduler.hpp"

namespace fedtest {

enum class Method { fedavg, accuracy_based, fedtest };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

struct DataConfig {
    enum class Source { synthetic, idx };

    Source source = Source::synthetic;
    // synthetic
    int classes = 10;
    int dim = 20;
    int per_class = 100;
    double spread = 1.0;
    // idx
    std::filesystem::path images;
    std::filesystem::path labels;
    std::size_t limit = 0;  // 0 = every sample in the files
    // carved from the master dataset before partitioning
    double eval_fraction = 0.2;
    double server_test_fraction = 0.1;

    bool operator==(const DataConfig&) const = default;
};

struct PartitionConfig {
    enum class Mode { non_iid, identical };

    Mode mode = Mode::non_iid;
    IntRange classes{1, 3};
    IntRange samples{10, 30};

    bool operator==(const PartitionConfig&) const = default;
};

struct AdversaryConfig {
    Behavior::Kind kind = Behavior::Kind::random_weights;
    double noise_scale = 0.0;  // 0 = match the first layer's init scale
    LiePolicy lie_policy = LiePolicy::invert;
    /// Explicit malicious ids; empty = the last M ids.
    std::vector<std::size_t> ids;

    bool operator==(const AdversaryConfig&) const = default;
};

struct SimConfig {
    Method method = Method::fedtest;
    std::size_t clients = 20;    // N
    std::size_t testers = 0;     // K; 0 = ceil(N / 5)
    std::size_t malicious = 0;   // M
    std::size_t rounds = 30;
    std::vector<int> hidden{32};
    Activation activation = Activation::relu;
    TrainConfig train;           // train.seed is unused; per-client seeds derive from `seed`
    bool shared_train_seed = false;
    double beta = 0.5;
    double power = 4.0;
    TesterPolicy tester_policy = TesterPolicy::round_robin;
    bool exclude_malicious_testers = true;
    std::size_t report_bytes = 8;
    DataConfig data;
    PartitionConfig partition;
    AdversaryConfig adversary;
    std::uint64_t seed = 1;
    int threads = 1;

    [[nodiscard]] std::size_t num_testers() const;

    bool operator==(const SimConfig&) const = default;
};

/// Throws InvalidArgument naming the violated constraint.
void validate(const SimConfig& cfg);

/// Everything fixed for the whole run: data splits, shards, roles.
struct SimContext {
    Dataset master;
    std::vector<std::size_t> eval_indices;
    std::vector<std::size_t> server_test_indices;
    Partition partition;
    Dataset eval_set;
    Dataset server_test_set;
    std::vector<Dataset> shards;
    std::vector<Behavior> behaviors;
    std::vector<std::size_t> tester_pool;  // ids eligible to test
    Architecture arch;
};

/// Mutable protocol state between rounds.
struct SimState {
    std::size_t round = 0;
    ModelParams global;
    ScoreBoard board;
    std::vector<std::size_t> testers;  // this round's testers (fedtest)
};

struct RoundReport {
    std::size_t round = 0;
    Method method = Method::fedtest;
    std::vector<std::size_t> testers;
    std::vector<std::size_t> tested;   // non-tester ids, column order of acc_matrix
    Matrix acc_matrix;                 // testers x tested (as reported)
    Vector scores;
    Vector weights;
    bool weight_fallback = false;
    double global_accuracy = 0.0;
    double global_loss = 0.0;
    std::size_t bytes_up = 0;
    std::size_t bytes_down = 0;
};

/// Divergence inside a client's local training, tagged with where it happened.
class RoundDivergence : public DivergenceError {
public:
    RoundDivergence(const DivergenceError& inner, std::size_t round, std::size_t client);
    std::size_t round;
    std::size_t client;
};

Dataset load_master_dataset(const DataConfig& cfg, std::uint64_t seed);

SimContext prepare(const SimConfig& cfg);
SimContext prepare(const SimConfig& cfg, Dataset master);

SimState initial_state(const SimContext& ctx, const SimConfig& cfg);

/// One protocol round: local updates, scoring, aggregation, broadcast and
/// selection of the next round's testers.
std::pair<SimState, RoundReport> run_round(const SimContext& ctx, const SimState& state, const SimConfig& cfg);

using RoundObserver = std::function<void(const SimState& after, const RoundReport&)>;

std::vector<RoundReport> run_simulation(const SimConfig& cfg);
std::vector<RoundReport> run_simulation(const SimContext& ctx, const SimConfig& cfg,
                                        const RoundObserver& observer = {});

/// First round whose global accuracy reaches `target`.
std::optional<std::size_t> rounds_to_target(const std::vector<RoundReport>& reports, double target);

/// Header plus one row per round; numbers in shortest round-trip form.
void write_round_csv(std::ostream& out, const std::vector<RoundReport>& reports, std::size_t num_clients);

}  // namespace fedtest
