#include "fedtest/engine.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <numeric>
#include <ostream>
#include <thread>

namespace fedtest {

std::string_view to_string(Method m) {
    switch (m) {
        case Method::fedavg: return "fedavg";
        case Method::accuracy_based: return "accuracy_based";
        case Method::fedtest: return "fedtest";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    if (name == "fedavg") return Method::fedavg;
    if (name == "accuracy_based") return Method::accuracy_based;
    if (name == "fedtest") return Method::fedtest;
    throw InvalidArgument("unknown method '" + std::string(name) + "'");
}

std::size_t SimConfig::num_testers() const { return testers != 0 ? testers : (clients + 4) / 5; }

namespace {

std::vector<std::size_t> malicious_ids(const SimConfig& cfg) {
    if (!cfg.adversary.ids.empty()) return cfg.adversary.ids;
    std::vector<std::size_t> ids;
    for (std::size_t i = cfg.clients - cfg.malicious; i < cfg.clients; ++i) ids.push_back(i);
    return ids;
}

std::vector<Behavior> assign_behaviors(const SimConfig& cfg, const Architecture& arch) {
    std::vector<Behavior> behaviors(cfg.clients);
    double scale = cfg.adversary.noise_scale;
    if (scale == 0.0) {
        const double gain = arch.activation == Activation::relu ? 2.0 : 1.0;
        scale = std::sqrt(gain / arch.input_dim());
    }
    for (auto id : malicious_ids(cfg)) {
        switch (cfg.adversary.kind) {
            case Behavior::Kind::random_weights: behaviors[id] = Behavior::random_weights(scale); break;
            case Behavior::Kind::lying_tester: behaviors[id] = Behavior::lying_tester(cfg.adversary.lie_policy); break;
            case Behavior::Kind::honest: break;
        }
    }
    return behaviors;
}

std::vector<std::size_t> tester_pool(const SimConfig& cfg, const std::vector<Behavior>& behaviors) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < behaviors.size(); ++i)
        if (!cfg.exclude_malicious_testers || behaviors[i].kind != Behavior::Kind::random_weights)
            pool.push_back(i);
    return pool;
}

std::vector<std::size_t> testers_for_round(const SimContext& ctx, const SimConfig& cfg, std::size_t round) {
    if (cfg.method != Method::fedtest) return {};
    auto picks = select_testers(round, ctx.tester_pool.size(), cfg.num_testers(), cfg.tester_policy,
                                stream_seed(cfg.seed, Stream::testers));
    std::vector<std::size_t> ids;
    for (auto p : picks) ids.push_back(ctx.tester_pool[p]);
    std::sort(ids.begin(), ids.end());
    return ids;
}

// Runs fn(i) for i in [0, n); the first failure by index is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
    auto body = [&](std::size_t i) {
        try {
            fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    if (workers == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) body(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < std::min(workers, n); ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) body(i);
            });
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

void validate(const SimConfig& cfg) {
    auto fail = [](const std::string& msg) { throw InvalidArgument(msg); };
    if (cfg.clients < 1) fail("clients: N must be >= 1");
    if (cfg.malicious >= cfg.clients) fail("malicious: M must be < N (clients)");
    if (cfg.rounds < 1) fail("rounds: must be >= 1");
    if (cfg.method == Method::fedtest) {
        const auto k = cfg.num_testers();
        if (k < 1 || k >= cfg.clients) fail("testers: K must satisfy 1 <= K < N (clients)");
    }
    if (!cfg.adversary.ids.empty()) {
        if (cfg.adversary.ids.size() != cfg.malicious) fail("adversary.ids: must list exactly M ids");
        auto ids = cfg.adversary.ids;
        std::sort(ids.begin(), ids.end());
        if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) fail("adversary.ids: duplicate id");
        if (ids.back() >= cfg.clients) fail("adversary.ids: id out of range");
    }
    if (cfg.adversary.noise_scale < 0.0 || !std::isfinite(cfg.adversary.noise_scale))
        fail("adversary.noise_scale: must be >= 0");
    for (int h : cfg.hidden)
        if (h < 1) fail("model.hidden: layer sizes must be >= 1");
    validate(cfg.train);
    if (!(cfg.beta > 0.0 && cfg.beta <= 1.0)) fail("score.beta: must be in (0,1]");
    if (!(cfg.power > 0.0)) fail("score.power: must be > 0");
    if (!(cfg.data.eval_fraction > 0.0 && cfg.data.eval_fraction < 1.0))
        fail("data.eval_fraction: must be in (0,1)");
    if (!(cfg.data.server_test_fraction > 0.0 && cfg.data.server_test_fraction < 1.0))
        fail("data.server_test_fraction: must be in (0,1)");
    if (cfg.data.eval_fraction + cfg.data.server_test_fraction >= 1.0)
        fail("data: eval_fraction + server_test_fraction must be < 1");
    if (cfg.data.source == DataConfig::Source::idx && (cfg.data.images.empty() || cfg.data.labels.empty()))
        fail("data.images/data.labels: required when data.source = idx");
    if (cfg.data.source == DataConfig::Source::synthetic) {
        if (cfg.data.classes < 2) fail("data.classes: must be >= 2");
        if (cfg.data.dim < 1) fail("data.dim: must be >= 1");
        if (cfg.data.per_class < 1) fail("data.per_class: must be >= 1");
        if (!(cfg.data.spread > 0.0)) fail("data.spread: must be > 0");
    }
    const auto& p = cfg.partition;
    if (p.classes.min < 1 || p.classes.min > p.classes.max) fail("partition.classes: need 1 <= min <= max");
    if (p.samples.min < 1 || p.samples.min > p.samples.max) fail("partition.samples: need 1 <= min <= max");
    if (cfg.threads < 1) fail("threads: must be >= 1");
}

RoundDivergence::RoundDivergence(const DivergenceError& inner, std::size_t round_, std::size_t client_)
    : DivergenceError(inner.step, "round " + std::to_string(round_) + ", client " + std::to_string(client_) +
                                      ": " + inner.what()),
      round(round_),
      client(client_) {}

Dataset load_master_dataset(const DataConfig& cfg, std::uint64_t seed) {
    if (cfg.source == DataConfig::Source::synthetic)
        return generate_synthetic(cfg.classes, cfg.dim, cfg.per_class, cfg.spread, stream_seed(seed, Stream::data));
    Dataset ds = load_idx(cfg.images, cfg.labels);
    if (cfg.limit != 0 && cfg.limit < ds.size()) {
        std::vector<std::size_t> first(cfg.limit);
        std::iota(first.begin(), first.end(), std::size_t{0});
        ds = subset(ds, first);
    }
    return ds;
}

SimContext prepare(const SimConfig& cfg) { return prepare(cfg, load_master_dataset(cfg.data, cfg.seed)); }

SimContext prepare(const SimConfig& cfg, Dataset master) {
    validate(cfg);
    validate(master);
    SimContext ctx;
    ctx.master = std::move(master);

    std::vector<std::size_t> all(ctx.master.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    auto [eval, rest] = stratified_split(ctx.master, all, cfg.data.eval_fraction, stream_seed(cfg.seed, Stream::split, 0));
    // server fraction is relative to the whole dataset
    const double server_share = cfg.data.server_test_fraction / (1.0 - cfg.data.eval_fraction);
    auto [server, train_pool] = stratified_split(ctx.master, rest, server_share, stream_seed(cfg.seed, Stream::split, 1));
    ctx.eval_indices = std::move(eval);
    ctx.server_test_indices = std::move(server);
    if (ctx.eval_indices.empty()) throw InvalidArgument("data.eval_fraction: evaluation set is empty");
    if (ctx.server_test_indices.empty()) throw InvalidArgument("data.server_test_fraction: server test set is empty");
    if (train_pool.empty()) throw InvalidArgument("data: nothing left to partition");

    if (cfg.partition.mode == PartitionConfig::Mode::identical) {
        ctx.partition.seed = 0;
        ctx.partition.shards.assign(cfg.clients, train_pool);
    } else {
        if (cfg.partition.classes.max > ctx.master.num_classes)
            throw InvalidArgument("partition.classes: max exceeds the dataset's " +
                                  std::to_string(ctx.master.num_classes) + " classes");
        ctx.partition = partition_non_iid(ctx.master, static_cast<int>(cfg.clients), cfg.partition.classes,
                                          cfg.partition.samples, stream_seed(cfg.seed, Stream::partition),
                                          train_pool);
    }
    ctx.eval_set = subset(ctx.master, ctx.eval_indices);
    ctx.server_test_set = subset(ctx.master, ctx.server_test_indices);
    for (const auto& s : ctx.partition.shards) ctx.shards.push_back(subset(ctx.master, s));

    ctx.arch.activation = cfg.activation;
    ctx.arch.layer_sizes.push_back(static_cast<int>(ctx.master.dim()));
    ctx.arch.layer_sizes.insert(ctx.arch.layer_sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    ctx.arch.layer_sizes.push_back(ctx.master.num_classes);

    ctx.behaviors = assign_behaviors(cfg, ctx.arch);
    for (const auto& b : ctx.behaviors) validate(b);
    ctx.tester_pool = tester_pool(cfg, ctx.behaviors);
    if (cfg.method == Method::fedtest && cfg.num_testers() >= ctx.tester_pool.size())
        throw InvalidArgument("testers: K must be < the number of tester-eligible clients (" +
                              std::to_string(ctx.tester_pool.size()) + ")");
    return ctx;
}

SimState initial_state(const SimContext& ctx, const SimConfig& cfg) {
    SimState s;
    s.round = 0;
    s.global = init_model(ctx.arch, stream_seed(cfg.seed, Stream::init));
    s.board = ScoreBoard::uniform(cfg.clients, 1.0 / ctx.master.num_classes, cfg.beta, cfg.power);
    s.testers = testers_for_round(ctx, cfg, 0);
    return s;
}

std::pair<SimState, RoundReport> run_round(const SimContext& ctx, const SimState& state, const SimConfig& cfg) {
    const std::size_t n = cfg.clients;
    const std::size_t round = state.round;

    // (1) local updates
    std::vector<ModelParams> updates(n);
    parallel_for(n, cfg.threads, [&](std::size_t i) {
        TrainConfig tc = cfg.train;
        tc.seed = cfg.shared_train_seed ? stream_seed(cfg.seed, Stream::train, round)
                                        : stream_seed(cfg.seed, Stream::train, round, i);
        try {
            updates[i] = local_train(state.global, ctx.shards[i], tc);
        } catch (const DivergenceError& e) {
            throw RoundDivergence(e, round, i);
        }
        const auto& b = ctx.behaviors[i];
        if (b.kind == Behavior::Kind::random_weights)
            updates[i] = malicious_update(ctx.arch, b.noise_scale, stream_seed(cfg.seed, Stream::malicious, round, i));
    });

    RoundReport report;
    report.round = round;
    report.method = cfg.method;
    SimState next;
    next.board = state.board;
    const std::size_t model_bytes = model_payload_bytes(ctx.arch);

    // (2) weights
    AggregationWeights weights;
    switch (cfg.method) {
        case Method::fedavg: {
            std::vector<std::size_t> counts;
            for (const auto& s : ctx.shards) counts.push_back(s.size());
            weights = fedavg_weights(counts);
            report.scores = weights.w;
            report.bytes_up = n * model_bytes;
            break;
        }
        case Method::accuracy_based: {
            std::vector<double> acc(n);
            parallel_for(n, cfg.threads, [&](std::size_t i) { acc[i] = evaluate(updates[i], ctx.server_test_set).accuracy; });
            weights = accuracy_weights(acc);
            report.scores = Eigen::Map<const Vector>(acc.data(), static_cast<Eigen::Index>(n));
            report.bytes_up = n * model_bytes;
            break;
        }
        case Method::fedtest: {
            const RoundSchedule schedule = build_schedule(round, n, state.testers, model_bytes, cfg.report_bytes);
            report.testers = schedule.testers;
            for (std::size_t slot = 0; slot < n - schedule.testers.size(); ++slot)
                report.tested.push_back(schedule.client_in_slot(slot));

            const std::size_t k = report.testers.size();
            const std::size_t m = report.tested.size();
            report.acc_matrix.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(m));
            std::vector<std::vector<double>> rows(k, std::vector<double>(m));
            parallel_for(k * m, cfg.threads, [&](std::size_t cell) {
                const auto t = cell / m, j = cell % m;
                rows[t][j] = evaluate(updates[report.tested[j]], ctx.shards[report.testers[t]]).accuracy;
            });
            std::vector<std::vector<std::optional<double>>> per_client(k, std::vector<std::optional<double>>(n));
            for (std::size_t t = 0; t < k; ++t) {
                const auto& b = ctx.behaviors[report.testers[t]];
                if (b.kind == Behavior::Kind::lying_tester)
                    rows[t] = lying_report(rows[t], b.lie_policy,
                                           stream_seed(cfg.seed, Stream::lying, round, report.testers[t]));
                for (std::size_t j = 0; j < m; ++j) {
                    report.acc_matrix(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = rows[t][j];
                    per_client[t][report.tested[j]] = rows[t][j];
                }
            }
            next.board = update_scores(state.board, fuse_reports(per_client, n));
            std::vector<std::size_t> everyone(n);
            std::iota(everyone.begin(), everyone.end(), std::size_t{0});
            weights = fedtest_weights(next.board, everyone);
            report.scores = next.board.scores;
            report.bytes_up = schedule.total_uplink_bytes();
            break;
        }
    }
    report.weights = weights.w;
    report.weight_fallback = weights.fallback;
    report.bytes_down = n * model_bytes;

    // (3) aggregate and broadcast
    next.global = weighted_aggregate(updates, weights);
    const auto eval = evaluate(next.global, ctx.eval_set);
    report.global_accuracy = eval.accuracy;
    report.global_loss = eval.loss;

    // (4) next round's testers
    next.round = round + 1;
    next.testers = testers_for_round(ctx, cfg, next.round);
    return {std::move(next), std::move(report)};
}

std::vector<RoundReport> run_simulation(const SimConfig& cfg) {
    const SimContext ctx = prepare(cfg);
    return run_simulation(ctx, cfg);
}

std::vector<RoundReport> run_simulation(const SimContext& ctx, const SimConfig& cfg, const RoundObserver& observer) {
    std::vector<RoundReport> reports;
    reports.reserve(cfg.rounds);
    SimState state = initial_state(ctx, cfg);
    for (std::size_t r = 0; r < cfg.rounds; ++r) {
        auto [next, report] = run_round(ctx, state, cfg);
        if (observer) observer(next, report);
        reports.push_back(std::move(report));
        state = std::move(next);
    }
    return reports;
}

std::optional<std::size_t> rounds_to_target(const std::vector<RoundReport>& reports, double target) {
    for (const auto& r : reports)
        if (r.global_accuracy >= target) return r.round;
    return std::nullopt;
}

namespace {

void put_number(std::ostream& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, res.ptr - buf);
}

}  // namespace

void write_round_csv(std::ostream& out, const std::vector<RoundReport>& reports, std::size_t num_clients) {
    out << "round,method,global_accuracy,global_loss,bytes_up,bytes_down";
    for (std::size_t i = 0; i < num_clients; ++i) out << ",w_" << i;
    for (std::size_t i = 0; i < num_clients; ++i) out << ",s_" << i;
    out << '\n';
    for (const auto& r : reports) {
        out << r.round << ',' << to_string(r.method) << ',';
        put_number(out, r.global_accuracy);
        out << ',';
        put_number(out, r.global_loss);
        out << ',' << r.bytes_up << ',' << r.bytes_down;
        for (Eigen::Index i = 0; i < r.weights.size(); ++i) {
            out << ',';
            put_number(out, r.weights[i]);
        }
        for (Eigen::Index i = 0; i < r.scores.size(); ++i) {
            out << ',';
            put_number(out, r.scores[i]);
        }
        out << '\n';
    }
}

}  // namespace fedtest
