#include "fedtest/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedtest/config.hpp"
#include "fedtest/gradcheck.hpp"

namespace fedtest {

namespace {

using nlohmann::ordered_json;

struct MethodResult {
    Method method;
    std::vector<RoundReport> reports;
};

std::filesystem::path output_dir(const std::string& flag, const ExperimentSpec& spec) {
    if (!flag.empty()) return flag;
    if (!spec.output_dir.empty()) return spec.output_dir;
    if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
    return "fedtest-out";
}

ordered_json config_echo_json(const ExperimentSpec& spec) {
    ordered_json j = ordered_json::object();
    std::istringstream lines(echo_config(spec));
    for (std::string line; std::getline(lines, line);) {
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        j[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return j;
}

void write_outputs(const std::filesystem::path& dir, const ExperimentSpec& spec, const SimContext& ctx,
                   const std::vector<MethodResult>& results) {
    std::filesystem::create_directories(dir);
    ordered_json summary;
    summary["config"] = config_echo_json(spec);
    std::ostringstream hash;
    hash << std::hex << std::setw(16) << std::setfill('0') << partition_hash(ctx.partition);
    summary["partition_hash"] = hash.str();
    summary["shard_sizes"] = ordered_json::array();
    for (const auto& s : ctx.shards) summary["shard_sizes"].push_back(s.size());
    summary["eval_samples"] = ctx.eval_set.size();
    summary["server_test_samples"] = ctx.server_test_set.size();

    ordered_json methods = ordered_json::object();
    for (const auto& r : results) {
        std::ofstream csv(dir / (std::string(to_string(r.method)) + ".csv"), std::ios::binary);
        write_round_csv(csv, r.reports, spec.base().clients);
        if (!csv) throw std::runtime_error("failed writing CSV in " + dir.string());

        ordered_json m;
        const auto& last = r.reports.back();
        m["final_accuracy"] = last.global_accuracy;
        m["final_loss"] = last.global_loss;
        std::size_t up = 0, down = 0;
        for (const auto& rep : r.reports) {
            up += rep.bytes_up;
            down += rep.bytes_down;
        }
        m["bytes_up_total"] = up;
        m["bytes_down_total"] = down;
        ordered_json rtt = ordered_json::object();
        for (double t : spec.targets) {
            std::ostringstream key;
            key << t;
            const auto hit = rounds_to_target(r.reports, t);
            rtt[key.str()] = hit ? ordered_json(*hit) : ordered_json(nullptr);
        }
        m["rounds_to_target"] = rtt;
        methods[std::string(to_string(r.method))] = m;
    }
    summary["methods"] = methods;
    std::ofstream(dir / "summary.json", std::ios::binary) << summary.dump(2) << '\n';
}

void print_target_table(std::ostream& out, const ExperimentSpec& spec, const std::vector<MethodResult>& results) {
    out << std::left << std::setw(16) << "method" << std::setw(10) << "final";
    for (double t : spec.targets) {
        std::ostringstream h;
        h << "rtt@" << t;
        out << std::setw(10) << h.str();
    }
    out << '\n';
    for (const auto& r : results) {
        out << std::setw(16) << to_string(r.method) << std::setw(10) << std::fixed << std::setprecision(4)
            << r.reports.back().global_accuracy;
        for (double t : spec.targets) {
            const auto hit = rounds_to_target(r.reports, t);
            out << std::setw(10) << (hit ? std::to_string(*hit) : std::string("-"));
        }
        out << '\n';
    }
    out << std::defaultfloat;
}

int run_methods(const std::string& config_path, const std::string& out_flag, std::optional<std::uint64_t> seed,
                std::optional<std::string> only_method, std::ostream& out) {
    ExperimentSpec spec = parse_config(config_path);
    if (seed) override_seed(spec, *seed);
    if (only_method) {
        const Method m = parse_method(*only_method);
        const SimConfig* run = spec.find(m);
        if (!run) throw ConfigError(0, "methods", "method '" + *only_method + "' is not configured");
        SimConfig chosen = *run;
        spec.runs = {chosen};
    }

    // one dataset and partition for every method
    const Dataset master = load_master_dataset(spec.base().data, spec.base().seed);
    std::vector<MethodResult> results;
    std::optional<SimContext> first_ctx;
    for (const auto& cfg : spec.runs) {
        SimContext ctx = prepare(cfg, master);
        results.push_back({cfg.method, run_simulation(ctx, cfg)});
        if (!first_ctx) first_ctx = std::move(ctx);
    }
    const auto dir = output_dir(out_flag, spec);
    write_outputs(dir, spec, *first_ctx, results);
    print_target_table(out, spec, results);
    out << "wrote " << dir.string() << '\n';
    return 0;
}

int gradcheck(std::uint64_t seed, int cases, std::ostream& out) {
    constexpr double kTolerance = 1e-4;
    const auto results = run_gradcheck(seed, cases);
    double worst = 0.0;
    for (const auto& r : results) {
        out << "arch=[";
        for (std::size_t i = 0; i < r.arch.layer_sizes.size(); ++i) out << (i ? "," : "") << r.arch.layer_sizes[i];
        out << "] act=" << to_string(r.arch.activation) << " batch=" << r.batch_size
            << " max_rel_error=" << std::scientific << std::setprecision(3) << r.max_rel_error << std::defaultfloat << '\n';
        worst = std::max(worst, r.max_rel_error);
    }
    out << "max relative error " << std::scientific << std::setprecision(3) << worst << std::defaultfloat
        << (worst < kTolerance ? " < " : " >= ") << kTolerance << '\n';
    return worst < kTolerance ? 0 : 1;
}

}  // namespace

int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Federated testing simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, method;
    std::optional<std::uint64_t> seed;
    int cases = 10;
    std::uint64_t gradcheck_seed = 1;

    auto* run = app.add_subcommand("run", "Run a single method");
    run->add_option("--config", config_path, "Config file")->required();
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--seed", seed, "Override the config seed");
    run->add_option("--method", method, "Method to run (default: first configured)");

    auto* compare = app.add_subcommand("compare", "Run every configured method on one partition");
    compare->add_option("--config", config_path, "Config file")->required();
    compare->add_option("--out", out_dir, "Output directory");
    compare->add_option("--seed", seed, "Override the config seed");

    auto* grad = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
    grad->add_option("--seed", gradcheck_seed, "Seed for the random models");
    grad->add_option("--cases", cases, "Number of random models")->check(CLI::PositiveNumber);

    std::vector<std::string> argv(args.begin(), args.end());
    std::reverse(argv.begin(), argv.end());  // CLI11 consumes a reversed vector
    try {
        app.parse(argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        if (!e.get_name().empty()) err << "run with --help for usage\n";
        return 2;
    }

    try {
        if (*grad) return gradcheck(gradcheck_seed, cases, out);
        std::optional<std::string> only;
        if (*run) {
            if (!method.empty()) only = method;
            else only = std::string(to_string(parse_config(config_path).base().method));
        }
        return run_methods(config_path, out_dir, seed, only, out);
    } catch (const ConfigError& e) {
        err << "config error: " << config_path << ": " << e.what() << '\n';
        return 2;
    } catch (const PartitionExhausted& e) {
        err << "config error: " << config_path << ": partition: " << e.what() << '\n';
        return 2;
    } catch (const InvalidArgument& e) {
        err << "config error: " << config_path << ": " << e.what() << '\n';
        return 2;
    } catch (const IdxError& e) {
        err << "data error: " << e.what() << '\n';
        return 2;
    } catch (const DivergenceError& e) {
        err << "divergence: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args, out, err);
}

}  // namespace fedtest
