#include "fedtest/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace fedtest {

ConfigError::ConfigError(std::size_t line_, std::string key_, const std::string& message)
    : std::runtime_error((line_ ? "line " + std::to_string(line_) + ": " : std::string()) +
                         (key_.empty() ? std::string() : "'" + key_ + "': ") + message),
      line(line_),
      key(std::move(key_)) {}

const SimConfig* ExperimentSpec::find(Method m) const {
    for (const auto& r : runs)
        if (r.method == m) return &r;
    return nullptr;
}

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    if (trim(s).empty()) return out;
    std::size_t start = 0;
    while (true) {
        const auto comma = s.find(',', start);
        out.push_back(trim(s.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

template <typename T>
T parse_number(std::string_view s) {
    T v{};
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end) throw InvalidArgument("expected a number, got '" + std::string(s) + "'");
    return v;
}

bool parse_bool(std::string_view s) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw InvalidArgument("expected true/false, got '" + std::string(s) + "'");
}

std::string fmt_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

template <typename T>
std::string join(const std::vector<T>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_floating_point_v<T>) out += fmt_double(xs[i]);
        else out += std::to_string(xs[i]);
    }
    return out;
}

struct Field {
    std::function<void(SimConfig&, std::string_view, const std::filesystem::path&)> set;
    std::function<std::string(const SimConfig&)> get;
};

template <typename T>
Field number_field(T SimConfig::*member) {
    return {[member](SimConfig& c, std::string_view v, const auto&) { c.*member = parse_number<T>(v); },
            [member](const SimConfig& c) {
                if constexpr (std::is_floating_point_v<T>) return fmt_double(c.*member);
                else return std::to_string(c.*member);
            }};
}

template <typename T>
Field nested_number(std::function<T&(SimConfig&)> ref) {
    return {[ref](SimConfig& c, std::string_view v, const auto&) { ref(c) = parse_number<T>(v); },
            [ref](const SimConfig& c) {
                const T& x = ref(const_cast<SimConfig&>(c));
                if constexpr (std::is_floating_point_v<T>) return fmt_double(x);
                else return std::to_string(x);
            }};
}

std::filesystem::path resolve(std::string_view v, const std::filesystem::path& base) {
    if (v.empty()) return {};
    std::filesystem::path p{std::string(v)};
    if (p.is_relative() && !base.empty()) p = base / p;
    return p.lexically_normal();
}

// Ordered: this is also the echo order.
const std::vector<std::pair<std::string, Field>>& fields() {
    static const std::vector<std::pair<std::string, Field>> table = [] {
        std::vector<std::pair<std::string, Field>> t;
        t.emplace_back("seed", number_field(&SimConfig::seed));
        t.emplace_back("clients", number_field(&SimConfig::clients));
        t.emplace_back("testers", number_field(&SimConfig::testers));
        t.emplace_back("malicious", number_field(&SimConfig::malicious));
        t.emplace_back("rounds", number_field(&SimConfig::rounds));
        t.emplace_back("threads", number_field(&SimConfig::threads));
        t.emplace_back("model.hidden",
                       Field{[](SimConfig& c, std::string_view v, const auto&) {
                                 c.hidden.clear();
                                 if (v == "none") return;
                                 for (auto item : split_list(v)) c.hidden.push_back(parse_number<int>(item));
                             },
                             [](const SimConfig& c) { return c.hidden.empty() ? std::string("none") : join(c.hidden); }});
        t.emplace_back("model.activation",
                       Field{[](SimConfig& c, std::string_view v, const auto&) { c.activation = parse_activation(v); },
                             [](const SimConfig& c) { return std::string(to_string(c.activation)); }});
        t.emplace_back("train.epochs", nested_number<int>([](SimConfig& c) -> int& { return c.train.epochs; }));
        t.emplace_back("train.batch_size", nested_number<int>([](SimConfig& c) -> int& { return c.train.batch_size; }));
        t.emplace_back("train.learning_rate",
                       nested_number<double>([](SimConfig& c) -> double& { return c.train.learning_rate; }));
        t.emplace_back("train.shared_seed",
                       Field{[](SimConfig& c, std::string_view v, const auto&) { c.shared_train_seed = parse_bool(v); },
                             [](const SimConfig& c) { return std::string(c.shared_train_seed ? "true" : "false"); }});
        t.emplace_back("score.beta", number_field(&SimConfig::beta));
        t.emplace_back("score.power", number_field(&SimConfig::power));
        t.emplace_back("scheduler.policy",
                       Field{[](SimConfig& c, std::string_view v, const auto&) { c.tester_policy = parse_tester_policy(v); },
                             [](const SimConfig& c) { return std::string(to_string(c.tester_policy)); }});
        t.emplace_back("scheduler.exclude_malicious",
                       Field{[](SimConfig& c, std::string_view v, const auto&) { c.exclude_malicious_testers = parse_bool(v); },
                             [](const SimConfig& c) { return std::string(c.exclude_malicious_testers ? "true" : "false"); }});
        t.emplace_back("scheduler.report_bytes", number_field(&SimConfig::report_bytes));
        t.emplace_back("data.source",
                       Field{[](SimConfig& c, std::string_view v, const auto&) {
                                 if (v == "synthetic") c.data.source = DataConfig::Source::synthetic;
                                 else if (v == "idx") c.data.source = DataConfig::Source::idx;
                                 else throw InvalidArgument("expected synthetic or idx, got '" + std::string(v) + "'");
                             },
                             [](const SimConfig& c) {
                                 return std::string(c.data.source == DataConfig::Source::idx ? "idx" : "synthetic");
                             }});
        t.emplace_back("data.classes", nested_number<int>([](SimConfig& c) -> int& { return c.data.classes; }));
        t.emplace_back("data.dim", nested_number<int>([](SimConfig& c) -> int& { return c.data.dim; }));
        t.emplace_back("data.per_class", nested_number<int>([](SimConfig& c) -> int& { return c.data.per_class; }));
        t.emplace_back("data.spread", nested_number<double>([](SimConfig& c) -> double& { return c.data.spread; }));
        t.emplace_back("data.images",
                       Field{[](SimConfig& c, std::string_view v, const std::filesystem::path& base) { c.data.images = resolve(v, base); },
                             [](const SimConfig& c) { return c.data.images.string(); }});
        t.emplace_back("data.labels",
                       Field{[](SimConfig& c, std::string_view v, const std::filesystem::path& base) { c.data.labels = resolve(v, base); },
                             [](const SimConfig& c) { return c.data.labels.string(); }});
        t.emplace_back("data.limit", nested_number<std::size_t>([](SimConfig& c) -> std::size_t& { return c.data.limit; }));
        t.emplace_back("data.eval_fraction",
                       nested_number<double>([](SimConfig& c) -> double& { return c.data.eval_fraction; }));
        t.emplace_back("data.server_test_fraction",
                       nested_number<double>([](SimConfig& c) -> double& { return c.data.server_test_fraction; }));
        t.emplace_back("partition.mode",
                       Field{[](SimConfig& c, std::string_view v, const auto&) {
                                 if (v == "non_iid") c.partition.mode = PartitionConfig::Mode::non_iid;
                                 else if (v == "identical") c.partition.mode = PartitionConfig::Mode::identical;
                                 else throw InvalidArgument("expected non_iid or identical, got '" + std::string(v) + "'");
                             },
                             [](const SimConfig& c) {
                                 return std::string(c.partition.mode == PartitionConfig::Mode::identical ? "identical" : "non_iid");
                             }});
        t.emplace_back("partition.classes_min",
                       nested_number<int>([](SimConfig& c) -> int& { return c.partition.classes.min; }));
        t.emplace_back("partition.classes_max",
                       nested_number<int>([](SimConfig& c) -> int& { return c.partition.classes.max; }));
        t.emplace_back("partition.samples_min",
                       nested_number<int>([](SimConfig& c) -> int& { return c.partition.samples.min; }));
        t.emplace_back("partition.samples_max",
                       nested_number<int>([](SimConfig& c) -> int& { return c.partition.samples.max; }));
        t.emplace_back("adversary.kind",
                       Field{[](SimConfig& c, std::string_view v, const auto&) { c.adversary.kind = parse_behavior_kind(v); },
                             [](const SimConfig& c) { return std::string(to_string(c.adversary.kind)); }});
        t.emplace_back("adversary.noise_scale",
                       nested_number<double>([](SimConfig& c) -> double& { return c.adversary.noise_scale; }));
        t.emplace_back("adversary.lie_policy",
                       Field{[](SimConfig& c, std::string_view v, const auto&) { c.adversary.lie_policy = parse_lie_policy(v); },
                             [](const SimConfig& c) { return std::string(to_string(c.adversary.lie_policy)); }});
        t.emplace_back("adversary.ids",
                       Field{[](SimConfig& c, std::string_view v, const auto&) {
                                 c.adversary.ids.clear();
                                 for (auto item : split_list(v)) c.adversary.ids.push_back(parse_number<std::size_t>(item));
                             },
                             [](const SimConfig& c) { return join(c.adversary.ids); }});
        return t;
    }();
    return table;
}

const Field* find_field(std::string_view key) {
    for (const auto& [name, f] : fields())
        if (name == key) return &f;
    return nullptr;
}

}  // namespace

ExperimentSpec parse_config_text(std::string_view text, const std::filesystem::path& base_dir) {
    ExperimentSpec spec;
    SimConfig base;
    std::vector<Method> methods{Method::fedavg, Method::accuracy_based, Method::fedtest};
    std::map<std::string, std::size_t, std::less<>> line_of;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(line_no, "", "expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(line_no, "", "missing key");
        if (line_of.count(key)) throw ConfigError(line_no, key, "duplicate key");
        line_of.emplace(key, line_no);

        try {
            if (key == "methods") {
                methods.clear();
                for (auto m : split_list(value)) methods.push_back(parse_method(m));
            } else if (key == "report.targets") {
                spec.targets.clear();
                for (auto v : split_list(value)) spec.targets.push_back(parse_number<double>(v));
            } else if (key == "output.dir") {
                spec.output_dir = value.empty() ? std::filesystem::path{} : resolve(value, base_dir);
            } else if (const Field* f = find_field(key)) {
                f->set(base, value, base_dir);
            } else {
                throw ConfigError(line_no, key, "unknown key");
            }
        } catch (const InvalidArgument& e) {
            throw ConfigError(line_no, key, e.what());
        }
    }

    auto line_for = [&](std::string_view key) -> std::size_t {
        const auto it = line_of.find(key);
        return it == line_of.end() ? 0 : it->second;
    };

    if (methods.empty()) throw ConfigError(line_for("methods"), "methods", "at least one method is required");
    for (std::size_t i = 0; i < methods.size(); ++i)
        for (std::size_t j = i + 1; j < methods.size(); ++j)
            if (methods[i] == methods[j])
                throw ConfigError(line_for("methods"), "methods", "method '" + std::string(to_string(methods[i])) + "' listed twice");
    for (double t : spec.targets)
        if (!(t >= 0.0 && t <= 1.0)) throw ConfigError(line_for("report.targets"), "report.targets", "targets must lie in [0,1]");

    if (base.data.source == DataConfig::Source::idx) {
        for (const auto& [key, path] : {std::pair{"data.images", base.data.images}, std::pair{"data.labels", base.data.labels}}) {
            if (path.empty()) throw ConfigError(0, key, "required when data.source = idx");
            if (!std::filesystem::exists(path)) throw ConfigError(line_for(key), key, "dataset file not found: " + path.string());
        }
    }

    for (auto m : methods) {
        SimConfig run = base;
        run.method = m;
        try {
            validate(run);
        } catch (const InvalidArgument& e) {
            std::string msg = e.what();
            const auto colon = msg.find(':');
            std::string key = colon == std::string::npos ? std::string() : msg.substr(0, colon);
            if (key.find(' ') != std::string::npos) key.clear();
            const auto slash = key.find('/');
            const auto lookup = slash == std::string::npos ? key : key.substr(0, slash);
            throw ConfigError(line_for(lookup), "", msg);
        }
        spec.runs.push_back(std::move(run));
    }
    return spec;
}

ExperimentSpec parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(0, "", "cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path.parent_path());
}

std::string echo_config(const ExperimentSpec& spec) {
    std::ostringstream out;
    out << "methods = ";
    for (std::size_t i = 0; i < spec.runs.size(); ++i) out << (i ? "," : "") << to_string(spec.runs[i].method);
    out << "\nreport.targets = " << join(spec.targets) << '\n';
    out << "output.dir = " << spec.output_dir.string() << '\n';
    for (const auto& [name, f] : fields()) out << name << " = " << f.get(spec.base()) << '\n';
    return out.str();
}

void override_seed(ExperimentSpec& spec, std::uint64_t seed) {
    for (auto& r : spec.runs) r.seed = seed;
}

}  // namespace fedtest
