#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fedtest/engine.hpp"

namespace fedtest {

/// Configuration problem; `line` is 0 when the error is not tied to one line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::size_t line, std::string key, const std::string& message);
    std::size_t line;
    std::string key;
};

/// One SimConfig per method; all share the data, partition and seed.
struct ExperimentSpec {
    std::vector<SimConfig> runs;
    std::vector<double> targets{0.5, 0.8, 0.9};
    std::filesystem::path output_dir;  // empty = not set in the file

    [[nodiscard]] const SimConfig& base() const { return runs.front(); }
    /// The run for `m`, or nullptr.
    [[nodiscard]] const SimConfig* find(Method m) const;

    bool operator==(const ExperimentSpec&) const = default;
};

/// `key = value` lines with dotted keys; `#` starts a comment. Relative
/// paths resolve against `base_dir`.
ExperimentSpec parse_config_text(std::string_view text, const std::filesystem::path& base_dir = {});
ExperimentSpec parse_config(const std::filesystem::path& path);

/// Every key with its effective value, in parseable form.
std::string echo_config(const ExperimentSpec& spec);

/// Replace the shared seed in every run.
void override_seed(ExperimentSpec& spec, std::uint64_t seed);

}  // namespace fedtest
