#include "fedtest/scheduler.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "fedtest/common.hpp"

namespace fedtest {

std::string_view to_string(TesterPolicy p) {
    return p == TesterPolicy::round_robin ? "round_robin" : "random";
}

TesterPolicy parse_tester_policy(std::string_view name) {
    if (name == "round_robin") return TesterPolicy::round_robin;
    if (name == "random") return TesterPolicy::random;
    throw InvalidArgument("unknown tester policy '" + std::string(name) + "'");
}

namespace {

void check_counts(std::size_t n, std::size_t k) {
    if (k < 1 || k >= n)
        throw InvalidArgument("tester count K=" + std::to_string(k) + " must satisfy 1 <= K < N=" + std::to_string(n));
}

std::vector<std::size_t> random_draw(std::size_t n, std::size_t k, std::uint64_t seed) {
    std::vector<std::size_t> ids(n), out;
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    Rng rng(seed);
    std::sample(ids.begin(), ids.end(), std::back_inserter(out), static_cast<std::ptrdiff_t>(k), rng);
    return out;  // std::sample keeps the input order, so already sorted
}

}  // namespace

std::vector<std::size_t> select_testers(std::size_t round, std::size_t num_clients, std::size_t num_testers,
                                        TesterPolicy policy, std::uint64_t seed) {
    check_counts(num_clients, num_testers);
    if (policy == TesterPolicy::round_robin) {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < num_testers; ++j) out.push_back((round * num_testers + j) % num_clients);
        std::sort(out.begin(), out.end());
        return out;
    }
    // Replay the chain so every round differs from its predecessor.
    std::vector<std::size_t> current = random_draw(num_clients, num_testers, derive_seed(seed, 0));
    for (std::size_t r = 1; r <= round; ++r) {
        auto next = random_draw(num_clients, num_testers, derive_seed(seed, r));
        for (std::uint64_t attempt = 1; next == current; ++attempt)
            next = random_draw(num_clients, num_testers, derive_seed(seed, r, attempt));
        current = std::move(next);
    }
    return current;
}

bool RoundSchedule::is_tester(std::size_t client) const {
    return std::binary_search(testers.begin(), testers.end(), client);
}

std::size_t RoundSchedule::client_in_slot(std::size_t slot) const {
    const auto it = std::find(slot_of.begin(), slot_of.end(), slot);
    if (it == slot_of.end()) throw InvalidArgument("slot " + std::to_string(slot) + " is unassigned");
    return static_cast<std::size_t>(it - slot_of.begin());
}

std::size_t RoundSchedule::uplink_transmissions() const { return num_clients() + testers.size(); }

std::size_t RoundSchedule::tester_uplink_bytes() const {
    return bytes_per_model + (num_clients() - testers.size()) * bytes_per_report;
}

std::size_t RoundSchedule::uplink_bytes(std::size_t client) const {
    return is_tester(client) ? tester_uplink_bytes() : bytes_per_model;
}

std::size_t RoundSchedule::total_uplink_bytes() const {
    std::size_t total = 0;
    for (std::size_t c = 0; c < num_clients(); ++c) total += uplink_bytes(c);
    return total;
}

std::size_t RoundSchedule::total_downlink_bytes() const { return num_clients() * bytes_per_model; }

RoundSchedule build_schedule(std::size_t round, std::size_t num_clients, std::vector<std::size_t> testers,
                             std::size_t model_bytes, std::size_t report_bytes) {
    std::sort(testers.begin(), testers.end());
    check_counts(num_clients, testers.size());
    if (std::adjacent_find(testers.begin(), testers.end()) != testers.end())
        throw InvalidArgument("duplicate tester id");
    if (testers.back() >= num_clients) throw InvalidArgument("tester id out of range");

    RoundSchedule s;
    s.round = round;
    s.testers = std::move(testers);
    s.bytes_per_model = model_bytes;
    s.bytes_per_report = report_bytes;
    s.slot_of.resize(num_clients);
    std::size_t next_slot = 0;
    for (std::size_t c = 0; c < num_clients; ++c)
        if (!s.is_tester(c)) s.slot_of[c] = next_slot++;
    for (auto t : s.testers) s.slot_of[t] = next_slot++;
    return s;
}

RoundSchedule build_schedule(std::size_t round, std::size_t num_clients, std::size_t num_testers,
                             TesterPolicy policy, std::uint64_t seed, std::size_t model_bytes,
                             std::size_t report_bytes) {
    return build_schedule(round, num_clients, select_testers(round, num_clients, num_testers, policy, seed),
                          model_bytes, report_bytes);
}

}  // namespace fedtest
