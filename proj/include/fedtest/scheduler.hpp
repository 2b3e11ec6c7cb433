#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace fedtest {

enum class TesterPolicy { round_robin, random };

std::string_view to_string(TesterPolicy p);
TesterPolicy parse_tester_policy(std::string_view name);

/// K distinct tester ids out of 0..N-1 for `round`, sorted ascending.
///
/// round_robin: {(round*K + j) mod N : j < K}.
/// random: seeded draw without replacement; redrawn until it differs from
/// the previous round's set.
std::vector<std::size_t> select_testers(std::size_t round, std::size_t num_clients, std::size_t num_testers,
                                        TesterPolicy policy, std::uint64_t seed);

/// Logical resource-block layout and byte accounting for one round.
/// Non-testers transmit in slots 0..N-K-1 (id order), testers in the last K.
struct RoundSchedule {
    std::size_t round = 0;
    std::vector<std::size_t> testers;
    std::vector<std::size_t> slot_of;  // client id -> slot
    std::size_t bytes_per_model = 0;
    std::size_t bytes_per_report = 0;

    [[nodiscard]] std::size_t num_clients() const { return slot_of.size(); }
    [[nodiscard]] bool is_tester(std::size_t client) const;
    /// Client transmitting in `slot`.
    [[nodiscard]] std::size_t client_in_slot(std::size_t slot) const;

    /// One orthogonal transmission per model plus one report bundle per tester.
    [[nodiscard]] std::size_t uplink_transmissions() const;
    /// A tester's uplink: its model plus one accuracy entry per tested model.
    [[nodiscard]] std::size_t tester_uplink_bytes() const;
    [[nodiscard]] std::size_t uplink_bytes(std::size_t client) const;
    /// Sum over clients; each non-tester model counts once although K+1 nodes receive it.
    [[nodiscard]] std::size_t total_uplink_bytes() const;
    /// Broadcast of the aggregate to every node.
    [[nodiscard]] std::size_t total_downlink_bytes() const;
};

RoundSchedule build_schedule(std::size_t round, std::size_t num_clients, std::vector<std::size_t> testers,
                             std::size_t model_bytes, std::size_t report_bytes = 8);

RoundSchedule build_schedule(std::size_t round, std::size_t num_clients, std::size_t num_testers,
                             TesterPolicy policy, std::uint64_t seed, std::size_t model_bytes,
                             std::size_t report_bytes = 8);

}  // namespace fedtest
