#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "openvlc/common.hpp"
#include "openvlc/mac.hpp"
#include "openvlc/network.hpp"
#include "openvlc/optical_channel.hpp"

namespace openvlc::harness {

enum class FlowKind : std::uint8_t { Saturation, Ping, Flood };

const char* to_string(FlowKind kind);

struct FlowSpec {
    int id = 0;
    FlowKind kind = FlowKind::Saturation;
    int src = 0;  // node ids as declared in the scenario
    int dst = 0;
    std::size_t payload_bytes = 1000;  // saturation / flood datagram size
    std::size_t data_bytes = 10;       // ping data after the echo header
    double ipi_s = 1.0;                // ping inter-packet interval
    std::size_t count = 0;             // pings to send; 0 = until stop
    double rate_bps = 0.0;             // flood offered load; 0 = saturating
    double start_s = 0.0;
    std::optional<double> stop_s;
    bool enabled = true;
};

struct NodeSpec {
    int id = 0;
    Address address = 0;
    std::optional<std::array<double, 3>> position;
    // Gain from this node (as emitter) to each listed receiver id.
    std::optional<std::vector<std::pair<int, double>>> gain_row;
    std::optional<double> ambient;
    std::optional<double> noise_sigma;
};

struct ChannelSpec {
    double ambient = 0.1;
    double noise_sigma = 0.01;
    int adc_bits = 10;
    double full_scale = 1.0;
    Duration switch_latency = microseconds(2);
    double g0 = 0.36;  // gain * m^2 for the inverse-square helper
    double intensity_high = 1.0;
    double intensity_low = 0.0;
};

struct ScenarioSpec {
    std::string name = "scenario";
    std::uint64_t seed = 1;
    Duration t_end = std::chrono::seconds(60);
    Duration report_interval = std::chrono::seconds(10);
    ChannelSpec channel;
    mac::MacParams mac;
    std::vector<NodeSpec> nodes;
    std::vector<FlowSpec> traffic;

    /// Index of a declared node id in `nodes`; Error{ValidationError} if absent.
    std::size_t node_index(int id) const;
};

/// Error{ParseError} for malformed JSON, Error{ValidationError} naming the
/// field path for unknown keys, wrong types and violated invariants.
ScenarioSpec parse_scenario(const nlohmann::json& doc);
ScenarioSpec parse_scenario_text(const std::string& text);
ScenarioSpec load_scenario(const std::string& path);

nlohmann::json scenario_to_json(const ScenarioSpec& spec);

/// Referential integrity, unique ids/addresses, MAC and channel invariants.
void validate(const ScenarioSpec& spec);

channel::ChannelParams build_channel_params(const ScenarioSpec& spec);
std::vector<NodeSetup> build_node_setups(const ScenarioSpec& spec);

}  // namespace openvlc::harness
