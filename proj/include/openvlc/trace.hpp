#pragma once

#include <functional>
#include <string>

#include <json.hpp>

#include "openvlc/common.hpp"

namespace openvlc {

inline constexpr std::int64_t kNoNode = -1;

struct TraceEvent {
    SimTime time{};
    std::int64_t node = kNoNode;
    std::string kind;
    nlohmann::json detail = nlohmann::json::object();
};

using TraceFn = std::function<void(TraceEvent)>;

/// One JSON object per line: time_us, node, kind, detail.
std::string to_jsonl(const TraceEvent& event);

}  // namespace openvlc
