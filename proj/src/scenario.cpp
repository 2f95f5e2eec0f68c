#include "openvlc/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace openvlc::harness {

namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& path, const std::string& what)
{
    throw Error(Errc::ValidationError, path + ": " + what);
}

// Reads typed fields out of one JSON object and rejects keys nobody asked for.
class ObjectReader {
public:
    ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path))
    {
        if (!obj_.is_object()) {
            invalid(path_, "expected an object");
        }
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* get(const std::string& key)
    {
        seen_.insert(key);
        auto it = obj_.find(key);
        if (it == obj_.end() || it->is_null()) {
            return nullptr;
        }
        return &*it;
    }

    template <typename T>
    void read(const std::string& key, T& out)
    {
        if (const json* v = get(key)) {
            out = convert<T>(*v, field(key));
        }
    }

    template <typename T>
    void read(const std::string& key, std::optional<T>& out)
    {
        if (const json* v = get(key)) {
            out = convert<T>(*v, field(key));
        }
    }

    void read_us(const std::string& key, Duration& out)
    {
        if (const json* v = get(key)) {
            out = microseconds(convert<double>(*v, field(key)));
        }
    }

    void read_s(const std::string& key, Duration& out)
    {
        if (const json* v = get(key)) {
            out = seconds(convert<double>(*v, field(key)));
        }
    }

    void finish() const
    {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!seen_.contains(it.key())) {
                invalid(field(it.key()), "unknown key");
            }
        }
    }

    template <typename T>
    static T convert(const json& v, const std::string& path)
    {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) {
                invalid(path, "expected a boolean");
            }
            return v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) {
                invalid(path, "expected a string");
            }
            return v.get<std::string>();
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) {
                invalid(path, "expected a number");
            }
            const double d = v.get<double>();
            if (!std::isfinite(d)) {
                invalid(path, "must be finite");
            }
            return d;
        } else {
            static_assert(std::is_integral_v<T>);
            if (!v.is_number_integer()) {
                invalid(path, "expected an integer");
            }
            if constexpr (std::is_unsigned_v<T>) {
                if (v.is_number_unsigned()) {
                    const auto u = v.get<std::uint64_t>();
                    if (u > std::numeric_limits<T>::max()) {
                        invalid(path, "out of range");
                    }
                    return static_cast<T>(u);
                }
                const auto i = v.get<std::int64_t>();
                if (i < 0 || static_cast<std::uint64_t>(i) > std::numeric_limits<T>::max()) {
                    invalid(path, "must be a non-negative integer in range");
                }
                return static_cast<T>(i);
            } else {
                if (v.is_number_unsigned() &&
                    v.get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) {
                    invalid(path, "out of range");
                }
                const auto i = v.get<std::int64_t>();
                if (i < std::numeric_limits<T>::min() || i > std::numeric_limits<T>::max()) {
                    invalid(path, "out of range");
                }
                return static_cast<T>(i);
            }
        }
    }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

FlowKind parse_kind(const std::string& s, const std::string& path)
{
    if (s == "saturation") {
        return FlowKind::Saturation;
    }
    if (s == "ping") {
        return FlowKind::Ping;
    }
    if (s == "flood") {
        return FlowKind::Flood;
    }
    invalid(path, "expected saturation, ping or flood");
}

ChannelSpec parse_channel(const json& j)
{
    ObjectReader r(j, "channel");
    ChannelSpec c;
    r.read("ambient", c.ambient);
    r.read("noise_sigma", c.noise_sigma);
    r.read("adc_bits", c.adc_bits);
    r.read("full_scale", c.full_scale);
    r.read_us("switch_latency_us", c.switch_latency);
    r.read("g0", c.g0);
    r.read("intensity_high", c.intensity_high);
    r.read("intensity_low", c.intensity_low);
    r.finish();
    return c;
}

mac::MacParams parse_mac(const json& j)
{
    ObjectReader r(j, "mac");
    mac::MacParams m;
    r.read_us("symbol_period_us", m.symbol_period);
    r.read("cw_min", m.cw_min);
    r.read("cw_max", m.cw_max);
    r.read("basic_sense_symbols", m.basic_sense_symbols);
    r.read("collision_busy_symbols", m.collision_busy_symbols);
    if (const json* v = r.get("ack_timeout_us")) {
        m.ack_timeout = microseconds(ObjectReader::convert<double>(*v, "mac.ack_timeout_us"));
    }
    r.read("max_retx", m.max_retx);
    r.read("max_payload", m.max_payload);
    r.read("queue_capacity", m.queue_capacity);
    r.read_us("proc_overhead_a_us", m.proc_overhead_a);
    if (const json* v = r.get("proc_overhead_b_us")) {
        // Per coded byte; kept at nanosecond resolution.
        m.proc_overhead_b = microseconds(ObjectReader::convert<double>(*v, "mac.proc_overhead_b_us"));
    }
    r.finish();
    return m;
}

NodeSpec parse_node(const json& j, const std::string& path)
{
    ObjectReader r(j, path);
    NodeSpec n;
    if (!r.get("id")) {
        invalid(r.field("id"), "required");
    }
    r.read("id", n.id);
    if (!r.get("address")) {
        invalid(r.field("address"), "required");
    }
    r.read("address", n.address);
    if (const json* p = r.get("position")) {
        if (!p->is_array() || p->size() < 1 || p->size() > 3) {
            invalid(r.field("position"), "expected an array of 1 to 3 coordinates");
        }
        std::array<double, 3> xyz{0.0, 0.0, 0.0};
        for (std::size_t i = 0; i < p->size(); ++i) {
            xyz[i] = ObjectReader::convert<double>((*p)[i], r.field("position") + "[" + std::to_string(i) + "]");
        }
        n.position = xyz;
    }
    if (const json* g = r.get("gain_row")) {
        if (!g->is_object()) {
            invalid(r.field("gain_row"), "expected an object mapping receiver id to gain");
        }
        std::vector<std::pair<int, double>> row;
        for (auto it = g->begin(); it != g->end(); ++it) {
            const std::string key_path = r.field("gain_row") + "." + it.key();
            int receiver = 0;
            try {
                std::size_t used = 0;
                receiver = std::stoi(it.key(), &used);
                if (used != it.key().size()) {
                    throw std::invalid_argument("trailing");
                }
            } catch (const std::exception&) {
                invalid(key_path, "receiver key must be a node id");
            }
            row.emplace_back(receiver, ObjectReader::convert<double>(it.value(), key_path));
        }
        n.gain_row = std::move(row);
    }
    r.read("ambient", n.ambient);
    r.read("noise_sigma", n.noise_sigma);
    r.finish();
    return n;
}

FlowSpec parse_flow(const json& j, const std::string& path, int default_id)
{
    ObjectReader r(j, path);
    FlowSpec f;
    f.id = default_id;
    r.read("id", f.id);
    const json* kind = r.get("kind");
    if (kind == nullptr) {
        invalid(r.field("kind"), "required");
    }
    f.kind = parse_kind(ObjectReader::convert<std::string>(*kind, r.field("kind")), r.field("kind"));
    if (!r.get("src")) {
        invalid(r.field("src"), "required");
    }
    if (!r.get("dst")) {
        invalid(r.field("dst"), "required");
    }
    r.read("src", f.src);
    r.read("dst", f.dst);
    r.read("payload_bytes", f.payload_bytes);
    r.read("data_bytes", f.data_bytes);
    r.read("ipi_s", f.ipi_s);
    r.read("count", f.count);
    r.read("rate_bps", f.rate_bps);
    r.read("start_s", f.start_s);
    r.read("stop_s", f.stop_s);
    r.read("enabled", f.enabled);
    r.finish();
    return f;
}

}  // namespace

const char* to_string(FlowKind kind)
{
    switch (kind) {
    case FlowKind::Saturation: return "saturation";
    case FlowKind::Ping: return "ping";
    case FlowKind::Flood: return "flood";
    }
    return "?";
}

std::size_t ScenarioSpec::node_index(int id) const
{
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].id == id) {
            return i;
        }
    }
    throw Error(Errc::ValidationError, "node id " + std::to_string(id) + " is not declared");
}

ScenarioSpec parse_scenario(const nlohmann::json& doc)
{
    ObjectReader r(doc, "");
    ScenarioSpec s;
    r.read("name", s.name);
    r.read("seed", s.seed);
    r.read_s("t_end_s", s.t_end);
    r.read_s("report_interval_s", s.report_interval);
    if (const json* c = r.get("channel")) {
        s.channel = parse_channel(*c);
    }
    if (const json* m = r.get("mac")) {
        s.mac = parse_mac(*m);
    }
    const json* nodes = r.get("nodes");
    if (nodes == nullptr || !nodes->is_array()) {
        invalid("nodes", "required array");
    }
    for (std::size_t i = 0; i < nodes->size(); ++i) {
        s.nodes.push_back(parse_node((*nodes)[i], "nodes[" + std::to_string(i) + "]"));
    }
    if (const json* t = r.get("traffic")) {
        if (!t->is_array()) {
            invalid("traffic", "expected an array");
        }
        for (std::size_t i = 0; i < t->size(); ++i) {
            s.traffic.push_back(parse_flow((*t)[i], "traffic[" + std::to_string(i) + "]", static_cast<int>(i)));
        }
    }
    r.finish();
    validate(s);
    return s;
}

ScenarioSpec parse_scenario_text(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(Errc::ParseError, std::string("scenario: ") + e.what());
    }
    return parse_scenario(doc);
}

ScenarioSpec load_scenario(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::ParseError, "scenario: cannot open " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario_text(buf.str());
}

void validate(const ScenarioSpec& s)
{
    if (s.t_end <= Duration::zero()) {
        invalid("t_end_s", "must be positive");
    }
    if (s.report_interval <= Duration::zero()) {
        invalid("report_interval_s", "must be positive");
    }
    s.mac.validate();
    if (s.nodes.empty()) {
        invalid("nodes", "at least one node is required");
    }
    for (std::size_t i = 0; i < s.nodes.size(); ++i) {
        const auto& n = s.nodes[i];
        const std::string path = "nodes[" + std::to_string(i) + "]";
        if (n.id < 0) {
            invalid(path + ".id", "must be >= 0");
        }
        if (n.address == kBroadcastAddress) {
            invalid(path + ".address", "0xFFFF is reserved for broadcast");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (s.nodes[j].id == n.id) {
                invalid(path + ".id", "duplicate node id");
            }
            if (s.nodes[j].address == n.address) {
                invalid(path + ".address", "duplicate address");
            }
        }
        if (!n.position && !n.gain_row) {
            invalid(path, "either position or gain_row is required");
        }
        if (n.ambient && *n.ambient < 0.0) {
            invalid(path + ".ambient", "must be >= 0");
        }
        if (n.noise_sigma && *n.noise_sigma < 0.0) {
            invalid(path + ".noise_sigma", "must be >= 0");
        }
    }
    for (std::size_t i = 0; i < s.nodes.size(); ++i) {
        const auto& n = s.nodes[i];
        const std::string path = "nodes[" + std::to_string(i) + "]";
        if (n.gain_row) {
            for (const auto& [receiver, g] : *n.gain_row) {
                const std::string gpath = path + ".gain_row." + std::to_string(receiver);
                bool known = false;
                for (const auto& m : s.nodes) {
                    known = known || m.id == receiver;
                }
                if (!known) {
                    invalid(gpath, "references an undeclared node");
                }
                if (g < 0.0) {
                    invalid(gpath, "must be >= 0");
                }
            }
        } else {
            for (const auto& m : s.nodes) {
                if (m.id != n.id && !m.position) {
                    invalid(path + ".position",
                            "inverse-square gains need a position on every receiver (or use gain_row)");
                }
            }
        }
    }
    for (std::size_t i = 0; i < s.traffic.size(); ++i) {
        const auto& f = s.traffic[i];
        const std::string path = "traffic[" + std::to_string(i) + "]";
        for (std::size_t j = 0; j < i; ++j) {
            if (s.traffic[j].id == f.id) {
                invalid(path + ".id", "duplicate flow id");
            }
        }
        bool src_ok = false;
        bool dst_ok = false;
        for (const auto& n : s.nodes) {
            src_ok = src_ok || n.id == f.src;
            dst_ok = dst_ok || n.id == f.dst;
        }
        if (!src_ok) {
            invalid(path + ".src", "references an undeclared node");
        }
        if (!dst_ok) {
            invalid(path + ".dst", "references an undeclared node");
        }
        if (f.src == f.dst) {
            invalid(path + ".dst", "must differ from src");
        }
        if (f.kind != FlowKind::Ping) {
            if (f.payload_bytes < 6 || f.payload_bytes > s.mac.max_payload) {
                invalid(path + ".payload_bytes", "must be in 6..mac.max_payload");
            }
        } else {
            if (f.data_bytes + 8 > s.mac.max_payload) {
                invalid(path + ".data_bytes", "echo header plus data exceeds mac.max_payload");
            }
            if (!(f.ipi_s > 0.0)) {
                invalid(path + ".ipi_s", "must be positive");
            }
        }
        if (f.rate_bps < 0.0) {
            invalid(path + ".rate_bps", "must be >= 0");
        }
        if (f.start_s < 0.0) {
            invalid(path + ".start_s", "must be >= 0");
        }
        if (f.stop_s && *f.stop_s < f.start_s) {
            invalid(path + ".stop_s", "must not precede start_s");
        }
    }
    // Channel invariants are checked on the assembled parameters.
    try {
        build_channel_params(s).validate(s.mac.symbol_period);
    } catch (const Error& e) {
        if (e.code() == Errc::NonPositiveDistance) {
            invalid("nodes", "two nodes share a position");
        }
        throw;
    }
}

channel::ChannelParams build_channel_params(const ScenarioSpec& s)
{
    const std::size_t n = s.nodes.size();
    channel::ChannelParams p;
    p.gain.assign(n, std::vector<double>(n, 0.0));
    p.ambient.assign(n, s.channel.ambient);
    p.noise_sigma.assign(n, s.channel.noise_sigma);
    p.adc_bits = s.channel.adc_bits;
    p.full_scale = s.channel.full_scale;
    p.switch_latency = s.channel.switch_latency;
    p.intensity_high = s.channel.intensity_high;
    p.intensity_low = s.channel.intensity_low;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& node = s.nodes[i];
        if (node.ambient) {
            p.ambient[i] = *node.ambient;
        }
        if (node.noise_sigma) {
            p.noise_sigma[i] = *node.noise_sigma;
        }
        if (node.gain_row) {
            for (const auto& [receiver, g] : *node.gain_row) {
                p.gain[i][s.node_index(receiver)] = g;
            }
            continue;
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) {
                continue;
            }
            const auto& a = *node.position;
            const auto& b = *s.nodes[j].position;
            const double d = std::hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
            p.gain[i][j] = channel::link_gain(d, s.channel.g0);
        }
    }
    return p;
}

std::vector<NodeSetup> build_node_setups(const ScenarioSpec& s)
{
    std::vector<NodeSetup> out;
    for (const auto& n : s.nodes) {
        out.push_back(NodeSetup{n.address, s.mac});
    }
    return out;
}

nlohmann::json scenario_to_json(const ScenarioSpec& s)
{
    json j;
    j["name"] = s.name;
    j["seed"] = s.seed;
    j["t_end_s"] = to_seconds(s.t_end);
    j["report_interval_s"] = to_seconds(s.report_interval);
    j["channel"] = {
        {"ambient", s.channel.ambient},
        {"noise_sigma", s.channel.noise_sigma},
        {"adc_bits", s.channel.adc_bits},
        {"full_scale", s.channel.full_scale},
        {"switch_latency_us", to_microseconds(s.channel.switch_latency)},
        {"g0", s.channel.g0},
        {"intensity_high", s.channel.intensity_high},
        {"intensity_low", s.channel.intensity_low},
    };
    json mac = {
        {"symbol_period_us", to_microseconds(s.mac.symbol_period)},
        {"cw_min", s.mac.cw_min},
        {"cw_max", s.mac.cw_max},
        {"basic_sense_symbols", s.mac.basic_sense_symbols},
        {"collision_busy_symbols", s.mac.collision_busy_symbols},
        {"max_retx", s.mac.max_retx},
        {"max_payload", s.mac.max_payload},
        {"queue_capacity", s.mac.queue_capacity},
        {"proc_overhead_a_us", to_microseconds(s.mac.proc_overhead_a)},
        {"proc_overhead_b_us", to_microseconds(s.mac.proc_overhead_b)},
    };
    if (s.mac.ack_timeout) {
        mac["ack_timeout_us"] = to_microseconds(*s.mac.ack_timeout);
    }
    j["mac"] = mac;
    j["nodes"] = json::array();
    for (const auto& n : s.nodes) {
        json node = {{"id", n.id}, {"address", n.address}};
        if (n.position) {
            node["position"] = *n.position;
        }
        if (n.gain_row) {
            json row = json::object();
            for (const auto& [receiver, g] : *n.gain_row) {
                row[std::to_string(receiver)] = g;
            }
            node["gain_row"] = row;
        }
        if (n.ambient) {
            node["ambient"] = *n.ambient;
        }
        if (n.noise_sigma) {
            node["noise_sigma"] = *n.noise_sigma;
        }
        j["nodes"].push_back(node);
    }
    j["traffic"] = json::array();
    for (const auto& f : s.traffic) {
        json flow = {
            {"id", f.id},
            {"kind", to_string(f.kind)},
            {"src", f.src},
            {"dst", f.dst},
            {"start_s", f.start_s},
            {"enabled", f.enabled},
        };
        if (f.kind == FlowKind::Ping) {
            flow["data_bytes"] = f.data_bytes;
            flow["ipi_s"] = f.ipi_s;
            flow["count"] = f.count;
        } else {
            flow["payload_bytes"] = f.payload_bytes;
            flow["rate_bps"] = f.rate_bps;
        }
        if (f.stop_s) {
            flow["stop_s"] = *f.stop_s;
        }
        j["traffic"].push_back(flow);
    }
    return j;
}

}  // namespace openvlc::harness
