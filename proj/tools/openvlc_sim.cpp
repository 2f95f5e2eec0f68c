// openvlc-sim: run scenarios, sweep saturation throughput, calibrate the
// processing-time model and poke at the frame codec.

#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "openvlc/experiments.hpp"
#include "openvlc/frame_codec.hpp"
#include "openvlc/scenario.hpp"

namespace fs = std::filesystem;
using namespace openvlc;
using namespace openvlc::harness;

namespace {

void write_file(const fs::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(Errc::InvalidArgument, "cannot write " + path.string());
    }
    out << content;
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::InvalidArgument, "cannot read " + path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string read_input(const std::string& path)
{
    if (path == "-") {
        std::stringstream buf;
        buf << std::cin.rdbuf();
        return buf.str();
    }
    return read_file(path);
}

std::string strip_space(const std::string& text)
{
    std::string out;
    for (char c : text) {
        if (!std::isspace(static_cast<unsigned char>(c))) {
            out += c;
        }
    }
    return out;
}

void emit(const std::string& path, const std::string& text)
{
    if (path.empty()) {
        std::cout << text;
    } else {
        write_file(path, text);
    }
}

// "50..1000:50" or "50,200,1000".
std::vector<std::size_t> parse_payloads(const std::string& text)
{
    std::vector<std::size_t> out;
    const auto dots = text.find("..");
    if (dots != std::string::npos) {
        const auto colon = text.find(':', dots);
        const std::size_t lo = std::stoul(text.substr(0, dots));
        const std::size_t hi = std::stoul(text.substr(dots + 2, colon - dots - 2));
        const std::size_t step = colon == std::string::npos ? 1 : std::stoul(text.substr(colon + 1));
        if (step == 0 || lo > hi) {
            throw Error(Errc::InvalidArgument, "payload range must be lo..hi:step with step > 0");
        }
        for (std::size_t p = lo; p <= hi; p += step) {
            out.push_back(p);
        }
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(std::stoul(item));
    }
    return out;
}

// "50:6,1000:18"
std::vector<TargetPoint> parse_targets(const std::string& text)
{
    std::vector<TargetPoint> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            throw Error(Errc::InvalidArgument, "target points look like 50:6,1000:18");
        }
        out.push_back(TargetPoint{std::stoul(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
    }
    return out;
}

void write_outputs(const fs::path& dir, const ScenarioSpec& spec, const RunResult& result)
{
    fs::create_directories(dir);
    const auto flows = flow_infos(spec);
    write_file(dir / "metrics.csv", metrics_csv(result.report, flows));
    write_file(dir / "rtt.csv", rtt_csv(result.report));
    std::string jsonl;
    for (const auto& ev : result.trace) {
        jsonl += to_jsonl(ev);
        jsonl += '\n';
    }
    write_file(dir / "trace.jsonl", jsonl);
    write_file(dir / "summary.json", summary_json(result.report, spec).dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Event-driven simulator for a half-duplex visible light network"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> t_end;
    std::string out_dir = "out";
    auto* run = app.add_subcommand("run", "Run one scenario and write metrics, RTTs, trace and summary");
    run->add_option("scenario", scenario_path, "Scenario JSON file")->required()->check(CLI::ExistingFile);
    run->add_option("--seed", seed, "Override the scenario seed");
    run->add_option("--t-end", t_end, "Override the simulated duration in seconds");
    run->add_option("--out", out_dir, "Output directory");

    std::string sweep_scenario;
    std::string payloads = "50..1000:50";
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    std::string sweep_csv;
    auto* sweep = app.add_subcommand("sweep", "Saturation throughput against payload size");
    sweep->add_option("scenario", sweep_scenario, "Scenario with one saturation flow")
        ->required()
        ->check(CLI::ExistingFile);
    sweep->add_option("--payloads", payloads, "lo..hi:step or a comma list");
    sweep->add_option("--seed", seed, "Override the scenario seed");
    sweep->add_option("--t-end", t_end, "Override the simulated duration in seconds");
    sweep->add_option("--jobs", jobs, "Parallel simulations");
    sweep->add_option("--csv", sweep_csv, "Also write the table to this file");

    std::string targets = "50:6,1000:18";
    std::string calib_scenario;
    std::string calib_write;
    auto* calib = app.add_subcommand("calibrate", "Fit proc_overhead_a/b to two throughput targets");
    calib->add_option("--target-points", targets, "payload:kbps,payload:kbps");
    calib->add_option("--scenario", calib_scenario, "Take MAC and channel settings from this scenario")
        ->check(CLI::ExistingFile);
    calib->add_option("--write", calib_write, "Write the scenario back with the fitted values to this path");

    auto* codec = app.add_subcommand("codec", "Frame codec debugging, hex in and out");
    codec->require_subcommand(1);
    std::string enc_in;
    std::string enc_out;
    std::uint16_t dst = 2;
    std::uint16_t src = 1;
    std::uint16_t proto = 0x0011;
    bool enc_symbols = false;
    auto* encode = codec->add_subcommand("encode", "Payload hex -> coded frame hex (or symbols)");
    encode->add_option("input", enc_in, "File with the payload as hex, '-' for stdin")->required();
    encode->add_option("--out", enc_out, "Output file (default stdout)");
    encode->add_option("--dst", dst, "Destination address");
    encode->add_option("--src", src, "Source address");
    encode->add_option("--protocol", proto, "Protocol id");
    encode->add_flag("--symbols", enc_symbols, "Emit the 0/1 symbol string, sync header included");
    std::string dec_in;
    std::string dec_out;
    bool dec_symbols = false;
    auto* decode = codec->add_subcommand("decode", "Coded frame hex (or symbols) -> frame fields");
    decode->add_option("input", dec_in, "File with the coded frame as hex, '-' for stdin")->required();
    decode->add_option("--out", dec_out, "Write the result here (default stdout)");
    decode->add_flag("--symbols", dec_symbols, "Input is a 0/1 symbol string with the sync header");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            auto spec = load_scenario(scenario_path);
            if (seed) {
                spec.seed = *seed;
            }
            if (t_end) {
                spec.t_end = seconds(*t_end);
            }
            const auto result = run_scenario(spec);
            write_outputs(out_dir, spec, result);
            std::cout << summary_json(result.report, spec).dump(2) << "\n";
        } else if (*sweep) {
            auto spec = load_scenario(sweep_scenario);
            if (seed) {
                spec.seed = *seed;
            }
            if (t_end) {
                spec.t_end = seconds(*t_end);
            }
            const auto list = parse_payloads(payloads);
            const auto points = run_saturation(spec, list, jobs);
            std::ostringstream table;
            table << "payload_bytes,throughput_kbps,analytic_kbps\n";
            for (const auto& p : points) {
                table << p.payload << ',' << p.kbps << ',' << p.analytic_kbps << '\n';
            }
            std::cout << table.str();
            if (!sweep_csv.empty()) {
                write_file(sweep_csv, table.str());
            }
        } else if (*calib) {
            ScenarioSpec spec;
            if (!calib_scenario.empty()) {
                spec = load_scenario(calib_scenario);
            }
            const auto points = parse_targets(targets);
            if (points.size() != 2) {
                throw Error(Errc::InvalidArgument, "calibrate needs exactly two target points");
            }
            const auto c = calibrate(spec.mac, spec.channel.switch_latency, points[0], points[1]);
            spec.mac.proc_overhead_a = c.proc_overhead_a;
            spec.mac.proc_overhead_b = c.proc_overhead_b;
            nlohmann::json j = {
                {"proc_overhead_a_us", to_microseconds(c.proc_overhead_a)},
                {"proc_overhead_b_us", to_microseconds(c.proc_overhead_b)},
                {"check", nlohmann::json::array()},
            };
            for (const auto& p : points) {
                j["check"].push_back({{"payload", p.payload},
                                      {"target_kbps", p.kbps},
                                      {"analytic_kbps",
                                       analytic_saturation_kbps(spec.mac, spec.channel.switch_latency, p.payload)}});
            }
            std::cout << j.dump(2) << "\n";
            if (!calib_write.empty()) {
                write_file(calib_write, scenario_to_json(spec).dump(2) + "\n");
            }
        } else if (*encode) {
            const frame::MacFrame f{dst, src, proto, frame::from_hex(strip_space(read_input(enc_in)))};
            std::string text;
            if (enc_symbols) {
                for (auto sym : frame::frame_to_symbols(f).concatenated()) {
                    text += sym == phy::Symbol::High ? '1' : '0';
                }
            } else {
                text = frame::to_hex(frame::fec_encode(frame::frame_serialize(f)));
            }
            emit(enc_out, text + "\n");
        } else if (*decode) {
            const std::string raw = strip_space(read_input(dec_in));
            std::vector<phy::Symbol> body;
            if (dec_symbols) {
                // Symbols stand in for noiseless samples: HIGH full scale, LOW zero.
                std::vector<phy::AdcSample> samples;
                std::vector<phy::Symbol> symbols;
                for (char c : raw) {
                    if (c != '0' && c != '1') {
                        throw Error(Errc::ParseError, "symbol input may only contain 0 and 1");
                    }
                    symbols.push_back(c == '1' ? phy::Symbol::High : phy::Symbol::Low);
                    samples.push_back(phy::AdcSample{static_cast<std::uint16_t>(c == '1' ? 1023 : 0)});
                }
                const auto sync = phy::locate_frame(samples);
                body.assign(symbols.begin() + static_cast<std::ptrdiff_t>(sync.payload_symbol_start), symbols.end());
            } else {
                body = phy::manchester_encode_bytes(frame::from_hex(raw));
            }
            const auto d = frame::symbols_to_frame_detailed(body);
            nlohmann::ordered_json j;
            j["length"] = d.frame.length();
            j["dst"] = d.frame.dst;
            j["src"] = d.frame.src;
            j["protocol"] = d.frame.protocol;
            j["ack"] = d.frame.is_ack();
            j["corrected_bytes"] = d.corrected_bytes;
            j["payload_hex"] = frame::to_hex(d.frame.payload);
            emit(dec_out, j.dump(2) + "\n");
        }
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
