// Command-line front end: generate, run, sweep, servebench, serve.
//
// Exit codes: 0 success, 1 I/O or input-file problem, 2 configuration
// problem (bad field, unknown mode, bad flags).

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "react/react.hpp"

namespace {

using namespace react;

constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;

struct ConfigFailure {
  std::string message;
};

// A config file that exists but does not parse is a config problem (2); a
// missing one stays an I/O problem (1).
template <class F>
auto config_step(F&& f) {
  try {
    return f();
  } catch (const ParseError& e) {
    throw ConfigFailure{e.what()};
  }
}

Presets presets_from(const std::string& path) {
  return config_step([&] { return path.empty() ? load_presets() : load_presets(path); });
}

ScenarioConfig config_from(const std::string& path, const Presets& presets) {
  if (path.empty()) {
    ScenarioConfig c;
    if (auto it = presets.network.find("wifi30"); it != presets.network.end()) c.network = it->second;
    return c;
  }
  return config_step([&] {
    json doc = read_json_file(path);
    // Unless the document names a network, runs use the wifi30 preset.
    if (doc.is_object() && !doc.contains("network") && presets.network.count("wifi30")) doc["network"] = "wifi30";
    return parse_config(doc, presets);
  });
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::trunc) {
  std::ofstream out(path, std::ios::out | mode);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

// Appends a CSV row, writing the header first if the file is new or empty.
void append_csv(const std::string& path, const std::string& header, const std::string& row) {
  bool fresh = true;
  if (std::ifstream probe(path); probe) fresh = probe.peek() == std::ifstream::traits_type::eof();
  auto out = open_out(path, std::ios::app);
  if (fresh) out << header << '\n';
  out << row << '\n';
}

std::vector<int> parse_int_list(const std::string& text, const std::string& field) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError(field, "expected a comma-separated list of positive integers");
    }
  }
  if (out.empty()) throw ConfigError(field, "empty list");
  return out;
}

std::pair<std::string, std::uint16_t> parse_bind(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) throw ConfigError("bind", "expected host:port");
  try {
    const int port = std::stoi(text.substr(colon + 1));
    if (port < 0 || port > 65535) throw std::out_of_range("port");
    return {text.substr(0, colon), static_cast<std::uint16_t>(port)};
  } catch (const std::exception&) {
    throw ConfigError("bind", "bad port in " + text);
  }
}

// ---- subcommands ------------------------------------------------------------

struct Common {
  std::string config;
  std::string presets;
  std::optional<std::uint64_t> seed;
  std::string out;
};

int cmd_generate(const Common& c) {
  const Presets presets = presets_from(c.presets);
  const ScenarioConfig cfg = config_from(c.config, presets);
  if (c.out.empty()) throw ConfigError("out", "generate needs --out");
  const Trace trace = generate_scene(cfg.scene, c.seed.value_or(cfg.seed));
  save_trace(trace, c.out);
  std::cerr << "wrote " << trace.frames.size() << " frames to " << c.out << '\n';
  return 0;
}

struct RunArgs {
  std::string trace;
  std::string mode = "edge-cloud";
  std::string events;
  std::string predictions;
};

int cmd_run(const Common& c, const RunArgs& a) {
  const auto mode = parse_mode(a.mode);
  if (!mode) throw ConfigError("mode", "unknown mode \"" + a.mode + "\"");
  const Presets presets = presets_from(c.presets);
  ScenarioConfig cfg = config_from(c.config, presets);
  if (c.seed) cfg.seed = *c.seed;
  if (a.trace.empty()) throw ConfigError("trace", "run needs --trace");
  const Trace trace = load_trace(a.trace);
  if (trace.frames.empty()) throw IoError(a.trace + ": trace has no frames");

  const PipelineResult result = run_pipeline(trace, cfg, *mode);
  const RunReport report = report_for(trace, cfg, *mode, result);

  if (!a.events.empty()) {
    auto out = open_out(a.events);
    for (const auto& e : result.events) out << to_json(e).dump() << '\n';
  }
  if (!a.predictions.empty()) {
    auto out = open_out(a.predictions);
    for (std::size_t f = 0; f < result.predictions.size(); ++f) {
      json objs = json::array();
      for (const auto& o : result.predictions[f]) objs.push_back(to_json(o));
      out << json{{"frame", trace.frames[f].frame_index}, {"objects", objs}}.dump() << '\n';
    }
  }
  if (!c.out.empty()) append_csv(c.out, kReportCsvHeader, csv_row(report));
  std::cout << to_json(report).dump(2) << '\n';
  return 0;
}

int cmd_sweep(const Common& c, const std::string& aggregate_path, unsigned threads) {
  if (c.config.empty()) throw ConfigError("config", "sweep needs --config <sweep spec>");
  const Presets presets = presets_from(c.presets);
  SweepSpec spec = config_step([&] {
    json doc = read_json_file(c.config);
    SweepSpec s = parse_sweep(doc);
    if (!s.base.contains("network") && presets.network.count("wifi30")) s.base["network"] = "wifi30";
    return s;
  });
  if (c.seed) spec.first_seed = *c.seed;
  const auto rows = config_step([&] { return run_sweep(spec, presets, threads); });

  const std::string head = spec.axis1.name + "," + spec.axis2.name + ",seed," + kReportCsvHeader;
  std::ostringstream rows_csv;
  rows_csv << head << '\n';
  for (const auto& r : rows)
    rows_csv << axis_value_text(r.value1) << ',' << axis_value_text(r.value2) << ',' << r.seed << ','
             << csv_row(r.report) << '\n';

  std::ostringstream agg_csv;
  agg_csv << spec.axis1.name << ',' << spec.axis2.name << ",mode,mean_map05,n_seeds\n";
  for (const auto& a : aggregate(rows))
    agg_csv << axis_value_text(a.value1) << ',' << axis_value_text(a.value2) << ',' << to_string(a.mode) << ','
            << format_number(a.mean_map) << ',' << a.n << '\n';

  if (c.out.empty()) {
    std::cout << rows_csv.str();
  } else {
    open_out(c.out) << rows_csv.str();
  }
  std::string agg = aggregate_path;
  if (agg.empty() && !c.out.empty()) agg = c.out + ".agg.csv";
  if (agg.empty()) {
    std::cout << '\n' << agg_csv.str();
  } else {
    open_out(agg) << agg_csv.str();
  }
  return 0;
}

struct BenchArgs {
  std::string clients = "2,10,25,50,75,100";
  double period_ms = 2000.0;
  double duration_ms = 60000.0;
  std::string server;  // preset name
  bool live = false;
  std::string target = "127.0.0.1:7070";
};

int cmd_servebench(const Common& c, const BenchArgs& a) {
  const Presets presets = presets_from(c.presets);
  ScenarioConfig cfg = config_from(c.config, presets);
  if (!a.server.empty()) cfg.server = presets.server_preset(a.server, "server");
  const auto counts = parse_int_list(a.clients, "clients");
  if (a.period_ms <= 0 || a.duration_ms <= 0) throw ConfigError("period", "period and duration must be positive");

  std::ostringstream csv;
  csv << "n_clients,throughput_rps,p50_ms,p95_ms,mean_ms,queue_len_max,completed,dropped\n";
  for (int n : counts) {
    ServerStats s;
    if (a.live) {
      const auto [host, port] = parse_bind(a.target);
      s = load_test(host, port, {n, a.period_ms, a.duration_ms});
    } else {
      const auto arrivals = client_arrivals(n, a.period_ms, a.duration_ms);
      s = run_server_sim(arrivals, cfg.server, a.duration_ms).stats;
    }
    csv << n << ',' << format_number(s.throughput_rps) << ',' << format_number(s.p50_ms) << ','
        << format_number(s.p95_ms) << ',' << format_number(s.mean_ms) << ',' << s.queue_len_max << ','
        << s.completed << ',' << s.dropped << '\n';
  }
  if (c.out.empty()) {
    std::cout << csv.str();
  } else {
    open_out(c.out) << csv.str();
  }
  return 0;
}

volatile std::sig_atomic_t g_stop = 0;

int cmd_serve(const Common& c, const std::string& trace_path, const std::string& bind, const std::string& server) {
  const Presets presets = presets_from(c.presets);
  ScenarioConfig cfg = config_from(c.config, presets);
  if (!server.empty()) cfg.server = presets.server_preset(server, "server");
  if (trace_path.empty()) throw ConfigError("trace", "serve needs --trace");
  const auto [host, port] = parse_bind(bind);
  ModelService service(load_trace(trace_path), {cfg.server, cfg.cloud_profile, host, port});
  service.start();
  std::cerr << "serving on " << host << ':' << service.port() << '\n';
  std::signal(SIGINT, [](int) { g_stop = 1; });
  std::signal(SIGTERM, [](int) { g_stop = 1; });
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  service.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge-cloud streaming detection simulator"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON config file");
    sub->add_option("--presets", common.presets, "network/server presets file");
    sub->add_option("--seed", common.seed, "override the seed");
    sub->add_option("--out", common.out, "output file");
  };

  auto* gen = app.add_subcommand("generate", "generate a synthetic scene trace");
  add_common(gen);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "run one pipeline mode over a trace and report metrics");
  add_common(run);
  run->add_option("--trace", run_args.trace, "trace file (JSON lines)");
  run->add_option("--mode", run_args.mode, "edge-only | cloud-only | edge-cloud | ef-edge-det");
  run->add_option("--events", run_args.events, "write the event log (JSON lines)");
  run->add_option("--predictions", run_args.predictions, "write per-frame predictions (JSON lines)");

  std::string aggregate_path;
  unsigned threads = 0;
  auto* sweep = app.add_subcommand("sweep", "run a two-axis parameter sweep");
  add_common(sweep);
  sweep->add_option("--aggregate", aggregate_path, "per-cell mean CSV (default: <out>.agg.csv)");
  sweep->add_option("--threads", threads, "worker threads (default: all cores)");

  BenchArgs bench;
  auto* sb = app.add_subcommand("servebench", "model-server throughput and latency versus client count");
  add_common(sb);
  sb->add_option("--clients", bench.clients, "comma-separated client counts");
  sb->add_option("--period", bench.period_ms, "per-client request period, ms");
  sb->add_option("--duration", bench.duration_ms, "benchmark length, ms");
  sb->add_option("--server", bench.server, "server preset name");
  sb->add_flag("--live", bench.live, "load-test a running service instead of simulating");
  sb->add_option("--target", bench.target, "service address for --live");

  std::string serve_trace, bind = "127.0.0.1:7070", serve_server;
  auto* serve = app.add_subcommand("serve", "start the model service");
  add_common(serve);
  serve->add_option("--trace", serve_trace, "trace file the service answers from");
  serve->add_option("--bind", bind, "host:port");
  serve->add_option("--server", serve_server, "server preset name");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) return cmd_generate(common);
    if (*run) return cmd_run(common, run_args);
    if (*sweep) return cmd_sweep(common, aggregate_path, threads);
    if (*sb) return cmd_servebench(common, bench);
    if (*serve) return cmd_serve(common, serve_trace, bind, serve_server);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ConfigFailure& e) {
    std::cerr << "config error: " << e.message << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitConfig;
}
