#pragma once

// Runs and sweeps: pipeline + evaluation glued together, report rows, and
// the k x m style parameter grids.

#include <algorithm>
#include <atomic>
#include <future>
#include <iomanip>
#include <sstream>
#include <thread>

#include "react/config.hpp"
#include "react/eval.hpp"
#include "react/pipeline.hpp"

namespace react {

struct RunReport {
  std::string run_id;
  PipelineMode mode = PipelineMode::EdgeCloud;
  int k = 0;
  int m = 0;
  std::uint64_t seed = 0;
  MetricsReport metrics;
  double p50_ms = 0.0;          // cloud serving time
  double p95_ms = 0.0;
  double throughput_rps = 0.0;  // cloud requests per simulated second
};

inline std::string make_run_id(PipelineMode mode, int k, int m, std::uint64_t seed) {
  return std::string(to_string(mode)) + "-k" + std::to_string(k) + "-m" + std::to_string(m) + "-s" +
         std::to_string(seed);
}

inline RunReport report_for(const Trace& trace, const ScenarioConfig& cfg, PipelineMode mode,
                            const PipelineResult& result) {
  RunReport r;
  r.mode = mode;
  r.k = cfg.k;
  r.m = cfg.m;
  r.seed = cfg.seed;
  r.run_id = make_run_id(mode, cfg.k, cfg.m, cfg.seed);
  const auto preds = prediction_detections(result);
  r.metrics = evaluate(preds, trace.frames);
  if (!result.serving_ms.empty()) {
    r.p50_ms = percentile(result.serving_ms, 50.0);
    r.p95_ms = percentile(result.serving_ms, 95.0);
  }
  const double seconds = static_cast<double>(trace.frames.size()) * cfg.frame_period_ms / 1000.0;
  if (seconds > 0.0) r.throughput_rps = static_cast<double>(result.cloud_requests) / seconds;
  return r;
}

inline RunReport run_once(const Trace& trace, const ScenarioConfig& cfg, PipelineMode mode) {
  return report_for(trace, cfg, mode, run_pipeline(trace, cfg, mode));
}

// Generates the scene for `seed` and runs with the same seed for detectors.
inline RunReport run_seeded(ScenarioConfig cfg, PipelineMode mode, std::uint64_t seed) {
  cfg.seed = seed;
  const Trace trace = generate_scene(cfg.scene, seed);
  return run_once(trace, cfg, mode);
}

inline std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

inline const char* kReportCsvHeader =
    "run_id,mode,k,m,map05,cls,loc,both,dupe,bkg,miss,p50_ms,p95_ms,throughput_rps";

inline std::string csv_row(const RunReport& r) {
  std::ostringstream os;
  os << r.run_id << ',' << to_string(r.mode) << ',' << r.k << ',' << r.m << ',';
  os << (r.metrics.map_05 ? format_number(*r.metrics.map_05) : std::string("no-ground-truth"));
  for (std::size_t e = 0; e < kErrorTypes; ++e) os << ',' << format_number(r.metrics.errors.delta_map[e]);
  os << ',' << format_number(r.p50_ms) << ',' << format_number(r.p95_ms) << ',' << format_number(r.throughput_rps);
  return os.str();
}

inline json to_json(const MetricsReport& m) {
  json j;
  j["map05"] = m.map_05 ? json(*m.map_05) : json("no-ground-truth");
  json ap = json::object();
  for (const auto& [c, v] : m.per_class_ap) ap[std::to_string(c)] = v;
  j["per_class_ap"] = ap;
  json counts = json::object();
  for (const auto& [c, n] : m.counts) counts[std::to_string(c)] = {{"tp", n.tp}, {"fp", n.fp}, {"fn", n.fn}};
  j["counts"] = counts;
  json errors = json::object();
  json error_counts = json::object();
  for (std::size_t e = 0; e < kErrorTypes; ++e) {
    const std::string name(to_string(static_cast<ErrorType>(e)));
    errors[name] = m.errors.delta_map[e];
    error_counts[name] = m.errors.count[e];
  }
  j["error_breakdown"] = errors;
  j["error_counts"] = error_counts;
  return j;
}

inline json to_json(const RunReport& r) {
  json j = to_json(r.metrics);
  j["run_id"] = r.run_id;
  j["mode"] = std::string(to_string(r.mode));
  j["k"] = r.k;
  j["m"] = r.m;
  j["seed"] = r.seed;
  j["p50_ms"] = r.p50_ms;
  j["p95_ms"] = r.p95_ms;
  j["throughput_rps"] = r.throughput_rps;
  return j;
}

// ---- sweeps ---------------------------------------------------------------

struct SweepAxis {
  std::string name;  // config field, dotted for nested fields (e.g. "scene.n_frames")
  std::vector<json> values;
};

struct SweepSpec {
  json base = json::object();  // config document every cell starts from
  SweepAxis axis1;
  SweepAxis axis2;
  int n_seeds = 1;
  std::uint64_t first_seed = 1;
  std::vector<PipelineMode> modes{PipelineMode::EdgeCloud};
};

inline SweepSpec parse_sweep(const json& j) {
  SweepSpec s;
  detail::FieldReader r(j, "");
  if (const json* v = r.find("base")) {
    if (!v->is_object()) throw ConfigError("base", "expected an object");
    s.base = *v;
  }
  auto axis = [&](const char* key, SweepAxis& out) {
    const json* v = r.find(key);
    if (!v) throw ConfigError(key, "missing");
    detail::FieldReader a(*v, key);
    a.get("name", out.name);
    if (out.name.empty()) throw ConfigError(a.path("name"), "missing");
    const json* vals = a.find("values");
    if (!vals || !vals->is_array() || vals->empty()) throw ConfigError(a.path("values"), "expected a non-empty array");
    out.values.assign(vals->begin(), vals->end());
    a.finish();
  };
  axis("axis1", s.axis1);
  axis("axis2", s.axis2);
  r.get("n_seeds", s.n_seeds);
  r.get("first_seed", s.first_seed);
  if (s.n_seeds < 1) throw ConfigError("n_seeds", "must be >= 1");
  if (const json* v = r.find("modes")) {
    if (!v->is_array() || v->empty()) throw ConfigError("modes", "expected a non-empty array");
    s.modes.clear();
    for (const auto& m : *v) {
      const auto mode = m.is_string() ? parse_mode(m.get<std::string>()) : std::nullopt;
      if (!mode) throw ConfigError("modes", "unknown mode " + m.dump());
      s.modes.push_back(*mode);
    }
  }
  r.finish();
  return s;
}

inline void set_field(json& doc, const std::string& dotted, const json& value) {
  json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    if (!node->contains(key) || !(*node)[key].is_object()) (*node)[key] = json::object();
    node = &(*node)[key];
    start = dot + 1;
  }
}

struct SweepCell {
  json value1;
  json value2;
  ScenarioConfig config;
};

// Configs for every (axis1, axis2) cell, row-major in axis order. Unknown
// axis names surface here as ConfigErrors from the strict parser.
inline std::vector<SweepCell> sweep_cells(const SweepSpec& spec, const Presets& presets) {
  std::vector<SweepCell> cells;
  for (const auto& a : spec.axis1.values)
    for (const auto& b : spec.axis2.values) {
      json doc = spec.base;
      set_field(doc, spec.axis1.name, a);
      set_field(doc, spec.axis2.name, b);
      cells.push_back({a, b, parse_config(doc, presets)});
    }
  return cells;
}

struct SweepRow {
  std::size_t cell = 0;
  json value1;
  json value2;
  std::uint64_t seed = 0;
  RunReport report;
};

// One row per (cell, seed, mode), ordered that way. Cells run concurrently;
// the seeds of one cell run in order on one thread.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec, const Presets& presets, unsigned threads = 0) {
  const auto cells = sweep_cells(spec, presets);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());

  std::vector<std::vector<SweepRow>> per_cell(cells.size());
  auto run_cell = [&](std::size_t i) {
    for (int s = 0; s < spec.n_seeds; ++s) {
      const std::uint64_t seed = spec.first_seed + static_cast<std::uint64_t>(s);
      ScenarioConfig cfg = cells[i].config;
      cfg.seed = seed;
      const Trace trace = generate_scene(cfg.scene, seed);
      for (auto mode : spec.modes)
        per_cell[i].push_back({i, cells[i].value1, cells[i].value2, seed, run_once(trace, cfg, mode)});
    }
  };

  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> workers;
  for (unsigned t = 0; t < std::min<std::size_t>(threads, cells.size()); ++t)
    workers.push_back(std::async(std::launch::async, [&] {
      for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(i);
    }));
  for (auto& w : workers) w.get();  // rethrows

  std::vector<SweepRow> rows;
  for (auto& c : per_cell) rows.insert(rows.end(), c.begin(), c.end());
  return rows;
}

struct SweepAggregate {
  std::size_t cell = 0;
  json value1;
  json value2;
  PipelineMode mode = PipelineMode::EdgeCloud;
  double mean_map = 0.0;
  std::size_t n = 0;  // seeds with ground truth
};

inline std::vector<SweepAggregate> aggregate(const std::vector<SweepRow>& rows) {
  std::vector<SweepAggregate> out;
  for (const auto& row : rows) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const SweepAggregate& a) { return a.cell == row.cell && a.mode == row.report.mode; });
    if (it == out.end()) {
      out.push_back({row.cell, row.value1, row.value2, row.report.mode, 0.0, 0});
      it = std::prev(out.end());
    }
    if (row.report.metrics.map_05) {
      it->mean_map += *row.report.metrics.map_05;
      ++it->n;
    }
  }
  for (auto& a : out)
    if (a.n) a.mean_map /= static_cast<double>(a.n);
  return out;
}

inline std::string axis_value_text(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace react
