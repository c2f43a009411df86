#pragma once

// Serving-time emulation: uplink transfer + inference + downlink transfer.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "react/core.hpp"
#include "react/random.hpp"

namespace react {

// Per-direction delay parameters. Which fields matter depends on the
// profile kind.
struct LinkDelay {
  double constant_ms = 0.0;
  double mu = 0.0;  // log-normal location (log ms)
  double sigma = 0.0;
  std::filesystem::path trace_path;  // Trace kind: one delay in ms per line
  std::vector<double> trace;         // Trace kind: in-memory replay values
};

struct NetworkProfile {
  enum class Kind { Constant, LogNormal, Trace };
  Kind kind = Kind::Constant;
  LinkDelay uplink;
  LinkDelay downlink;
  double bandwidth_mbps = 24.0;
  double payload_kb = 60.0;          // per-frame upload
  double downlink_payload_kb = 2.0;  // annotations
};

// Transfer time of `kb` kilobytes at `mbps`, in milliseconds.
inline double serialization_ms(double kb, double mbps) {
  if (kb <= 0.0) return 0.0;
  return kb * 8.0 / mbps;
}

inline std::vector<double> load_delay_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open delay trace " + path.string());
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      std::size_t used = 0;
      const double v = std::stod(line, &used);
      if (v < 0.0) throw std::invalid_argument("negative");
      out.push_back(v);
    } catch (const std::exception&) {
      throw ParseError(path.string() + ": line " + std::to_string(lineno) + ": not a delay in ms");
    }
  }
  return out;
}

// Stateful sampler for one profile. Trace replay keeps a cursor per direction,
// so an instance must stay confined to one event loop.
class NetworkEmulator {
 public:
  explicit NetworkEmulator(NetworkProfile profile) : profile_(std::move(profile)) {
    if (profile_.bandwidth_mbps <= 0.0) throw ConfigError("network.bandwidth_mbps", "must be positive");
    if (profile_.kind == NetworkProfile::Kind::Trace) {
      load(profile_.uplink, "network.uplink");
      load(profile_.downlink, "network.downlink");
    }
  }

  const NetworkProfile& profile() const noexcept { return profile_; }

  double sample_uplink(Rng& rng) {
    return sample(profile_.uplink, up_cursor_, rng) +
           serialized(serialization_ms(profile_.payload_kb, profile_.bandwidth_mbps));
  }

  double sample_downlink(Rng& rng) {
    return sample(profile_.downlink, down_cursor_, rng) +
           serialized(serialization_ms(profile_.downlink_payload_kb, profile_.bandwidth_mbps));
  }

  double serving_time(double server_latency_ms, Rng& rng) {
    const double up = sample_uplink(rng);
    const double down = sample_downlink(rng);
    return up + server_latency_ms + down;
  }

 private:
  static void load(LinkDelay& link, const std::string& field) {
    if (link.trace.empty() && !link.trace_path.empty()) link.trace = load_delay_trace(link.trace_path);
    if (link.trace.empty()) throw ConfigError(field, "delay trace is empty");
  }

  // Trace replay carries its own transfer time.
  double serialized(double ms) const { return profile_.kind == NetworkProfile::Kind::Trace ? 0.0 : ms; }

  double sample(const LinkDelay& link, std::size_t& cursor, Rng& rng) const {
    switch (profile_.kind) {
      case NetworkProfile::Kind::Constant:
        return link.constant_ms;
      case NetworkProfile::Kind::LogNormal:
        return rng.lognormal(link.mu, link.sigma);
      case NetworkProfile::Kind::Trace: {
        const double v = link.trace[cursor];
        cursor = (cursor + 1) % link.trace.size();
        return v;
      }
    }
    return 0.0;
  }

  NetworkProfile profile_;
  std::size_t up_cursor_ = 0;
  std::size_t down_cursor_ = 0;
};

// Linearly interpolated percentile of a sample, q in [0,100].
inline double percentile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double rank = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(rank);
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (rank - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace react
