#include "cli_runner.hpp"
#include "support.hpp"

#include <sstream>

using namespace react;
using namespace testing_support;
using cli_runner::run;

namespace {

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);)
    if (!l.empty()) out.push_back(l);
  return out;
}

// Parses the JSON report a run prints (everything from the first '{').
json report_of(const std::string& output) { return json::parse(output.substr(output.find('{'))); }

struct Scene {
  TempFile config{"cfg.json"};
  TempFile trace{"trace.jsonl"};
  explicit Scene(const std::string& cfg = R"({"scene": {"n_frames": 150}})") {
    config.write(cfg);
    const auto r = run("generate --config " + config.str() + " --seed 3 --out " + trace.str());
    EXPECT_EQ(r.code, 0) << r.output;
  }
};

}  // namespace

TEST(Cli, GenerateIsLoadableAndDeterministic) {
  TempFile cfg("cfg.json"), a("a.jsonl"), b("b.jsonl");
  cfg.write(R"({"scene": {"n_frames": 100}})");
  ASSERT_EQ(run("generate --config " + cfg.str() + " --seed 1 --out " + a.str()).code, 0);
  ASSERT_EQ(run("generate --config " + cfg.str() + " --seed 1 --out " + b.str()).code, 0);
  EXPECT_EQ(a.read(), b.read());
  const Trace t = load_trace(a.path());
  EXPECT_EQ(t.frames.size(), 100u);
  EXPECT_EQ(validate(t), "");
}

TEST(Cli, GenerateWithDefaults) {
  TempFile out("d.jsonl");
  ASSERT_EQ(run("generate --seed 1 --out " + out.str()).code, 0);
  EXPECT_EQ(load_trace(out.path()).frames.size(), 900u);
}

TEST(Cli, GenerateEmptyWorld) {
  TempFile cfg("cfg.json"), out("e.jsonl");
  cfg.write(R"({"scene": {"n_frames": 20, "spawn_rate": 0, "n_objects_mean": 0}})");
  ASSERT_EQ(run("generate --config " + cfg.str() + " --out " + out.str()).code, 0);
  const Trace t = load_trace(out.path());
  ASSERT_EQ(t.frames.size(), 20u);
  for (const auto& f : t.frames) EXPECT_TRUE(f.objects.empty());
}

TEST(Cli, RunAcceptsAllModes) {
  Scene s;
  for (const char* mode : {"edge-only", "cloud-only", "edge-cloud", "ef-edge-det"}) {
    const auto r = run("run --trace " + s.trace.str() + " --mode " + mode);
    ASSERT_EQ(r.code, 0) << mode << ": " << r.output;
    EXPECT_EQ(report_of(r.output)["mode"], mode);
  }
}

TEST(Cli, RunExitCodes) {
  Scene s;
  TempFile bad("bad.json"), broken("broken.json");
  bad.write(R"({"kk": 1})");
  broken.write("{");
  EXPECT_EQ(run("run --trace " + s.trace.str() + " --mode sideways").code, 2);
  const auto unknown = run("run --trace " + s.trace.str() + " --config " + bad.str());
  EXPECT_EQ(unknown.code, 2);
  EXPECT_NE(unknown.output.find("kk"), std::string::npos);
  EXPECT_EQ(run("run --trace " + s.trace.str() + " --config " + broken.str()).code, 2);
  EXPECT_EQ(run("run --trace /nonexistent/trace.jsonl").code, 1);
  EXPECT_EQ(run("run --trace " + s.trace.str() + " --config /nonexistent/cfg.json").code, 1);
  EXPECT_EQ(run("frobnicate").code, 2);
}

TEST(Cli, PerfectRunScoresOne) {
  Scene s(R"({
    "scene": {"n_frames": 150},
    "k": 1, "m": 1,
    "edge_profile": {"miss_rate": 0, "miss_persistence": 0, "fp_rate": 0, "label_confusion": 0, "loc_sigma": 0,
                     "score_mean": 1, "score_sigma": 0, "latency": {"kind": "constant", "constant_ms": 0}},
    "cloud_profile": {"miss_rate": 0, "miss_persistence": 0, "fp_rate": 0, "label_confusion": 0, "loc_sigma": 0,
                      "score_mean": 1, "score_sigma": 0, "latency": {"kind": "constant", "constant_ms": 0}},
    "network": "local"
  })");
  const auto r = run("run --trace " + s.trace.str() + " --config " + s.config.str());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(report_of(r.output)["map05"], 1.0);
}

TEST(Cli, RunIsDeterministicAndAppendsCsv) {
  Scene s;
  TempFile p1("p1.jsonl"), p2("p2.jsonl"), e1("e1.jsonl"), csv("report.csv");
  const std::string base = "run --trace " + s.trace.str() + " --config " + s.config.str() + " --out " + csv.str();
  const auto a = run(base + " --predictions " + p1.str() + " --events " + e1.str());
  const auto b = run(base + " --predictions " + p2.str());
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(p1.read(), p2.read());
  EXPECT_EQ(a.output, b.output);
  EXPECT_EQ(lines(p1.read()).size(), 150u);
  EXPECT_FALSE(e1.read().empty());

  const auto rows = lines(csv.read());
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], kReportCsvHeader);
  EXPECT_EQ(rows[1], rows[2]);
}

TEST(Cli, SweepCountsRowsAndMatchesRun) {
  TempFile spec("sweep.json"), out("sweep.csv");
  spec.write(R"({
    "base": {"scene": {"n_frames": 120}},
    "axis1": {"name": "k", "values": [5, 10, 20]},
    "axis2": {"name": "m", "values": [30, 60, 100]},
    "n_seeds": 5,
    "modes": ["edge-cloud", "edge-only"]
  })");
  const auto r = run("sweep --config " + spec.str() + " --out " + out.str());
  ASSERT_EQ(r.code, 0) << r.output;
  const auto rows = lines(out.read());
  ASSERT_EQ(rows.size(), 1u + 45u * 2u);
  EXPECT_EQ(std::count_if(rows.begin(), rows.end(), [](auto& l) { return l.find(",edge-only,") != std::string::npos; }),
            45);
  std::string agg_text;
  {
    std::ifstream in(out.str() + ".agg.csv");
    agg_text.assign(std::istreambuf_iterator<char>(in), {});
  }
  std::filesystem::remove(out.str() + ".agg.csv");
  const auto agg = lines(agg_text);
  ASSERT_EQ(agg.size(), 1u + 9u * 2u);

  // Row for (k=5, m=30, seed 1, edge-cloud) against a standalone run.
  TempFile cfg("cfg.json"), trace("t.jsonl");
  cfg.write(R"({"scene": {"n_frames": 120}, "k": 5, "m": 30})");
  ASSERT_EQ(run("generate --config " + cfg.str() + " --seed 1 --out " + trace.str()).code, 0);
  TempFile csv("one.csv");
  ASSERT_EQ(run("run --trace " + trace.str() + " --config " + cfg.str() + " --seed 1 --out " + csv.str()).code, 0);
  const std::string single = lines(csv.read())[1];
  EXPECT_EQ(rows[1], "5,30,1," + single);
}

TEST(Cli, SweepRejectsUnknownAxis) {
  TempFile spec("sweep.json");
  spec.write(R"({"axis1": {"name": "kay", "values": [5]}, "axis2": {"name": "m", "values": [30]}})");
  const auto r = run("sweep --config " + spec.str());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("kay"), std::string::npos);
}

TEST(Cli, ServebenchRowsAndTrends) {
  TempFile out("bench.csv");
  const auto r = run("servebench --clients 2,10,50 --server v100 --out " + out.str());
  ASSERT_EQ(r.code, 0) << r.output;
  const auto rows = lines(out.read());
  ASSERT_EQ(rows.size(), 4u);

  TempFile full("full.csv");
  ASSERT_EQ(run("servebench --clients 2,10,25,50,75,100 --server v100 --out " + full.str()).code, 0);
  double prev_p95 = 0.0, last_tp = 0.0;
  for (std::size_t i = 1; i < lines(full.read()).size(); ++i) {
    std::istringstream row(lines(full.read())[i]);
    std::string cell;
    std::vector<double> v;
    while (std::getline(row, cell, ',')) v.push_back(std::stod(cell));
    EXPECT_GE(v[3], prev_p95);
    prev_p95 = v[3];
    last_tp = v[1];
  }
  const double sat = load_presets().server_preset("v100").saturation_rps();
  EXPECT_NEAR(last_tp, sat, 0.1 * sat);
}

TEST(Cli, ServebenchBadClientList) { EXPECT_EQ(run("servebench --clients 2,x").code, 2); }
