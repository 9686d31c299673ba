#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "glot/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

fs::path work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "glot_test_cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Run run_glot(const std::string& args, const std::string& env = "") {
  const char* bin = std::getenv("GLOT_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "GLOT_BIN is not set");
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" + bin + "' " + args + " 2>>'" +
                          (work_dir() / "stderr.log").string() + "'";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

/// Small planted XOR dataset shared by the training tests.
const fs::path& xor_data() {
  static const fs::path dir = [] {
    const fs::path d = work_dir() / "xor";
    const Run r = run_glot("gen-diagnostic --mode xor --n 96 --n-test 48 --len 24 --ratio 0.75 --out " + q(d));
    REQUIRE(r.code == 0);
    return d;
  }();
  return dir;
}

std::string xor_flags(const fs::path& out, int epochs = 1) {
  const fs::path& d = xor_data();
  return "--data " + q(d / "train.jsonl") + " --eval-data " + q(d / "test.jsonl") + " --backbone " +
         q(d / "backbone.gec") + " --epochs " + std::to_string(epochs) + " --batch 16 --out " + q(out);
}

}  // namespace

TEST_CASE("gen-diagnostic defaults") {
  const fs::path a = work_dir() / "gen_a", b = work_dir() / "gen_b";
  const Run ra = run_glot("gen-diagnostic --out " + q(a));
  REQUIRE(ra.code == 0);
  const json j = json::parse(ra.out);
  CHECK(j.at("train_lines") == 10000);
  CHECK(j.at("test_lines") == 2000);
  CHECK(count_lines(a / "train.jsonl") == 10000);
  CHECK(count_lines(a / "test.jsonl") == 2000);
  std::ifstream in(a / "train.jsonl");
  std::string line;
  for (int i = 0; i < 50 && std::getline(in, line); ++i) {
    const json rec = json::parse(line);
    CHECK(rec.at("tokens").size() == 256);
    CHECK(rec.at("meta").at("d_r") == 0.9);
    CHECK(rec.at("meta").at("injection_pos").get<int>() <= 230);
  }
  REQUIRE(run_glot("gen-diagnostic --out " + q(b)).code == 0);
  for (const char* f : {"train.jsonl", "test.jsonl", "backbone.gec"}) CHECK(slurp(a / f) == slurp(b / f));
}

TEST_CASE("gen-diagnostic xor writes a certificate") {
  const fs::path& d = xor_data();
  const json cert = json::parse(slurp(d / "certificate.json"));
  const json& c = cert.at("certificate");
  CHECK(c.at("holds") == true);
  CHECK(c.at("min_signal_cosine").get<double>() > c.at("tau_hi").get<double>());
  CHECK(c.at("max_signal_distractor_cosine").get<double>() < c.at("tau_lo").get<double>());
  CHECK(cert.at("signal_ids").at("A").size() == 4);
  CHECK(count_lines(d / "train.jsonl") == 96);
}

TEST_CASE("usage and data errors map to exit codes") {
  CHECK(run_glot("").code == 2);
  CHECK(run_glot("frobnicate").code == 2);
  CHECK(run_glot("gen-diagnostic --ratio 1.5 --out " + q(work_dir() / "bad")).code == 2);
  CHECK(run_glot("train --data " + q(work_dir() / "missing.jsonl") + " --backbone x --out " + q(work_dir() / "r")).code == 3);
  CHECK(run_glot("train " + xor_flags(work_dir() / "bad_pool") + " --pooler nope").code == 2);
  CHECK(run_glot("train " + xor_flags(work_dir() / "bad_combo") + " --pooler mean --freeze-readout").code == 2);
  CHECK(run_glot("--version").code == 0);
  CHECK(run_glot("--help").code == 0);
}

TEST_CASE("train records the defaults in the manifest") {
  const fs::path out = work_dir() / "train_glot";
  const Run r = run_glot("train " + xor_flags(out));
  REQUIRE(r.code == 0);
  const json m = json::parse(slurp(out / "manifest.json"));
  CHECK(m.at("schema") == glot::cli::kManifestSchema);
  CHECK(m.at("version") == glot::cli::kVersion);
  const json& model = m.at("options").at("model");
  CHECK(model.at("pooler") == "glot");
  CHECK(model.at("graph").at("tau") == 0.6);
  CHECK(model.at("gnn").at("layers") == 2);
  CHECK(model.at("gnn").at("hidden") == 128);
  CHECK(model.at("gnn").at("jk") == "cat");
  CHECK(model.at("gnn").at("variant") == "gat");
  CHECK(m.at("options").at("train").at("seed") == 42);
  CHECK(m.at("inputs").size() == 3);
  for (const char* f : {"params.json", "report.json", "loss.csv"}) CHECK(fs::exists(out / f));
  const json report = json::parse(slurp(out / "report.json"));
  CHECK(report.at("steps") == 6);
}

TEST_CASE("training from a manifest reproduces the run bitwise") {
  const fs::path a = work_dir() / "manifest_a", b = work_dir() / "manifest_b";
  REQUIRE(run_glot("train " + xor_flags(a) + " --variant gin --layers 1 --hidden 16").code == 0);
  REQUIRE(run_glot("train --manifest " + q(a / "manifest.json") + " --out " + q(b)).code == 0);
  CHECK(slurp(a / "loss.csv") == slurp(b / "loss.csv"));
  CHECK(slurp(a / "params.json") == slurp(b / "params.json"));
}

TEST_CASE("GLOT_SEED overrides --seed") {
  const fs::path a = work_dir() / "seed_a", b = work_dir() / "seed_b";
  REQUIRE(run_glot("train " + xor_flags(a) + " --pooler mean --seed 5").code == 0);
  REQUIRE(run_glot("train " + xor_flags(b) + " --pooler mean --seed 123", "GLOT_SEED=5").code == 0);
  CHECK(json::parse(slurp(b / "manifest.json")).at("options").at("train").at("seed") == 5);
  CHECK(slurp(a / "loss.csv") == slurp(b / "loss.csv"));
  CHECK(run_glot("train " + xor_flags(b) + " --pooler mean", "GLOT_SEED=abc").code == 2);
}

TEST_CASE("mean pooler trains the head only") {
  const fs::path out = work_dir() / "train_mean";
  const Run r = run_glot("train " + xor_flags(out) + " --pooler mean");
  REQUIRE(r.code == 0);
  // d = 64, binary head.
  CHECK(json::parse(r.out).at("trainable_params") == 64 * 2 + 2);
}

TEST_CASE("zero-layer frozen glot equals the mean pooler") {
  const fs::path a = work_dir() / "eq_mean", b = work_dir() / "eq_glot";
  const Run ra = run_glot("train " + xor_flags(a, 2) + " --pooler mean --lr 1e-2");
  const Run rb = run_glot("train " + xor_flags(b, 2) +
                          " --pooler glot --layers 0 --hidden 64 --identity-input --freeze-readout --lr 1e-2");
  REQUIRE(ra.code == 0);
  REQUIRE(rb.code == 0);
  const json ma = json::parse(ra.out).at("metrics"), mb = json::parse(rb.out).at("metrics");
  CHECK(json::parse(rb.out).at("trainable_params") == 64 * 2 + 2);
  for (auto it = ma.begin(); it != ma.end(); ++it)
    CHECK(std::abs(it->get<double>() - mb.at(it.key()).get<double>()) <= 1e-6);
  // The loss curves agree far more tightly than the contract asks.
  std::istringstream ca(slurp(a / "loss.csv")), cb(slurp(b / "loss.csv"));
  std::string la, lb;
  std::getline(ca, la);
  std::getline(cb, lb);
  while (std::getline(ca, la) && std::getline(cb, lb)) {
    const double va = std::stod(la.substr(la.rfind(',') + 1)), vb = std::stod(lb.substr(lb.rfind(',') + 1));
    CHECK(std::abs(va - vb) < 1e-9);
  }
}

TEST_CASE("eval reproduces the training metrics and dumps weights") {
  const fs::path out = work_dir() / "eval_run";
  const Run r = run_glot("train " + xor_flags(out) + " --hidden 8 --readout-hidden 8");
  REQUIRE(r.code == 0);
  const fs::path& d = xor_data();
  const fs::path weights = out / "weights.csv";
  const Run e = run_glot("eval --params " + q(out / "params.json") + " --data " + q(d / "test.jsonl") + " --backbone " +
                     q(d / "backbone.gec") + " --metrics accuracy,mcc --weights-out " + q(weights));
  REQUIRE(e.code == 0);
  const json em = json::parse(e.out).at("metrics"), tm = json::parse(r.out).at("metrics");
  CHECK(em.at("accuracy") == tm.at("accuracy"));
  CHECK(em.at("mcc") == tm.at("mcc"));
  CHECK(count_lines(weights) == 1 + 48 * 24);
  CHECK(run_glot("eval --params " + q(out / "params.json") + " --data " + q(d / "test.jsonl") + " --backbone " +
             q(d / "backbone.gec") + " --metrics bleu")
            .code == 2);
}

TEST_CASE("tau sweep") {
  const fs::path out = work_dir() / "sweep";
  const Run r = run_glot("sweep-tau " + xor_flags(out) + " --hidden 8 --readout-hidden 8");
  REQUIRE(r.code == 0);
  std::ifstream in(out / "sweep.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "tau,accuracy,edge_density");
  std::vector<double> taus, density;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string a, b, c;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    std::getline(ss, c, ',');
    taus.push_back(std::stod(a));
    density.push_back(std::stod(c));
  }
  CHECK(taus == std::vector<double>{0.0, 0.2, 0.4, 0.6, 0.8});
  for (std::size_t i = 1; i < density.size(); ++i) CHECK(density[i] <= density[i - 1]);
  CHECK(run_glot("sweep-tau " + xor_flags(out) + " --grid ''").code == 2);
  CHECK(run_glot("sweep-tau " + xor_flags(out) + " --grid 0.2,x").code == 2);
}

TEST_CASE("bench schema") {
  const Run r = run_glot("bench --len 64 --dim 32 --repeats 10");
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j.at("schema") == "glot.bench/1");
  CHECK(j.at("len") == 64);
  CHECK(j.at("repeats") == 10);
  CHECK(j.at("graph_construction_ms").at("mean").get<double>() > 0.0);
  CHECK(j.at("graph_construction_ms").contains("std"));
  CHECK(j.at("glot_forward_ms").at("mean").get<double>() >= j.at("graph_construction_ms").at("mean").get<double>());
  const double pct = j.at("overhead_percent").get<double>();
  CHECK(pct > 0.0);
  CHECK(pct <= 100.0);
}

TEST_CASE("grid parsing and timing summary") {
  CHECK(glot::cli::parse_grid("0.0,0.2, 0.4") == std::vector<double>{0.0, 0.2, 0.4});
  CHECK_THROWS(glot::cli::parse_grid(""));
  const std::vector<double> samples{1.0, 2.0, 3.0};
  const auto t = glot::cli::summarize(samples);
  CHECK(t.mean_ms == doctest::Approx(2.0));
  CHECK(t.std_ms == doctest::Approx(1.0));
}
