#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* p = std::getenv("ERA_CLI");
  REQUIRE_MESSAGE(p != nullptr, "ERA_CLI must point at the built binary");
  return p;
}

int run(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in, "missing file: " << path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// small world and short run so the whole suite stays fast
const std::string kWorld = "--n-facts 60 --n-train 200 --n-eval 80";
const std::string kTrain = "--epochs 1 --sft-warmup-steps 50";

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::current_path() / name) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("no arguments and unknown subcommands are usage errors") {
  CHECK(run("") == 1);
  CHECK(run("frobnicate") == 1);
  CHECK(run("gen --no-such-flag 1") == 1);
}

TEST_CASE("gen writes config and datasets, deterministically") {
  TempDir d1("cli_gen_a"), d2("cli_gen_b");
  CHECK(run("gen --run-dir " + d1.str() + " " + kWorld) == 0);
  CHECK(fs::exists(d1.path / "config.json"));
  CHECK(fs::exists(d1.path / "train.jsonl"));
  CHECK(fs::exists(d1.path / "eval.jsonl"));

  CHECK(run("gen --run-dir " + d2.str() + " " + kWorld) == 0);
  CHECK(slurp(d1.path / "train.jsonl") == slurp(d2.path / "train.jsonl"));
  CHECK(slurp(d1.path / "eval.jsonl") == slurp(d2.path / "eval.jsonl"));

  // a different seed must change the dataset bytes
  TempDir d3("cli_gen_c");
  CHECK(run("gen --run-dir " + d3.str() + " " + kWorld + " --seed 8") == 0);
  CHECK(slurp(d1.path / "train.jsonl") != slurp(d3.path / "train.jsonl"));
}

TEST_CASE("flag range violations are usage errors, config-file violations are validation errors") {
  TempDir d("cli_bad");
  CHECK(run("gen --run-dir " + d.str() + " --idk-ratio 1.5") == 1);

  fs::create_directories(d.path);
  {
    std::ofstream out(d.path / "bad.json");
    out << "{\"idk_ratio\": 1.5}\n";
  }
  CHECK(run("--config " + (d.path / "bad.json").string() + " gen --run-dir " + d.str()) == 2);
  {
    std::ofstream out(d.path / "mangled.json");
    out << "{not json\n";
  }
  CHECK(run("--config " + (d.path / "mangled.json").string() + " gen --run-dir " +
            d.str()) != 0);
}

TEST_CASE("train/eval round trip with deterministic checkpoints") {
  TempDir d("cli_roundtrip");
  REQUIRE(run("gen --run-dir " + d.str() + " " + kWorld) == 0);
  CHECK(run("train --run-dir " + d.str() + " " + kTrain + " --variant full") == 0);
  CHECK(fs::exists(d.path / "checkpoint_full.json"));
  CHECK(fs::exists(d.path / "checkpoint_full.bin"));
  CHECK(fs::exists(d.path / "checkpoint_full_log.csv"));

  const std::string blob = slurp(d.path / "checkpoint_full.bin");
  CHECK(run("train --run-dir " + d.str() + " " + kTrain + " --variant full") == 0);
  CHECK(slurp(d.path / "checkpoint_full.bin") == blob);

  CHECK(run("eval --run-dir " + d.str()) == 0);
  for (const char* f : {"metrics.json", "ece.csv", "simplex.csv", "jsd.csv"})
    CHECK(fs::exists(d.path / f));

  auto metrics = nlohmann::json::parse(slurp(d.path / "metrics.json"));
  for (const char* key : {"recall", "precision", "f1", "abstain_f1", "overall_f1",
                          "denoise_rate", "context_util"}) {
    const double v = metrics.at(key).get<double>();
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(metrics.at("ece_per_quadrant").size() == 4);

  // analyze never trains: it works off the existing full checkpoint
  CHECK(run("analyze --run-dir " + d.str()) == 0);
  CHECK(fs::exists(d.path / "analyze.json"));
  auto analysis = nlohmann::json::parse(slurp(d.path / "analyze.json"));
  CHECK(analysis.contains("full"));
  CHECK(analysis.contains("baseline_logprob_t-1"));

  // log has a header plus one row per step
  std::istringstream log(slurp(d.path / "checkpoint_full_log.csv"));
  std::string line;
  int rows = 0;
  REQUIRE(std::getline(log, line));
  CHECK(line.find("step") != std::string::npos);
  CHECK(line.find("w_ds") != std::string::npos);
  while (std::getline(log, line)) ++rows;
  CHECK(rows == 200);
}

TEST_CASE("unknown variant is a usage error") {
  TempDir d("cli_variant");
  REQUIRE(run("gen --run-dir " + d.str() + " " + kWorld) == 0);
  CHECK(run("train --run-dir " + d.str() + " " + kTrain + " --variant banana") == 1);
}

TEST_CASE("eval refuses mismatched world hashes unless overridden") {
  TempDir d1("cli_hash_a"), d2("cli_hash_b");
  REQUIRE(run("gen --run-dir " + d1.str() + " " + kWorld) == 0);
  REQUIRE(run("train --run-dir " + d1.str() + " " + kTrain + " --variant full") == 0);
  REQUIRE(run("gen --run-dir " + d2.str() + " " + kWorld + " --seed 9") == 0);

  const std::string cross = "eval --run-dir " + d1.str() +
                            " --checkpoint " + (d1.path / "checkpoint_full.json").string() +
                            " --data " + (d2.path / "eval.jsonl").string();
  CHECK(run(cross) == 2);
  CHECK(run(cross + " --allow-hash-mismatch") == 0);
}

TEST_CASE("missing inputs fail with a nonzero exit") {
  TempDir d("cli_missing");
  CHECK(run("train --run-dir " + d.str() + " " + kTrain + " --variant full") != 0);
  CHECK(run("eval --run-dir " + d.str()) != 0);
  CHECK(run("analyze --run-dir " + d.str()) != 0);
}

TEST_CASE("gradcheck subcommand passes and honors --configs") {
  CHECK(run("gradcheck --configs 5") == 0);
}

TEST_CASE("verify reproduces a fresh run byte-for-byte") {
  TempDir d("cli_verify");
  REQUIRE(run("gen --run-dir " + d.str() + " " + kWorld) == 0);
  REQUIRE(run("train --run-dir " + d.str() + " " + kTrain + " --variant full") == 0);
  REQUIRE(run("eval --run-dir " + d.str()) == 0);
  CHECK(run("verify --run-dir " + d.str()) == 0);

  // tamper with a digit in the eval set; verify must now fail
  auto text = slurp(d.path / "eval.jsonl");
  std::size_t pos = text.size() / 2;
  while (!std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
  text[pos] = text[pos] == '1' ? '2' : '1';
  {
    std::ofstream out(d.path / "eval.jsonl", std::ios::binary);
    out << text;
  }
  CHECK(run("verify --run-dir " + d.str()) == 2);
}
