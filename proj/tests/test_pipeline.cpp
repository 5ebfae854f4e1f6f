#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "koopgait/error.hpp"
#include "koopgait/pipeline.hpp"
#include "support.hpp"

using namespace koopgait;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int status = -1;
  std::string output;  // stdout and stderr
};

CliResult cli(const std::string& args) {
  const std::string cmd = std::string(KOOPGAIT_CLI_PATH) + " " + args + " 2>&1";
  CliResult r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), p)) r.output += buf.data();
  const int raw = pclose(p);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small synthetic run that finishes in a few seconds.
PipelineConfig tiny_config(const fs::path& out) {
  auto cfg = desk_config();
  cfg.w = 8;
  cfg.et_units = 32;
  cfg.synthetic->w = 8;
  cfg.synthetic->n_subjects = 3;
  cfg.synthetic->cycles_per_subject = 4;
  cfg.synthetic->noise = 0.01;
  cfg.train.epochs = 3;
  cfg.matrix.epochs = 20;
  cfg.max_iter = 50;
  cfg.output = out;
  return cfg;
}

}  // namespace

TEST_CASE("cli help lists every subcommand and rejects unknown flags") {
  const auto help = cli("--help");
  CHECK(help.status == 0);
  for (const char* sub : {"gen-synthetic", "segment", "train-coder", "fit-k", "classify", "synth", "flops", "run"})
    CHECK(help.output.find(sub) != std::string::npos);
  const auto run_help = cli("run --help");
  for (const char* flag : {"--profile", "--config", "--synthetic", "--seed", "--threads", "--method"})
    CHECK(run_help.output.find(flag) != std::string::npos);
  CHECK(cli("run --no-such-flag").status != 0);
  CHECK(cli("").status != 0);
}

TEST_CASE("missing input directory is reported by the segment stage") {
  testing::ScratchDir dir("missing");
  const auto r = cli("run --profile default --input " + (dir / "nope").string() + " --out " + (dir / "run").string());
  CHECK(r.status == 2);
  CHECK(r.output.find("MissingDirectory") != std::string::npos);
  CHECK(r.output.find("[segment]") != std::string::npos);
}

TEST_CASE("config JSON round trip and profile presets") {
  auto cfg = desk_config();
  cfg.seed = 99;
  cfg.matrix.method = FitMethod::Analytic;
  cfg.logreg_mode = LogregMode::OneVsRest;
  cfg.train.loss_weights = {0.5, 1.0, 0.25};
  const auto back = from_json(to_json(cfg), default_config());
  CHECK(to_json(back) == to_json(cfg));
  CHECK(back.train.seed == 99);

  nlohmann::json repro;
  repro["config"] = to_json(cfg);
  CHECK(to_json(from_json(repro, default_config())) == to_json(cfg));

  CHECK(default_config().w == 64);
  CHECK(default_config().et_units == 2048);
  CHECK(default_config().reg_weight == 200.0);
  CHECK(desk_config().w == 32);
  CHECK_THROWS_AS(config_for_profile("huge"), Error);

  auto bad = desk_config();
  bad.et_units = 100;
  CHECK_THROWS_WITH_AS(validate(bad), doctest::Contains("BadConfig"), Error);
  CHECK_THROWS_AS(from_json(nlohmann::json{{"w", "wide"}}, desk_config()), Error);
}

TEST_CASE("manifests round trip with paths resolved against their directory") {
  testing::ScratchDir dir("manifest");
  write_cycle_manifest({{"a.ika", 3, 0}, {"b.ika", 4, 12}}, dir / "manifest.csv");
  const auto recs = read_cycle_manifest(dir.path());
  REQUIRE(recs.size() == 2);
  CHECK(recs[1].path == fs::absolute(dir / "b.ika"));
  CHECK(recs[1].subject_id == 4);
  CHECK(recs[1].start_index == 12);
  CHECK(slurp(dir / "manifest.csv") == "cycle_path,subject_id,start_index\na.ika,3,0\nb.ika,4,12\n");

  std::ofstream(dir / "broken.csv") << "cycle_path,subject_id,start_index\na.ika,3\n";
  CHECK_THROWS_AS(read_cycle_manifest(dir / "broken.csv"), Error);
  CHECK_THROWS_AS(read_cycle_manifest(dir / "absent.csv"), Error);
}

TEST_CASE("split keeps at least one cycle per subject on each side") {
  std::vector<CycleRecord> recs;
  for (int s = 0; s < 3; ++s)
    for (int i = 0; i < 5; ++i) recs.push_back({"c", s, static_cast<std::size_t>(i)});
  recs.push_back({"c", 7, 0});
  std::vector<CycleRecord> train, test;
  split_manifest(recs, 0.8, train, test);
  CHECK(train.size() == 3 * 4 + 1);
  CHECK(test.size() == 3);
  for (const auto& r : test) CHECK(r.start_index == 4);
  split_manifest(recs, 0.01, train, test);
  CHECK(train.size() == 3 + 1);
}

TEST_CASE("subject ids come from leading digits") {
  CHECK(subject_from_name("012-nm-01", 5) == 12);
  CHECK(subject_from_name("7", 5) == 7);
  CHECK(subject_from_name("nm-01", 5) == 5);
  CHECK(subject_from_name("", 9) == 9);
}

TEST_CASE("flops subcommand prints the bundled coder cost") {
  testing::ScratchDir dir("flops");
  const auto r = cli("flops --spec " + std::string(KOOPGAIT_DATA_DIR) + "/specs/invka_default.json --out " +
                     (dir / "cost.csv").string());
  CHECK(r.status == 0);
  CHECK(r.output.find("16777216") != std::string::npos);
  CHECK(r.output.find("0.017 GFLOPs") != std::string::npos);
  CHECK(slurp(dir / "cost.csv").find("total,all,16777216,") != std::string::npos);
}

TEST_CASE("stages run one at a time through the cli") {
  testing::ScratchDir dir("stages");
  const std::string d = dir.path().string();
  REQUIRE(cli("gen-synthetic --out " + d + "/data --subjects 2 --cycles 3 --size 8").status == 0);
  const auto seg = cli("segment --in " + d + "/data --out " + d + "/cycles --size 8");
  REQUIRE(seg.status == 0);
  CHECK(read_cycle_manifest(dir / "cycles").size() >= 4);
  REQUIRE(cli("train-coder --cycles " + d + "/cycles --profile desk --epochs 2 --out " + d + "/coder").status == 0);
  CHECK(fs::exists(dir / "coder" / "prototype_k.ika"));
  CHECK(slurp(dir / "coder" / "trace.csv").rfind("epoch,loss0,loss1,loss2,total,seconds\n", 0) == 0);
  REQUIRE(cli("fit-k --coder " + d + "/coder --cycles " + d + "/cycles --method analytic --out " + d + "/k").status ==
          0);
  const auto cl = cli("classify --train " + d + "/k --test " + d + "/k --out " + d + "/report.csv --maps " + d +
                      "/maps --max-iter 20");
  REQUIRE(cl.status == 0);
  CHECK(cl.output.find("rank-1 accuracy") != std::string::npos);
  CHECK(slurp(dir / "report.csv").rfind("sample_id,true,predicted,top1,score1", 0) == 0);
  const auto sy = cli("synth --coder " + d + "/coder --k " + d + "/k/k_0000.ika --frame " + d +
                      "/cycles/cycle_0000.ika --steps 3 --fractional 0.5 --out " + d + "/synth");
  CHECK(sy.status == 0);
  for (const char* f : {"future_01.pgm", "future_03_median.pgm", "metrics.csv"}) CHECK(fs::exists(dir / "synth" / f));
  CHECK(fs::exists(dir / "synth" / "interp.pgm") != (sy.output.find("BranchCut") != std::string::npos));
}

TEST_CASE("a whole run is deterministic and writes a replayable repro file") {
  testing::ScratchDir dir("run");
  const auto a = run_pipeline(tiny_config(dir / "a"));
  const auto b = run_pipeline(tiny_config(dir / "b"));
  CHECK(a.hashes.size() > 10);
  CHECK(a.hashes == b.hashes);
  CHECK(a.classify.n_test == 3);

  const auto repro = load_config(dir / "a" / "repro.json", default_config());
  CHECK(repro.w == 8);
  CHECK(repro.train.epochs == 3);
  auto replay = repro;
  replay.output = dir / "c";
  CHECK(run_pipeline(replay).hashes == a.hashes);
}
