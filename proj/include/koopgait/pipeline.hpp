#pragma once

// File-based stages. Every stage reads and writes only IKA1 tensors, PGM
// images, CSV manifests and JSON, so each one can be rerun on its own.
//
// Layout of a run directory:
//   data/<id>-synth/frame_NNNN.pgm   (synthetic input only)
//   cycles/cycle_NNNN.ika            [T, w, w]
//   cycles/manifest.csv              cycle_path,subject_id,start_index
//   cycles/train.csv, cycles/test.csv
//   coder/                           checkpoint, prototype_k.ika, trace.csv
//   k/train, k/test                  k_NNNN.ika + manifest.csv
//   classify/report.csv, classify/maps/
//   repro.json

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "koopgait/classify.hpp"
#include "koopgait/dataio.hpp"
#include "koopgait/training.hpp"

namespace koopgait {

struct PipelineConfig {
  std::string profile = "default";
  int w = 64;
  int cycle_len = 12;
  int et_units = 2048;  // must equal w^2 / 2
  bool use_minima = false;
  TrainConfig train{};
  MatrixTrainConfig matrix{};
  double reg_weight = 200.0;
  int max_iter = 2000;
  LogregMode logreg_mode = LogregMode::Multinomial;
  double train_fraction = 0.8;
  int threads = 1;
  std::uint64_t seed = 7;
  std::filesystem::path input;                  // silhouette root; empty when synthetic
  std::optional<SyntheticSpec> synthetic;       // generated input
  std::filesystem::path output = "run";
};

// Hyper-parameter table defaults: w=64, T=12, 2048 ET units, reg 200.
PipelineConfig default_config();
// Desk-scale preset: w=32 synthetic walkers with a shorter coder schedule.
PipelineConfig desk_config();
PipelineConfig config_for_profile(const std::string& name);

// Throws BadConfig on inconsistent values.
void validate(const PipelineConfig& cfg);

nlohmann::json to_json(const PipelineConfig& cfg);
// Keys missing from `j` keep the values already in `base`. Accepts a bare
// config object or a repro.json (whose "config" member is used).
PipelineConfig from_json(const nlohmann::json& j, PipelineConfig base);
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base);

// Thread count from KOOPGAIT_THREADS, or `fallback` when unset.
int threads_from_env(int fallback);

struct CycleRecord {
  std::filesystem::path path;  // relative to the manifest directory
  int subject_id = 0;
  std::size_t start_index = 0;
};

void write_cycle_manifest(const std::vector<CycleRecord>& records, const std::filesystem::path& csv);
// `source` may be a manifest CSV or a directory holding manifest.csv.
// Returned paths are absolute.
std::vector<CycleRecord> read_cycle_manifest(const std::filesystem::path& source);
std::vector<GaitCycle> load_cycles(const std::vector<CycleRecord>& records);

struct OperatorRecord {
  std::filesystem::path path;
  int subject_id = 0;
  std::filesystem::path cycle_path;
};

void write_operator_manifest(const std::vector<OperatorRecord>& records, const std::filesystem::path& csv);
std::vector<OperatorRecord> read_operator_manifest(const std::filesystem::path& source);
std::vector<LabeledOperator> load_operators(const std::filesystem::path& source);

// Subject id from the leading digits of a sequence directory name
// ("012-nm-01" -> 12); `fallback` when there are none.
int subject_from_name(const std::string& name, int fallback);

// ---- stages ----

// Writes <root>/<id>-synth/frame_NNNN.pgm for every generated subject.
std::vector<std::filesystem::path> stage_gen_synthetic(const SyntheticSpec& spec, const std::filesystem::path& root);

// Segments every sequence directory under `in` (or `in` itself if it holds
// images). Returns the written manifest records.
std::vector<CycleRecord> stage_segment(const std::filesystem::path& in, const std::filesystem::path& out,
                                       int cycle_len, int w, bool use_minima);

// Per subject, the first round(fraction * n) cycles go to train.
void split_manifest(const std::vector<CycleRecord>& records, double train_fraction,
                    std::vector<CycleRecord>& train, std::vector<CycleRecord>& test);

TrainResult stage_train_coder(const std::filesystem::path& cycles, const TrainConfig& cfg,
                              const std::filesystem::path& out);

std::vector<OperatorRecord> stage_fit_k(const std::filesystem::path& coder_dir, const std::filesystem::path& cycles,
                                        const MatrixTrainConfig& cfg, const std::filesystem::path& out);

struct ClassifyReport {
  double accuracy = 0.0;
  std::size_t n_test = 0;
  std::size_t n_correct = 0;
  int iterations = 0;
};

ClassifyReport stage_classify(const std::filesystem::path& train, const std::filesystem::path& test,
                              double reg_weight, int max_iter, LogregMode mode, const std::filesystem::path& report_csv,
                              const std::filesystem::path& maps_dir);

struct SynthRequest {
  std::filesystem::path coder_dir;
  std::filesystem::path k_file;
  std::filesystem::path frame_file;  // image, or IKA1 cycle whose first frame is the seed
  int steps = 1;
  std::optional<double> fractional;
  std::filesystem::path out;
};

// Writes future_NN.pgm and future_NN_median.pgm for m = 1..steps (plus
// interp.pgm when a fractional step is requested) and metrics.csv. Metrics
// are reported against the true frame when the seed came from a cycle.
void stage_synth(const SynthRequest& req);

// ---- whole run ----

struct RunSummary {
  std::filesystem::path dir;
  ClassifyReport classify;
  std::map<std::string, std::string> hashes;  // relative path -> SHA-256 hex
};

RunSummary run_pipeline(const PipelineConfig& cfg);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace koopgait
