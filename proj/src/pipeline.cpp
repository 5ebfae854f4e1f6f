#include "koopgait/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <openssl/evp.h>

#include "koopgait/coder.hpp"
#include "koopgait/error.hpp"
#include "koopgait/image.hpp"
#include "koopgait/koopman.hpp"
#include "koopgait/ovs.hpp"
#include "koopgait/synth.hpp"
#include "koopgait/tensor.hpp"

namespace koopgait {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- configuration ----

PipelineConfig default_config() { return PipelineConfig{}; }

PipelineConfig desk_config() {
  PipelineConfig cfg;
  cfg.profile = "desk";
  cfg.w = 32;
  cfg.et_units = 512;
  cfg.train.epochs = 200;
  cfg.synthetic = SyntheticSpec{};
  return cfg;
}

PipelineConfig config_for_profile(const std::string& name) {
  if (name == "default") return default_config();
  if (name == "desk") return desk_config();
  throw Error(ErrorCode::BadConfig, "unknown profile '" + name + "' (expected default or desk)");
}

void validate(const PipelineConfig& cfg) {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::BadConfig, m); };
  if (cfg.w < 2 || cfg.w % 2) bad("w must be even and >= 2");
  if (cfg.et_units != cfg.w * cfg.w / 2) bad("ET units must equal w^2/2 (" + std::to_string(cfg.w * cfg.w / 2) + ")");
  if (cfg.cycle_len < 2) bad("cycle length must be >= 2");
  if (!(cfg.reg_weight > 0.0)) bad("reg_weight must be > 0");
  if (cfg.max_iter < 0) bad("max_iter must be >= 0");
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) bad("train_fraction must lie in (0,1)");
  if (cfg.threads < 1) bad("threads must be >= 1");
  if (cfg.matrix.epochs < 0 || !(cfg.matrix.lr > 0.0)) bad("matrix schedule must have lr > 0, epochs >= 0");
  if (cfg.input.empty() && !cfg.synthetic) bad("either an input directory or a synthetic spec is required");
  if (cfg.synthetic && cfg.synthetic->w != cfg.w) bad("synthetic resolution must equal w");
  if (cfg.synthetic && cfg.synthetic->period != cfg.cycle_len) bad("synthetic period must equal the cycle length");
  validate(cfg.train);
}

namespace {

std::string method_name(FitMethod m) { return m == FitMethod::Analytic ? "analytic" : "gd"; }

FitMethod parse_method(const std::string& s) {
  if (s == "analytic") return FitMethod::Analytic;
  if (s == "gd") return FitMethod::GradientDescent;
  throw Error(ErrorCode::BadConfig, "unknown fit method '" + s + "'");
}

std::string kinit_name(KInit k) { return k == KInit::Unscaled ? "unscaled" : "scaled"; }

KInit parse_kinit(const std::string& s) {
  if (s == "unscaled") return KInit::Unscaled;
  if (s == "scaled") return KInit::Scaled;
  throw Error(ErrorCode::BadConfig, "unknown k_init '" + s + "'");
}

std::string mode_name(LogregMode m) { return m == LogregMode::OneVsRest ? "ovr" : "multinomial"; }

LogregMode parse_mode(const std::string& s) {
  if (s == "ovr") return LogregMode::OneVsRest;
  if (s == "multinomial") return LogregMode::Multinomial;
  throw Error(ErrorCode::BadConfig, "unknown logreg mode '" + s + "'");
}

template <class T>
void read_key(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

}  // namespace

json to_json(const PipelineConfig& cfg) {
  json j;
  j["profile"] = cfg.profile;
  j["w"] = cfg.w;
  j["cycle_len"] = cfg.cycle_len;
  j["et_units"] = cfg.et_units;
  j["use_minima"] = cfg.use_minima;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["train_fraction"] = cfg.train_fraction;
  j["input"] = cfg.input.string();
  j["output"] = cfg.output.string();
  const auto& t = cfg.train;
  j["train"] = {{"batch_size", t.batch_size},
                {"lr", t.lr},
                {"epochs", t.epochs},
                {"loss_weights", {t.loss_weights.autoencoder, t.loss_weights.linear, t.loss_weights.prediction}},
                {"adam_beta1", t.adam_beta1},
                {"adam_beta2", t.adam_beta2},
                {"adam_eps", t.adam_eps},
                {"k_init", kinit_name(t.k_init)},
                {"k_init_mean", t.k_init_mean},
                {"k_init_variance", t.k_init_variance},
                {"grad_clip", t.grad_clip},
                {"use_tanh", t.coder.use_tanh},
                {"bn_eps", t.coder.bn_eps},
                {"bn_momentum", t.coder.bn_momentum}};
  j["matrix"] = {{"method", method_name(cfg.matrix.method)}, {"lr", cfg.matrix.lr}, {"epochs", cfg.matrix.epochs}};
  j["classifier"] = {{"reg_weight", cfg.reg_weight}, {"max_iter", cfg.max_iter}, {"mode", mode_name(cfg.logreg_mode)}};
  if (cfg.synthetic) {
    const auto& s = *cfg.synthetic;
    j["synthetic"] = {{"n_subjects", s.n_subjects}, {"cycles_per_subject", s.cycles_per_subject},
                      {"period", s.period},         {"w", s.w},
                      {"noise", s.noise},           {"seed", s.seed}};
  } else {
    j["synthetic"] = nullptr;
  }
  return j;
}

PipelineConfig from_json(const json& in, PipelineConfig cfg) {
  const json& j = in.contains("config") && in.at("config").is_object() ? in.at("config") : in;
  try {
    if (j.contains("profile")) {
      const auto name = j.at("profile").get<std::string>();
      if (name != cfg.profile) {
        const auto keep_out = cfg.output;
        cfg = config_for_profile(name);
        cfg.output = keep_out;
      }
    }
    read_key(j, "w", cfg.w);
    read_key(j, "cycle_len", cfg.cycle_len);
    read_key(j, "et_units", cfg.et_units);
    read_key(j, "use_minima", cfg.use_minima);
    read_key(j, "seed", cfg.seed);
    read_key(j, "threads", cfg.threads);
    read_key(j, "train_fraction", cfg.train_fraction);
    if (j.contains("input")) cfg.input = j.at("input").get<std::string>();
    if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
    if (j.contains("train")) {
      const auto& t = j.at("train");
      auto& d = cfg.train;
      read_key(t, "batch_size", d.batch_size);
      read_key(t, "lr", d.lr);
      read_key(t, "epochs", d.epochs);
      if (t.contains("loss_weights")) {
        const auto w = t.at("loss_weights").get<std::vector<double>>();
        if (w.size() != 3) throw Error(ErrorCode::BadConfig, "loss_weights needs three entries");
        d.loss_weights = {w[0], w[1], w[2]};
      }
      read_key(t, "adam_beta1", d.adam_beta1);
      read_key(t, "adam_beta2", d.adam_beta2);
      read_key(t, "adam_eps", d.adam_eps);
      if (t.contains("k_init")) d.k_init = parse_kinit(t.at("k_init").get<std::string>());
      read_key(t, "k_init_mean", d.k_init_mean);
      read_key(t, "k_init_variance", d.k_init_variance);
      read_key(t, "grad_clip", d.grad_clip);
      read_key(t, "use_tanh", d.coder.use_tanh);
      read_key(t, "bn_eps", d.coder.bn_eps);
      read_key(t, "bn_momentum", d.coder.bn_momentum);
    }
    if (j.contains("matrix")) {
      const auto& m = j.at("matrix");
      if (m.contains("method")) cfg.matrix.method = parse_method(m.at("method").get<std::string>());
      read_key(m, "lr", cfg.matrix.lr);
      read_key(m, "epochs", cfg.matrix.epochs);
    }
    if (j.contains("classifier")) {
      const auto& c = j.at("classifier");
      read_key(c, "reg_weight", cfg.reg_weight);
      read_key(c, "max_iter", cfg.max_iter);
      if (c.contains("mode")) cfg.logreg_mode = parse_mode(c.at("mode").get<std::string>());
    }
    if (j.contains("synthetic")) {
      const auto& s = j.at("synthetic");
      if (s.is_null()) {
        cfg.synthetic.reset();
      } else {
        SyntheticSpec spec = cfg.synthetic.value_or(SyntheticSpec{});
        read_key(s, "n_subjects", spec.n_subjects);
        read_key(s, "cycles_per_subject", spec.cycles_per_subject);
        read_key(s, "period", spec.period);
        read_key(s, "w", spec.w);
        read_key(s, "noise", spec.noise);
        read_key(s, "seed", spec.seed);
        cfg.synthetic = spec;
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadConfig, e.what());
  }
  cfg.train.seed = cfg.seed;
  return cfg;
}

PipelineConfig load_config(const fs::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  try {
    return from_json(json::parse(in), std::move(base));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::BadConfig, path.string() + ": " + e.what());
  }
}

int threads_from_env(int fallback) {
  const char* v = std::getenv("KOOPGAIT_THREADS");
  if (!v || !*v) return fallback;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1) throw Error(ErrorCode::BadConfig, "KOOPGAIT_THREADS must be a positive integer");
  return static_cast<int>(n);
}

// ---- manifests ----

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path& path, std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != columns) throw Error(ErrorCode::BadSpec, path.string() + ": malformed row '" + line + "'");
    rows.push_back(std::move(cells));
  }
  return rows;
}

fs::path manifest_file(const fs::path& source) {
  if (fs::is_directory(source)) return source / "manifest.csv";
  if (!fs::exists(source)) throw Error(ErrorCode::MissingDirectory, source.string());
  return source;
}

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

}  // namespace

void write_cycle_manifest(const std::vector<CycleRecord>& records, const fs::path& csv) {
  std::ofstream out(csv);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + csv.string());
  out << "cycle_path,subject_id,start_index\n";
  for (const auto& r : records) out << r.path.generic_string() << ',' << r.subject_id << ',' << r.start_index << '\n';
}

std::vector<CycleRecord> read_cycle_manifest(const fs::path& source) {
  const auto file = manifest_file(source);
  const auto base = fs::absolute(file).parent_path();
  std::vector<CycleRecord> out;
  for (const auto& row : read_csv(file, 3))
    out.push_back({resolve(base, row[0]), std::stoi(row[1]), static_cast<std::size_t>(std::stoull(row[2]))});
  return out;
}

std::vector<GaitCycle> load_cycles(const std::vector<CycleRecord>& records) {
  std::vector<GaitCycle> cycles;
  cycles.reserve(records.size());
  for (const auto& r : records) {
    const auto t = load_tensor(r.path);
    if (t.shape.size() != 3) throw Error(ErrorCode::DimMismatch, r.path.string() + " is not a [T,w,w] cycle");
    GaitCycle c;
    c.frames = to_frames(t);
    c.subject_id = r.subject_id;
    c.start_index = r.start_index;
    cycles.push_back(std::move(c));
  }
  return cycles;
}

void write_operator_manifest(const std::vector<OperatorRecord>& records, const fs::path& csv) {
  std::ofstream out(csv);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + csv.string());
  out << "k_path,subject_id,cycle_path\n";
  for (const auto& r : records)
    out << r.path.generic_string() << ',' << r.subject_id << ',' << r.cycle_path.generic_string() << '\n';
}

std::vector<OperatorRecord> read_operator_manifest(const fs::path& source) {
  const auto file = manifest_file(source);
  const auto base = fs::absolute(file).parent_path();
  std::vector<OperatorRecord> out;
  for (const auto& row : read_csv(file, 3)) out.push_back({resolve(base, row[0]), std::stoi(row[1]), row[2]});
  return out;
}

std::vector<LabeledOperator> load_operators(const fs::path& source) {
  std::vector<LabeledOperator> out;
  for (const auto& r : read_operator_manifest(source)) out.push_back({to_matrix(load_tensor(r.path)), r.subject_id});
  return out;
}

int subject_from_name(const std::string& name, int fallback) {
  std::size_t n = 0;
  while (n < name.size() && std::isdigit(static_cast<unsigned char>(name[n]))) ++n;
  if (n == 0 || n > 9) return fallback;
  return std::stoi(name.substr(0, n));
}

// ---- stages ----

std::vector<fs::path> stage_gen_synthetic(const SyntheticSpec& spec, const fs::path& root) {
  std::vector<fs::path> dirs;
  for (const auto& seq : generate_synthetic_dataset(spec)) {
    dirs.push_back(root / seq.source_id);
    save_sequence(seq, dirs.back());
  }
  return dirs;
}

std::vector<CycleRecord> stage_segment(const fs::path& in, const fs::path& out, int cycle_len, int w,
                                       bool use_minima) {
  if (!fs::is_directory(in)) throw Error(ErrorCode::MissingDirectory, in.string());
  std::vector<fs::path> dirs;
  bool has_images = false;
  for (const auto& e : fs::directory_iterator(in)) {
    if (e.is_directory()) dirs.push_back(e.path());
    if (e.is_regular_file() && is_image_file(e.path())) has_images = true;
  }
  if (has_images) dirs = {in};
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw Error(ErrorCode::TooFewFrames, in.string() + " holds no sequences");

  fs::create_directories(out);
  std::vector<CycleRecord> records;
  char name[32];
  int fallback = 1;
  for (const auto& dir : dirs) {
    auto seq = load_sequence(dir, w);
    seq.subject_id = subject_from_name(seq.source_id, fallback++);
    for (auto& c : ovs::segment(seq, {cycle_len, use_minima})) {
      std::snprintf(name, sizeof name, "cycle_%04zu.ika", records.size());
      save_tensor(to_tensor(std::span<const Frame>(c.frames)), out / name);
      records.push_back({name, c.subject_id, c.start_index});
    }
  }
  write_cycle_manifest(records, out / "manifest.csv");
  return records;
}

void split_manifest(const std::vector<CycleRecord>& records, double train_fraction, std::vector<CycleRecord>& train,
                    std::vector<CycleRecord>& test) {
  train.clear();
  test.clear();
  std::map<int, std::vector<const CycleRecord*>> by_subject;
  for (const auto& r : records) by_subject[r.subject_id].push_back(&r);
  for (const auto& [id, rs] : by_subject) {
    auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(rs.size())));
    n_train = std::clamp<std::size_t>(n_train, rs.size() > 1 ? 1 : rs.size(), rs.size() > 1 ? rs.size() - 1 : 1);
    for (std::size_t i = 0; i < rs.size(); ++i) (i < n_train ? train : test).push_back(*rs[i]);
  }
}

TrainResult stage_train_coder(const fs::path& cycles, const TrainConfig& cfg, const fs::path& out) {
  const auto cs = load_cycles(read_cycle_manifest(cycles));
  auto result = train_coder(cs, cfg);
  fs::create_directories(out);
  save_coder(result.coder, out);
  save_tensor(to_tensor(result.prototype), out / "prototype_k.ika");
  write_trace_csv(result.trace, out / "trace.csv");
  return result;
}

std::vector<OperatorRecord> stage_fit_k(const fs::path& coder_dir, const fs::path& cycles,
                                        const MatrixTrainConfig& cfg, const fs::path& out) {
  const auto coder = load_coder(coder_dir);
  Eigen::MatrixXd prototype;
  if (cfg.method == FitMethod::GradientDescent) {
    const auto proto_path = coder_dir / "prototype_k.ika";
    prototype = fs::exists(proto_path) ? to_matrix(load_tensor(proto_path))
                                       : Eigen::MatrixXd::Identity(coder.resolution(), coder.resolution());
  }
  const auto records = read_cycle_manifest(cycles);
  const auto cs = load_cycles(records);
  const auto ks = fit_all_matrices(coder, prototype, cs, cfg);

  fs::create_directories(out);
  std::vector<OperatorRecord> out_records;
  char name[32];
  for (std::size_t i = 0; i < ks.size(); ++i) {
    std::snprintf(name, sizeof name, "k_%04zu.ika", i);
    save_tensor(to_tensor(ks[i]), out / name);
    out_records.push_back({name, records[i].subject_id, records[i].path.filename()});
  }
  write_operator_manifest(out_records, out / "manifest.csv");
  return out_records;
}

ClassifyReport stage_classify(const fs::path& train, const fs::path& test, double reg_weight, int max_iter,
                              LogregMode mode, const fs::path& report_csv, const fs::path& maps_dir) {
  const auto train_ops = load_operators(train);
  const auto test_records = read_operator_manifest(test);
  const auto model = fit_logreg(train_ops, reg_weight, max_iter, mode);

  if (report_csv.has_parent_path()) fs::create_directories(report_csv.parent_path());
  std::ofstream out(report_csv);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + report_csv.string());
  out << "sample_id,true,predicted,top1,score1,top2,score2,top3,score3\n";
  out.precision(6);

  ClassifyReport rep;
  rep.iterations = model.iterations;
  for (const auto& r : test_records) {
    const auto p = predict(model, to_matrix(load_tensor(r.path)));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(p.probabilities.size()));
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return p.probabilities(a) > p.probabilities(b); });
    out << r.path.stem().string() << ',' << r.subject_id << ',' << p.label;
    for (std::size_t k = 0; k < 3; ++k) {
      if (k < order.size())
        out << ',' << model.classes[static_cast<std::size_t>(order[k])] << ',' << p.probabilities(order[k]);
      else
        out << ",,";
    }
    out << '\n';
    ++rep.n_test;
    if (p.label == r.subject_id) ++rep.n_correct;
  }
  rep.accuracy = rep.n_test ? static_cast<double>(rep.n_correct) / static_cast<double>(rep.n_test) : 0.0;
  if (!maps_dir.empty()) write_weight_maps(model, maps_dir);
  return rep;
}

void stage_synth(const SynthRequest& req) {
  if (req.steps < 1) throw Error(ErrorCode::BadSpec, "steps must be >= 1");
  const auto coder = load_coder(req.coder_dir);
  const auto k = to_matrix(load_tensor(req.k_file));

  std::vector<Frame> truth;
  Frame seed;
  if (req.frame_file.extension() == ".ika") {
    truth = to_frames(load_tensor(req.frame_file));
    seed = truth.front();
  } else {
    seed = resize_and_binarize(read_gray_image(req.frame_file), static_cast<int>(coder.resolution()));
  }

  fs::create_directories(req.out);
  std::ofstream csv(req.out / "metrics.csv");
  if (!csv) throw Error(ErrorCode::IoError, "cannot write metrics.csv");
  csv << "name,step,mse_sim,psnr,uqi\n";
  auto emit = [&](const std::string& name, const std::string& step, const Eigen::MatrixXd& raw,
                  const Frame* reference) {
    const Frame img = raw.cwiseMax(0.0).cwiseMin(1.0);
    write_pgm(img, req.out / (name + ".pgm"));
    write_pgm(median_filter3(img), req.out / (name + "_median.pgm"));
    csv << name << ',' << step;
    if (reference) {
      const auto q = image_metrics(raw, *reference);
      csv << ',' << q.mse_sim << ',' << q.psnr << ',' << q.uqi;
    } else {
      csv << ",,,";
    }
    csv << '\n';
  };

  char name[32];
  for (int m = 1; m <= req.steps; ++m) {
    std::snprintf(name, sizeof name, "future_%02d", m);
    const Frame* ref = truth.empty() ? nullptr : &truth[static_cast<std::size_t>(m) % truth.size()];
    emit(name, std::to_string(m), generate_future_raw(coder, k, seed, m), ref);
  }
  if (req.fractional) emit("interp", std::to_string(*req.fractional), interpolate_raw(coder, k, seed, *req.fractional),
                           nullptr);
}

// ---- whole run ----

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char b[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(b, sizeof b, "%02x", md[i]);
    hex += b;
  }
  return hex;
}

namespace {

template <class F>
auto run_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string("[") + stage + "] " + e.detail());
  }
}

}  // namespace

RunSummary run_pipeline(const PipelineConfig& cfg_in) {
  PipelineConfig cfg = cfg_in;
  cfg.train.seed = cfg.seed;
  cfg.matrix.threads = cfg.threads;
  run_stage("config", [&] { validate(cfg); });
  if (!cfg.synthetic && !fs::is_directory(cfg.input))
    throw Error(ErrorCode::MissingDirectory, "[segment] " + cfg.input.string());

  RunSummary summary;
  summary.dir = cfg.output;
  fs::create_directories(cfg.output);
  const fs::path cycles_dir = cfg.output / "cycles";
  const fs::path coder_dir = cfg.output / "coder";
  const fs::path k_dir = cfg.output / "k";

  fs::path input = cfg.input;
  if (cfg.synthetic) {
    input = cfg.output / "data";
    run_stage("gen-synthetic", [&] { return stage_gen_synthetic(*cfg.synthetic, input); });
  }
  const auto records =
      run_stage("segment", [&] { return stage_segment(input, cycles_dir, cfg.cycle_len, cfg.w, cfg.use_minima); });
  std::vector<CycleRecord> train, test;
  split_manifest(records, cfg.train_fraction, train, test);
  auto relative = [&](std::vector<CycleRecord> rs) {
    for (auto& r : rs) r.path = r.path.filename();
    return rs;
  };
  write_cycle_manifest(relative(train), cycles_dir / "train.csv");
  write_cycle_manifest(relative(test), cycles_dir / "test.csv");

  run_stage("train-coder", [&] { return stage_train_coder(cycles_dir / "train.csv", cfg.train, coder_dir); });
  run_stage("fit-k", [&] {
    stage_fit_k(coder_dir, cycles_dir / "train.csv", cfg.matrix, k_dir / "train");
    return stage_fit_k(coder_dir, cycles_dir / "test.csv", cfg.matrix, k_dir / "test");
  });
  summary.classify = run_stage("classify", [&] {
    return stage_classify(k_dir / "train", k_dir / "test", cfg.reg_weight, cfg.max_iter, cfg.logreg_mode,
                          cfg.output / "classify" / "report.csv", cfg.output / "classify" / "maps");
  });

  for (const auto& e : fs::recursive_directory_iterator(cfg.output)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), cfg.output).generic_string();
    const auto ext = e.path().extension();
    if (ext == ".ika" || e.path().filename() == "manifest.csv" || e.path().filename() == "report.csv")
      summary.hashes[rel] = sha256_file(e.path());
  }

  json repro;
  repro["config"] = to_json(cfg);
  repro["seed"] = cfg.seed;
  repro["accuracy"] = summary.classify.accuracy;
  repro["artifacts"] = summary.hashes;
  std::ofstream(cfg.output / "repro.json") << repro.dump(2) << '\n';
  return summary;
}

}  // namespace koopgait
