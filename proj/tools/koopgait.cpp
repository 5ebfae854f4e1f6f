// koopgait: command-line front end for the gait pipeline stages.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "koopgait/error.hpp"
#include "koopgait/flops.hpp"
#include "koopgait/pipeline.hpp"

namespace fs = std::filesystem;
using namespace koopgait;

namespace {

const std::map<std::string, FitMethod> kMethods{{"gd", FitMethod::GradientDescent}, {"analytic", FitMethod::Analytic}};
const std::map<std::string, LogregMode> kModes{{"multinomial", LogregMode::Multinomial},
                                               {"ovr", LogregMode::OneVsRest}};

PipelineConfig base_config(const std::string& profile, const std::string& config_file) {
  auto cfg = config_for_profile(profile);
  if (!config_file.empty()) cfg = load_config(config_file, cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Koopman-operator gait recognition toolkit"};
  app.require_subcommand(1);
  app.allow_extras(false);

  // gen-synthetic
  SyntheticSpec gen_spec;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen-synthetic", "Write a synthetic walker dataset as PGM sequences");
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--subjects", gen_spec.n_subjects, "Number of subjects")->capture_default_str();
  gen->add_option("--cycles", gen_spec.cycles_per_subject, "Cycles per subject")->capture_default_str();
  gen->add_option("--period", gen_spec.period, "Gait period in frames")->capture_default_str();
  gen->add_option("--size", gen_spec.w, "Frame resolution")->capture_default_str();
  gen->add_option("--noise", gen_spec.noise, "Pixel flip probability")->capture_default_str();
  gen->add_option("--seed", gen_spec.seed, "Random seed")->capture_default_str();

  // segment
  std::string seg_in, seg_out;
  int seg_len = 12, seg_size = 64;
  bool seg_minima = false;
  auto* seg = app.add_subcommand("segment", "Cut silhouette sequences into fixed-length cycles");
  seg->add_option("--in", seg_in, "Sequence directory or root of sequence directories")->required();
  seg->add_option("--out", seg_out, "Output directory for cycles and manifest.csv")->required();
  seg->add_option("--cycle-len", seg_len, "Cycle length T")->capture_default_str();
  seg->add_option("--size", seg_size, "Frame resolution w")->capture_default_str();
  seg->add_flag("--minima", seg_minima, "Cut at minima of the mismatch series");

  // train-coder
  std::string tc_cycles, tc_config, tc_out, tc_profile = "default";
  std::optional<int> tc_epochs, tc_batch;
  std::optional<double> tc_lr;
  std::optional<std::uint64_t> tc_seed;
  auto* tc = app.add_subcommand("train-coder", "Train the coupling coder and prototype operator");
  tc->add_option("--cycles", tc_cycles, "Cycle directory or manifest CSV")->required();
  tc->add_option("--config", tc_config, "JSON config file");
  tc->add_option("--profile", tc_profile, "Preset: default or desk")->capture_default_str();
  tc->add_option("--out", tc_out, "Checkpoint directory")->required();
  tc->add_option("--epochs", tc_epochs, "Training epochs");
  tc->add_option("--batch", tc_batch, "Cycles per mini-batch");
  tc->add_option("--lr", tc_lr, "Adam learning rate");
  tc->add_option("--seed", tc_seed, "Random seed");

  // fit-k
  std::string fk_coder, fk_cycles, fk_out;
  MatrixTrainConfig fk_cfg;
  int fk_threads = threads_from_env(1);
  auto* fk = app.add_subcommand("fit-k", "Fit one operator per cycle with a frozen coder");
  fk->add_option("--coder", fk_coder, "Coder checkpoint directory")->required();
  fk->add_option("--cycles", fk_cycles, "Cycle directory or manifest CSV")->required();
  fk->add_option("--method", fk_cfg.method, "gd or analytic")
      ->transform(CLI::CheckedTransformer(kMethods, CLI::ignore_case))
      ->default_str("gd");
  fk->add_option("--lr", fk_cfg.lr, "Gradient-descent learning rate")->capture_default_str();
  fk->add_option("--epochs", fk_cfg.epochs, "Gradient-descent epochs")->capture_default_str();
  fk->add_option("--threads", fk_threads, "Worker threads")->capture_default_str();
  fk->add_option("--out", fk_out, "Output directory")->required();

  // classify
  std::string cl_train, cl_test, cl_out, cl_maps;
  double cl_reg = 200.0;
  int cl_iter = 2000;
  LogregMode cl_mode = LogregMode::Multinomial;
  auto* cl = app.add_subcommand("classify", "Fit logistic regression on operators and score a test set");
  cl->add_option("--train", cl_train, "Training operator directory")->required();
  cl->add_option("--test", cl_test, "Test operator directory")->required();
  cl->add_option("--out", cl_out, "Report CSV")->required();
  cl->add_option("--maps", cl_maps, "Directory for weight maps");
  cl->add_option("--reg", cl_reg, "Inverse L2 strength")->capture_default_str();
  cl->add_option("--max-iter", cl_iter, "Iteration cap")->capture_default_str();
  cl->add_option("--mode", cl_mode, "multinomial or ovr")
      ->transform(CLI::CheckedTransformer(kModes, CLI::ignore_case))
      ->default_str("multinomial");

  // synth
  SynthRequest sy;
  std::optional<double> sy_frac;
  auto* syc = app.add_subcommand("synth", "Generate future or interpolated frames");
  syc->add_option("--coder", sy.coder_dir, "Coder checkpoint directory")->required();
  syc->add_option("--k", sy.k_file, "Operator IKA1 file")->required();
  syc->add_option("--frame", sy.frame_file, "Seed frame (PGM/PNG) or IKA1 cycle")->required();
  syc->add_option("--steps", sy.steps, "Future steps to generate")->capture_default_str();
  syc->add_option("--fractional", sy_frac, "Fractional step r for interpolation");
  syc->add_option("--out", sy.out, "Output directory")->required();

  // flops
  std::string fl_spec, fl_out;
  auto* fl = app.add_subcommand("flops", "Analytical FLOPs report for a layer spec file");
  fl->add_option("--spec", fl_spec, "JSON layer spec")->required();
  fl->add_option("--out", fl_out, "Report CSV");

  // run
  std::string run_profile, run_config, run_synthetic, run_input, run_out = "run";
  std::optional<std::uint64_t> run_seed;
  std::optional<int> run_threads, run_epochs, run_w;
  std::optional<double> run_noise;
  std::optional<FitMethod> run_method;
  auto* run = app.add_subcommand("run", "Run segment, train-coder, fit-k and classify end to end");
  run->add_option("--profile", run_profile, "Preset: default or desk (desk when --synthetic is given)");
  run->add_option("--config", run_config, "JSON config file or repro.json");
  run->add_option("--synthetic", run_synthetic, "Use the bundled synthetic dataset (value: default)")
      ->check(CLI::IsMember({"default"}));
  run->add_option("--input", run_input, "Root of silhouette sequence directories");
  run->add_option("--out", run_out, "Run directory")->capture_default_str();
  run->add_option("--seed", run_seed, "Random seed");
  run->add_option("--threads", run_threads, "Worker threads (also KOOPGAIT_THREADS)");
  run->add_option("--coder-epochs", run_epochs, "Coder training epochs");
  run->add_option("--size", run_w, "Frame resolution w (ET units follow as w^2/2)");
  run->add_option("--noise", run_noise, "Pixel flip probability for synthetic data");
  run->add_option("--method", run_method, "Operator fit: gd or analytic")
      ->transform(CLI::CheckedTransformer(kMethods, CLI::ignore_case));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      for (const auto& d : stage_gen_synthetic(gen_spec, gen_out)) std::cout << d.string() << '\n';
    } else if (*seg) {
      const auto recs = stage_segment(seg_in, seg_out, seg_len, seg_size, seg_minima);
      std::cout << recs.size() << " cycles written to " << seg_out << '\n';
    } else if (*tc) {
      auto cfg = base_config(tc_profile, tc_config).train;
      if (tc_epochs) cfg.epochs = *tc_epochs;
      if (tc_batch) cfg.batch_size = *tc_batch;
      if (tc_lr) cfg.lr = *tc_lr;
      if (tc_seed) cfg.seed = *tc_seed;
      const auto r = stage_train_coder(tc_cycles, cfg, tc_out);
      std::printf("loss1 %.6g -> %.6g over %zu epochs\n", r.trace.front().loss1, r.trace.back().loss1,
                  r.trace.size());
    } else if (*fk) {
      fk_cfg.threads = fk_threads;
      const auto recs = stage_fit_k(fk_coder, fk_cycles, fk_cfg, fk_out);
      std::cout << recs.size() << " operators written to " << fk_out << '\n';
    } else if (*cl) {
      const auto rep = stage_classify(cl_train, cl_test, cl_reg, cl_iter, cl_mode, cl_out, cl_maps);
      std::printf("rank-1 accuracy %.4f (%zu/%zu)\n", rep.accuracy, rep.n_correct, rep.n_test);
    } else if (*syc) {
      sy.fractional = sy_frac;
      stage_synth(sy);
      std::cout << "frames written to " << sy.out.string() << '\n';
    } else if (*fl) {
      const auto report = flops::model_cost(flops::load_specs(fl_spec));
      for (const auto& l : report.layers)
        std::printf("%-24s %-7s %20llu\n", l.name.c_str(), flops::to_string(l.kind).c_str(),
                    static_cast<unsigned long long>(l.flops));
      std::printf("total %llu FLOPs = %s GFLOPs, dense %.1f%%, conv %.1f%%, FL score %s\n",
                  static_cast<unsigned long long>(report.total), flops::format_sig(report.gflops(), 2).c_str(),
                  100.0 * report.dense_share(), 100.0 * report.conv_share(),
                  flops::format_sig(report.fl_score, 3).c_str());
      if (!fl_out.empty()) flops::write_cost_csv(report, fl_out);
    } else if (*run) {
      std::string profile = run_profile;
      if (profile.empty()) profile = run_synthetic.empty() ? "default" : "desk";
      auto cfg = base_config(profile, run_config);
      if (!run_synthetic.empty() && !cfg.synthetic) cfg.synthetic = SyntheticSpec{};
      if (!run_input.empty()) {
        cfg.input = run_input;
        cfg.synthetic.reset();
      }
      cfg.output = run_out;
      if (run_seed) {
        cfg.seed = *run_seed;
        if (cfg.synthetic) cfg.synthetic->seed = *run_seed;
      }
      cfg.threads = run_threads ? *run_threads : threads_from_env(cfg.threads);
      if (run_epochs) cfg.train.epochs = *run_epochs;
      if (run_w) {
        cfg.w = *run_w;
        cfg.et_units = cfg.w * cfg.w / 2;
        if (cfg.synthetic) cfg.synthetic->w = cfg.w;
      }
      if (run_noise && cfg.synthetic) cfg.synthetic->noise = *run_noise;
      if (run_method) cfg.matrix.method = *run_method;
      const auto s = run_pipeline(cfg);
      std::printf("rank-1 accuracy %.4f (%zu/%zu); artifacts in %s\n", s.classify.accuracy, s.classify.n_correct,
                  s.classify.n_test, s.dir.string().c_str());
    }
  } catch (const Error& e) {
    std::cerr << "koopgait: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "koopgait: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
