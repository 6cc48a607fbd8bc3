#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "occrec/harness.hpp"
#include "occrec/serialize.hpp"
#include "occrec/synth.hpp"

namespace fs = std::filesystem;
using namespace occrec;

namespace {

// Every key in a config file mirrors a long flag: `data-dir=...`, `k2=50`,
// comments with '#'. Values from the file are injected before the command
// line, and every option takes its last occurrence, so the command line
// always overrides the file.
std::vector<std::string> config_file_args(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw io_error("cannot read config file " + file.string());
  std::vector<std::string> args;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) continue;
    args.push_back("--" + key + (value.empty() ? "" : "=" + value));
  }
  return args;
}

void take_last_everywhere(CLI::App* app) {
  for (CLI::Option* opt : app->get_options([](CLI::Option*) { return true; }))
    opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  for (CLI::App* sub : app->get_subcommands([](CLI::App*) { return true; }))
    take_last_everywhere(sub);
}

struct TrainFlags {
  std::string data_dir;
  std::string out_dir = "runs/latest";
  int train_count = 10000;
  int test_count = 2000;
  int k = 200;
  int patch_size = 6;
  int patches_per_image = 20;
  int k2 = 50;
  std::uint64_t seed = 1;
  double svm_c = 1.0;
  std::string store_h1 = "off";
  std::string lowpass = "box3";
  std::vector<double> augment_levels;
  bool full_scale = false;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  static std::string config_dummy;
  cmd->add_option("--config", config_dummy, "plain key=value config file (CLI overrides it)");
  cmd->add_option("--data-dir", f.data_dir, "directory with CIFAR-10 binary batches")->required();
  cmd->add_option("--out-dir", f.out_dir, "output directory");
  cmd->add_option("--train-count", f.train_count, "training images (desk profile default)");
  cmd->add_option("--test-count", f.test_count, "test images");
  cmd->add_option("--k", f.k, "receptive field count");
  cmd->add_option("--patch-size", f.patch_size, "patch side in pixels");
  cmd->add_option("--patches-per-image", f.patches_per_image, "dictionary patches per image");
  cmd->add_option("--k2", f.k2, "cluster centers per class");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--svm-c", f.svm_c, "SVM regularization trade-off");
  cmd->add_option("--store-h1", f.store_h1, "on|off: keep the Layer-1 activity store")
      ->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--lowpass", f.lowpass, "box3|off: stored-activity low-pass filter")
      ->check(CLI::IsMember({"box3", "off"}));
  cmd->add_option("--augment-levels", f.augment_levels,
                  "occlusion fractions for classifier training augmentation")
      ->delimiter(',');
  cmd->add_flag("--full-scale", f.full_scale, "use 50000/10000 images instead of the desk profile");
}

PipelineConfig to_pipeline(const TrainFlags& f) {
  PipelineConfig cfg;
  cfg.data_dir = f.data_dir;
  cfg.train_count = f.full_scale ? 50000 : f.train_count;
  cfg.test_count = f.full_scale ? 10000 : f.test_count;
  cfg.dict.field_count = f.k;
  cfg.dict.patch_size = f.patch_size;
  cfg.dict.patches_per_image = f.patches_per_image;
  cfg.k2 = f.k2;
  cfg.svm.c_reg = f.svm_c;
  cfg.store_h1 = f.store_h1 == "on";
  cfg.h1_file = fs::path(f.out_dir) / "store_h1.f32";
  cfg.lowpass = f.lowpass == "box3";
  cfg.augment_levels = f.augment_levels;
  cfg.seed = f.seed;
  cfg.apply_seed();
  return cfg;
}

struct FeedbackFlags {
  double alpha = 0.5, beta = 0.0, tau = 0.0;
  int iterations = 3, m = 3;
  std::string scheme = "wta";
  std::string anneal = "on";
  bool layer1_feedback = false;
  bool ncs_average3 = false;
};

void add_feedback_flags(CLI::App* cmd, FeedbackFlags& f) {
  cmd->add_option("--alpha", f.alpha, "Layer-2 feedback magnitude");
  cmd->add_option("--beta", f.beta, "Layer-1 feedback magnitude");
  cmd->add_option("--tau", f.tau, "re-pooling feedback ratio");
  cmd->add_option("--iterations", f.iterations, "feedback iterations T");
  cmd->add_option("--m,--hypotheses", f.m, "hypothesis count (1-3)");
  cmd->add_option("--scheme", f.scheme, "wta|average|ncs")
      ->check(CLI::IsMember({"wta", "average", "ncs"}));
  cmd->add_option("--anneal", f.anneal, "on|off: halve feedback magnitude per iteration")
      ->check(CLI::IsMember({"on", "off"}));
  cmd->add_flag("--layer1-feedback", f.layer1_feedback, "enable Layer-1 sampling and merge");
  cmd->add_flag("--ncs-average3", f.ncs_average3,
                "class-agnostic scheme: average the 3 nearest centers");
}

FeedbackConfig to_feedback(const FeedbackFlags& f) {
  FeedbackConfig cfg;
  cfg.alpha = f.alpha;
  cfg.beta = f.beta;
  cfg.tau = f.tau;
  cfg.iterations = f.iterations;
  cfg.m = f.m;
  cfg.scheme = scheme_from_string(f.scheme);
  cfg.anneal = f.anneal == "on";
  cfg.layer1_feedback = f.layer1_feedback;
  cfg.ncs_average3 = f.ncs_average3;
  cfg.validate();
  return cfg;
}

std::vector<std::pair<std::string, std::string>> manifest_common(const PipelineConfig& cfg) {
  return {
      {"version", kVersion},
      {"seed", std::to_string(cfg.seed)},
      {"data_dir", cfg.data_dir.string()},
      {"train_count", std::to_string(cfg.train_count)},
      {"test_count", std::to_string(cfg.test_count)},
      {"k", std::to_string(cfg.dict.field_count)},
      {"patch_size", std::to_string(cfg.dict.patch_size)},
      {"patches_per_image", std::to_string(cfg.dict.patches_per_image)},
      {"k2", std::to_string(cfg.k2)},
      {"svm_c", std::to_string(cfg.svm.c_reg)},
      {"svm_epochs", std::to_string(cfg.svm.epochs)},
      {"store_h1", cfg.store_h1 ? "on" : "off"},
      {"lowpass", cfg.lowpass ? "box3" : "off"},
  };
}

int run_train(const TrainFlags& flags) {
  PipelineConfig cfg = to_pipeline(flags);
  fs::create_directories(flags.out_dir);
  const auto train = load_cifar10_train(cfg.data_dir, static_cast<std::size_t>(cfg.train_count));
  std::cout << "loaded " << train.size() << " training images\n";
  Artifacts art = train_pipeline(train, cfg);
  const fs::path out(flags.out_dir);
  save_dictionary(out / "dictionary.bin", art.dict);
  save_store(out / "store.bin", art.store);
  save_memory(out / "memory.bin", art.memory);
  save_bank(out / "bank.bin", art.bank);
  if (art.bank_augmented) save_bank(out / "bank_augmented.bin", *art.bank_augmented);
  auto manifest = manifest_common(cfg);
  manifest.emplace_back("command", "train");
  write_manifest(out / "manifest.txt", manifest);
  std::cout << "artifacts written to " << out.string() << "\n";
  return 0;
}

struct EvalFlags {
  std::string artifacts = "runs/latest";
  std::string baseline = "feedback";
  double occlusion = 0.33;
  std::string trajectory_file;
  bool use_augmented = false;
};

int run_eval(const TrainFlags& tflags, const EvalFlags& eflags, const FeedbackFlags& fflags) {
  PipelineConfig cfg = to_pipeline(tflags);
  const fs::path dir(eflags.artifacts);
  const DictionaryF dict = load_dictionary(dir / "dictionary.bin");
  const HypothesisBank bank = load_bank(
      dir / (eflags.use_augmented ? "bank_augmented.bin" : "bank.bin"));
  const auto test = load_cifar10_test(cfg.data_dir, static_cast<std::size_t>(cfg.test_count));
  const EncodedTestSet encoded = encode_test_set(test, dict, eflags.occlusion);

  EvalResult result;
  if (eflags.baseline == "feedforward") {
    result = eval_feedforward(encoded, bank);
  } else if (eflags.baseline == "feedback") {
    const ClusterMemory memory = load_memory(dir / "memory.bin");
    const FeedbackConfig fcfg = to_feedback(fflags);
    if (fcfg.layer1_feedback) {
      const ActivityStore store = load_store(dir / "store.bin");
      result = eval_feedback_images(test, eflags.occlusion, dict, memory, store, bank, fcfg);
    } else {
      result = eval_feedback(encoded, memory, bank, fcfg);
    }
    if (!eflags.trajectory_file.empty()) {
      // re-run a handful of images through the full path to record traces
      std::ofstream traj(eflags.trajectory_file);
      if (!traj) throw io_error("cannot write " + eflags.trajectory_file);
      const ActivityStore store = load_store(dir / "store.bin");
      const int sample_count = std::min<int>(10, static_cast<int>(test.size()));
      for (int i = 0; i < sample_count; ++i) {
        const ImageRecord img = occlude(test[static_cast<std::size_t>(i)],
                                        OcclusionSpec{eflags.occlusion});
        const auto res = classify_recurrent(img, dict, memory, store, bank, fcfg);
        traj << "# image " << i << " label " << static_cast<int>(test[static_cast<std::size_t>(i)].label)
             << " predicted " << res.label << "\n";
        write_trajectory(traj, res.log);
      }
    }
  } else {
    throw config_error("eval: baseline must be feedforward or feedback (rbm-baseline is separate)");
  }
  std::cout << "baseline=" << eflags.baseline << " occlusion=" << eflags.occlusion
            << " images=" << result.images << " accuracy=" << result.accuracy << "\n";
  return 0;
}

int main_impl(int argc, char** argv) {
  CLI::App app{"occluded-object classification with cluster-memory feedback"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (default: hardware)");

  TrainFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "train and save all artifacts");
  add_train_flags(train_cmd, train_flags);

  TrainFlags eval_tflags;
  EvalFlags eval_flags;
  FeedbackFlags eval_fflags;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate saved artifacts on the test set");
  add_train_flags(eval_cmd, eval_tflags);
  add_feedback_flags(eval_cmd, eval_fflags);
  eval_cmd->add_option("--artifacts", eval_flags.artifacts, "artifact directory from `train`");
  eval_cmd->add_option("--baseline", eval_flags.baseline, "feedforward|feedback")
      ->check(CLI::IsMember({"feedforward", "feedback"}));
  eval_cmd->add_option("--occlusion", eval_flags.occlusion, "test occlusion fraction");
  eval_cmd->add_option("--log-trajectories", eval_flags.trajectory_file,
                       "write per-iteration records for the first test images");
  eval_cmd->add_flag("--augmented", eval_flags.use_augmented, "use the augmented bank");

  TrainFlags sweep_tflags;
  FeedbackFlags sweep_fflags;
  std::vector<double> sweep_occlusions{0.0, 0.11, 0.25, 0.33, 0.50};
  std::vector<std::string> sweep_baselines{"feedforward", "feedback"};
  std::vector<int> sweep_k2;
  std::vector<int> sweep_iterations;
  std::vector<double> sweep_alphas;
  std::vector<std::string> sweep_schemes;
  std::vector<int> sweep_gibbs{0, 1, 5, 20};
  int rbm_epochs = 20;
  double rbm_lr = 0.1;
  int rbm_batch = 100;
  auto* sweep_cmd = app.add_subcommand("sweep", "grid experiments to CSV and plot data");
  add_train_flags(sweep_cmd, sweep_tflags);
  add_feedback_flags(sweep_cmd, sweep_fflags);
  sweep_cmd->add_option("--occlusions", sweep_occlusions, "occlusion grid")->delimiter(',');
  sweep_cmd->add_option("--baselines", sweep_baselines, "feedforward,feedback,rbm")->delimiter(',');
  sweep_cmd->add_option("--k2-grid", sweep_k2, "cluster-count grid")->delimiter(',');
  sweep_cmd->add_option("--iterations-grid", sweep_iterations, "iteration grid")->delimiter(',');
  sweep_cmd->add_option("--alpha-grid", sweep_alphas, "feedback magnitude grid")->delimiter(',');
  sweep_cmd->add_option("--schemes", sweep_schemes, "scheme grid")->delimiter(',');
  sweep_cmd->add_option("--gibbs-grid", sweep_gibbs, "RBM Gibbs epoch grid")->delimiter(',');
  sweep_cmd->add_option("--rbm-epochs", rbm_epochs, "RBM training epochs");
  sweep_cmd->add_option("--rbm-lr", rbm_lr, "RBM learning rate");
  sweep_cmd->add_option("--rbm-batch", rbm_batch, "RBM batch size");

  int toy_trials = 20000;
  double toy_distortion = 1.2, toy_alpha = 1.0, toy_sigma = 0.35;
  std::uint64_t toy_seed = 7;
  std::vector<double> toy_sweep;
  std::string toy_out;
  auto* toy_cmd = app.add_subcommand("toy", "two-class imputation-geometry oracle");
  toy_cmd->add_option("--trials", toy_trials, "Monte-Carlo trials");
  toy_cmd->add_option("--distortion", toy_distortion, "offset added to attribute 0");
  toy_cmd->add_option("--alpha", toy_alpha, "imputation merge magnitude");
  toy_cmd->add_option("--sigma", toy_sigma, "cluster spread");
  toy_cmd->add_option("--seed", toy_seed, "rng seed");
  toy_cmd->add_option("--sweep-distortion", toy_sweep, "distortion grid for plot data")
      ->delimiter(',');
  toy_cmd->add_option("--out-dir", toy_out, "write toy_sweep.tsv here");

  TrainFlags rbm_tflags;
  std::vector<double> rbm_occlusions{0.0, 0.33};
  std::vector<int> rbm_gibbs{0, 1, 5, 20};
  int rbmb_epochs = 20, rbmb_batch = 100, rbmb_hidden = 0;
  double rbmb_lr = 0.1;
  bool rbm_binary_readout = false;
  auto* rbm_cmd = app.add_subcommand("rbm-baseline",
                                     "Gibbs-correction baseline over binarized activities");
  add_train_flags(rbm_cmd, rbm_tflags);
  rbm_cmd->add_option("--occlusions", rbm_occlusions, "occlusion grid")->delimiter(',');
  rbm_cmd->add_option("--gibbs-epochs", rbm_gibbs, "Gibbs epoch grid")->delimiter(',');
  rbm_cmd->add_option("--rbm-epochs", rbmb_epochs, "training epochs");
  rbm_cmd->add_option("--rbm-lr", rbmb_lr, "learning rate");
  rbm_cmd->add_option("--rbm-batch", rbmb_batch, "batch size");
  rbm_cmd->add_option("--rbm-hidden", rbmb_hidden, "hidden units (default 4K)");
  rbm_cmd->add_flag("--binary-readout", rbm_binary_readout,
                    "classify a binary sample instead of probabilities");

  TrainFlags timing_tflags;
  FeedbackFlags timing_fflags;
  std::vector<int> timing_k2{10, 25, 50, 100};
  double timing_occlusion = 0.33;
  auto* timing_cmd = app.add_subcommand("timing", "feedback cost vs cluster count");
  add_train_flags(timing_cmd, timing_tflags);
  add_feedback_flags(timing_cmd, timing_fflags);
  timing_cmd->add_option("--k2-grid", timing_k2, "cluster-count grid")->delimiter(',');
  timing_cmd->add_option("--occlusion", timing_occlusion, "occlusion level for the runs");

  std::string synth_out = "data/synthetic";
  std::uint64_t synth_seed = 2024;
  int synth_train = 10000, synth_test = 10000;
  auto* synth_cmd = app.add_subcommand("synth-data",
                                       "generate the procedural stand-in corpus");
  synth_cmd->add_option("--out", synth_out, "target directory");
  synth_cmd->add_option("--seed", synth_seed, "generator seed");
  synth_cmd->add_option("--train-per-batch", synth_train, "records per training batch (x5)");
  synth_cmd->add_option("--test-count", synth_test, "test records");

  take_last_everywhere(&app);

  // expand --config FILE into its key=value flags, placed right after the
  // subcommand token so later command-line flags override them
  std::vector<std::string> tokens(argv + 1, argv + argc);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string file;
    std::size_t erase_count = 0;
    if (tokens[i] == "--config" && i + 1 < tokens.size()) {
      file = tokens[i + 1];
      erase_count = 2;
    } else if (tokens[i].rfind("--config=", 0) == 0) {
      file = tokens[i].substr(9);
      erase_count = 1;
    }
    if (erase_count == 0) continue;
    const auto injected = config_file_args(file);
    tokens.erase(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                 tokens.begin() + static_cast<std::ptrdiff_t>(i + erase_count));
    const std::vector<std::string> names{"train",        "eval",   "sweep",     "toy",
                                         "rbm-baseline", "timing", "synth-data"};
    std::size_t at = tokens.size();  // no subcommand: append, parse will complain
    for (std::size_t t = 0; t < tokens.size(); ++t)
      if (std::find(names.begin(), names.end(), tokens[t]) != names.end()) {
        at = t + 1;  // insert right after the subcommand name
        break;
      }
    tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(at), injected.begin(),
                  injected.end());
    break;
  }
  std::vector<const char*> args;
  args.push_back(argv[0]);
  for (const auto& t : tokens) args.push_back(t.c_str());

  try {
    app.parse(static_cast<int>(args.size()), args.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (threads > 0) setenv("OCCREC_THREADS", std::to_string(threads).c_str(), 1);

  if (train_cmd->parsed()) return run_train(train_flags);
  if (eval_cmd->parsed()) return run_eval(eval_tflags, eval_flags, eval_fflags);

  if (sweep_cmd->parsed()) {
    ExperimentSpec spec;
    spec.pipeline = to_pipeline(sweep_tflags);
    spec.occlusions = sweep_occlusions;
    spec.baselines = sweep_baselines;
    spec.k2_values = sweep_k2;
    spec.gibbs_values = sweep_gibbs;
    spec.rbm.epochs = rbm_epochs;
    spec.rbm.learning_rate = static_cast<float>(rbm_lr);
    spec.rbm.batch = rbm_batch;
    spec.eval_augmented = !sweep_tflags.augment_levels.empty();
    const FeedbackConfig base = to_feedback(sweep_fflags);
    std::vector<int> iters = sweep_iterations.empty() ? std::vector<int>{base.iterations}
                                                      : sweep_iterations;
    std::vector<double> alphas = sweep_alphas.empty() ? std::vector<double>{base.alpha}
                                                      : sweep_alphas;
    std::vector<std::string> schemes =
        sweep_schemes.empty() ? std::vector<std::string>{to_string(base.scheme)} : sweep_schemes;
    for (int t : iters)
      for (double a : alphas)
        for (const auto& s : schemes) {
          FeedbackConfig cfg = base;
          cfg.iterations = t;
          cfg.alpha = a;
          cfg.scheme = scheme_from_string(s);
          spec.configs.push_back(cfg);
        }
    const auto rows = run_sweep(spec);
    emit_outputs(rows, sweep_tflags.out_dir);
    auto manifest = manifest_common(spec.pipeline);
    manifest.emplace_back("command", "sweep");
    manifest.emplace_back("rows", std::to_string(rows.size()));
    write_manifest(fs::path(sweep_tflags.out_dir) / "manifest.txt", manifest);
    std::cout << results_csv(rows);
    return 0;
  }

  if (toy_cmd->parsed()) {
    ToyWorld world = default_toy_world();
    world.sigma = toy_sigma;
    const auto print = [](const ToyResult& r, double distortion) {
      std::cout << "distortion=" << distortion << " err_before=" << r.err_before
                << " err_after=" << r.err_after << " saved=" << r.frac_saved
                << " broken=" << r.frac_broken << " ratio_before=" << r.mean_ratio_before
                << " ratio_after=" << r.mean_ratio_after << "\n";
    };
    if (toy_sweep.empty()) {
      print(toy_oracle(world, toy_trials, toy_distortion, toy_alpha, toy_seed), toy_distortion);
    } else {
      std::ofstream tsv;
      if (!toy_out.empty()) {
        fs::create_directories(toy_out);
        tsv.open(fs::path(toy_out) / "toy_sweep.tsv");
        tsv << "distortion\terr_before\terr_after\tsaved\tbroken\n";
      }
      for (double d : toy_sweep) {
        const ToyResult r = toy_oracle(world, toy_trials, d, toy_alpha, toy_seed);
        print(r, d);
        if (tsv)
          tsv << d << '\t' << r.err_before << '\t' << r.err_after << '\t' << r.frac_saved << '\t'
              << r.frac_broken << "\n";
      }
    }
    return 0;
  }

  if (rbm_cmd->parsed()) {
    ExperimentSpec spec;
    spec.pipeline = to_pipeline(rbm_tflags);
    spec.occlusions = rbm_occlusions;
    spec.baselines = {"rbm"};
    spec.gibbs_values = rbm_gibbs;
    spec.rbm.epochs = rbmb_epochs;
    spec.rbm.learning_rate = static_cast<float>(rbmb_lr);
    spec.rbm.batch = rbmb_batch;
    spec.rbm_binary_readout = rbm_binary_readout;
    if (rbmb_hidden > 0) spec.rbm.hidden = rbmb_hidden;
    const auto rows = run_sweep(spec);
    emit_outputs(rows, rbm_tflags.out_dir);
    std::cout << results_csv(rows);
    return 0;
  }

  if (timing_cmd->parsed()) {
    ExperimentSpec spec;
    spec.pipeline = to_pipeline(timing_tflags);
    spec.occlusions = {timing_occlusion};
    spec.baselines = {"feedback"};
    spec.k2_values = timing_k2;
    spec.configs = {to_feedback(timing_fflags)};
    const auto rows = run_sweep(spec);
    emit_outputs(rows, timing_tflags.out_dir);
    const TimingReport rep = timing_report(rows);
    std::cout << "k2\tmean_feedback_ns\n";
    for (const auto& [k2, ns] : rep.mean_feedback_ns_by_k2) std::cout << k2 << '\t' << ns << "\n";
    std::cout << "fit: ns = " << rep.intercept << " + " << rep.slope << " * k2, R^2 = " << rep.r2
              << "\n";
    const ResultRow& first = rows.front();
    if (first.images > 0)
      std::cout << "distance evals per image at k2=" << first.k2 << ": "
                << static_cast<double>(first.distance_evals) / first.images << "\n";
    return 0;
  }

  if (synth_cmd->parsed()) {
    SynthOptions opt;
    opt.seed = synth_seed;
    opt.train_per_batch = synth_train;
    opt.test_count = synth_test;
    write_synthetic_corpus(synth_out, opt);
    std::cout << "synthetic corpus written to " << synth_out << "\n";
    return 0;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return main_impl(argc, argv);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
}
