#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "occrec/feedback.hpp"
#include "occrec/rbm.hpp"
#include "occrec/types.hpp"

namespace occrec {

inline constexpr const char* kVersion = "0.1.0";

/// Everything that affects trained artifacts. The desk profile is the
/// default; the full-scale profile raises the counts to 50000/10000.
struct PipelineConfig {
  std::filesystem::path data_dir;
  int train_count = 10000;
  int test_count = 2000;
  DictionaryFitOptions dict;
  int k2 = 50;
  SvmOptions svm;
  bool store_h1 = false;
  std::filesystem::path h1_file;
  bool lowpass = true;
  std::vector<double> augment_levels;  // non-empty: also train an augmented bank
  std::uint64_t seed = 1;

  void apply_seed();  // derives per-stage seeds from `seed`
};

struct Artifacts {
  DictionaryF dict;
  ActivityStore store;
  ClusterMemory memory;
  HypothesisBank bank;
  std::optional<HypothesisBank> bank_augmented;
};

/// Trains dictionary, store, cluster memory and the classifier bank(s).
/// With augmentation levels set, receptive fields and cluster memory are
/// reused unchanged and only the classifiers retrain on the expanded set.
Artifacts train_pipeline(const std::vector<ImageRecord>& train, const PipelineConfig& cfg);

/// Test images encoded once per occlusion level so parameter sweeps reuse
/// the expensive front end.
struct EncodedTestSet {
  double occlusion = 0;
  RowMatF h2;  // n x 4K
  std::vector<int> labels;
  double mean_encode_ns = 0;
};

EncodedTestSet encode_test_set(const std::vector<ImageRecord>& test, const DictionaryF& dict,
                               double occlusion);

struct EvalResult {
  double accuracy = 0;
  std::array<double, kNumClasses> per_class_accuracy{};
  double mean_classify_ns = 0;  // per image, excluding the shared encoding
  double mean_feedback_ns = 0;  // per image, loop iterations only
  std::uint64_t distance_evals = 0;
  int images = 0;
};

EvalResult eval_feedforward(const EncodedTestSet& test, const HypothesisBank& bank);

/// Feedback evaluation from cached Layer-2 encodings (Layer-1 feedback off).
EvalResult eval_feedback(const EncodedTestSet& test, const ClusterMemory& mem,
                         const HypothesisBank& bank, const FeedbackConfig& cfg);

/// Feedback evaluation through the full image path; required when Layer-1
/// feedback is on. Occludes each test image, encodes, and runs the loop.
EvalResult eval_feedback_images(const std::vector<ImageRecord>& test, double occlusion,
                                const DictionaryF& dict, const ClusterMemory& mem,
                                const ActivityStore& store, const HypothesisBank& bank,
                                const FeedbackConfig& cfg);
EvalResult eval_rbm(const EncodedTestSet& test, const RbmModel& model,
                    const LinearClassifier& clf, int gibbs_epochs, std::uint64_t seed,
                    bool binary_readout = false);

/// One grid point of a sweep.
struct ResultRow {
  std::string baseline;  // feedforward | feedback | rbm
  double occlusion = 0;
  int k2 = 0;
  int iterations = 0;
  int m = 0;
  std::string scheme;
  double alpha = 0, beta = 0, tau = 0;
  bool anneal = false;
  bool augmented = false;
  int gibbs_epochs = -1;
  double accuracy = 0;
  std::array<double, kNumClasses> per_class_accuracy{};
  int images = 0;
  double mean_encode_ns = 0, mean_classify_ns = 0, mean_feedback_ns = 0;
  std::uint64_t distance_evals = 0;
  bool failed = false;
  std::string fail_reason;
};

struct ExperimentSpec {
  PipelineConfig pipeline;
  std::vector<double> occlusions{0.0, 0.11, 0.25, 0.33, 0.50};
  std::vector<std::string> baselines{"feedforward", "feedback"};
  std::vector<int> k2_values;            // empty: pipeline.k2 only
  std::vector<FeedbackConfig> configs;   // feedback grid points
  std::vector<int> gibbs_values{0, 1, 5, 20};
  RbmOptions rbm;
  bool rbm_binary_readout = false;
  bool eval_augmented = false;  // additionally evaluate the augmented bank
};

/// Runs every grid point, training shared artifacts once per
/// artifact-affecting parameter (one memory per K2 value). Infeasible
/// points become failed rows and the sweep continues.
std::vector<ResultRow> run_sweep(const ExperimentSpec& spec);

/// Least-squares fit of per-image feedback time against K2.
struct TimingReport {
  std::vector<std::pair<int, double>> mean_feedback_ns_by_k2;
  double slope = 0, intercept = 0, r2 = 0;
  std::uint64_t total_distance_evals = 0;
};
TimingReport timing_report(const std::vector<ResultRow>& rows);

/// results.csv (deterministic columns only), timing.csv (wall-clock), and
/// per-figure plot-data files. On an unwritable path the rows are echoed to
/// stdout before the error is raised so nothing is lost.
void emit_outputs(const std::vector<ResultRow>& rows, const std::filesystem::path& out_dir);

std::string results_csv(const std::vector<ResultRow>& rows);

/// Key-value run manifest (seed, version, resolved parameters).
void write_manifest(const std::filesystem::path& file,
                    const std::vector<std::pair<std::string, std::string>>& entries);

// ---------------------------------------------------------------------------
// Two-class, two-attribute toy world for the imputation-geometry oracle.

struct ToyWorld {
  std::vector<Eigen::Vector2d> centers;
  std::vector<int> center_class;  // 0 or 1 per center
  double sigma = 0.35;            // shared isotropic cluster spread
};

ToyWorld default_toy_world();

struct ToyResult {
  int trials = 0;
  double err_before = 0;  // nearest-center misclassification of distorted points
  double err_after = 0;   // after merging toward the nearest cluster center
  double frac_saved = 0;  // wrong before, right after
  double frac_broken = 0; // right before, wrong after
  double mean_ratio_before = 0;  // |x-mu_true|^2 / |x-mu_other|^2
  double mean_ratio_after = 0;
};

/// Monte-Carlo: sample a point from a random cluster, add `distortion` to
/// attribute 0, classify by nearest cluster center before and after moving
/// the point toward its nearest center with magnitude alpha.
ToyResult toy_oracle(const ToyWorld& world, int trials, double distortion, double alpha,
                     std::uint64_t seed);

}  // namespace occrec
