#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "occrec/harness.hpp"
#include "occrec/synth.hpp"

using namespace occrec;
namespace fs = std::filesystem;

namespace {

// One tiny corpus on disk for the sweep tests.
const fs::path& corpus_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "occrec_harness_corpus";
    SynthOptions opt;
    opt.seed = 99;
    opt.train_per_batch = 120;  // 600 train
    opt.test_count = 80;
    write_synthetic_corpus(d, opt);
    return d;
  }();
  return dir;
}

ExperimentSpec tiny_spec() {
  ExperimentSpec spec;
  spec.pipeline.data_dir = corpus_dir();
  spec.pipeline.train_count = 500;
  spec.pipeline.test_count = 60;
  spec.pipeline.dict.field_count = 12;
  spec.pipeline.dict.patches_per_image = 10;
  spec.pipeline.k2 = 3;
  spec.pipeline.seed = 5;
  spec.occlusions = {0.0, 0.50};
  spec.baselines = {"feedforward", "feedback"};
  FeedbackConfig cfg;
  cfg.iterations = 2;
  spec.configs = {cfg};
  return spec;
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file);
  REQUIRE(in);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("sweep produces one row per grid point and is deterministic") {
  const ExperimentSpec spec = tiny_spec();
  const auto rows = run_sweep(spec);
  REQUIRE(rows.size() == 4);  // 2 occlusions x (feedforward + 1 feedback config)
  for (const auto& row : rows) {
    CHECK_FALSE(row.failed);
    CHECK(row.accuracy >= 0.0);
    CHECK(row.accuracy <= 1.0);
    CHECK(row.images == 60);
  }
  // feedback rows carry exact counter totals: m * K2 * T * images
  for (const auto& row : rows)
    if (row.baseline == "feedback")
      CHECK(row.distance_evals == 3ull * 3 * 2 * 60);

  const auto again = run_sweep(spec);
  CHECK(results_csv(rows) == results_csv(again));  // byte-identical
}

TEST_CASE("alpha is irrelevant at T=0") {
  ExperimentSpec spec = tiny_spec();
  spec.occlusions = {0.33};
  FeedbackConfig a, b;
  a.iterations = 0;
  a.alpha = 0.1;
  b.iterations = 0;
  b.alpha = 0.9;
  spec.configs = {a, b};
  const auto rows = run_sweep(spec);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].accuracy == rows[2].accuracy);
  CHECK(rows[1].mean_feedback_ns == 0.0);
  CHECK(rows[1].accuracy == rows[0].accuracy);  // equals feedforward
}

TEST_CASE("infeasible grid points fail in place and the sweep continues") {
  ExperimentSpec spec = tiny_spec();
  spec.occlusions = {0.0};
  spec.k2_values = {3, 1000};  // 1000 > class sizes
  const auto rows = run_sweep(spec);
  REQUIRE(rows.size() == 3);  // ff + feedback@k2=3 + failed feedback@k2=1000
  int failed = 0;
  for (const auto& row : rows)
    if (row.failed) {
      ++failed;
      CHECK(row.k2 == 1000);
      CHECK(row.fail_reason.find("class") != std::string::npos);
    }
  CHECK(failed == 1);
}

TEST_CASE("augmented banks add rows flagged augmented") {
  ExperimentSpec spec = tiny_spec();
  spec.occlusions = {0.50};
  spec.pipeline.augment_levels = {0.50};
  spec.eval_augmented = true;
  const auto rows = run_sweep(spec);
  REQUIRE(rows.size() == 4);
  int augmented = 0;
  for (const auto& row : rows) augmented += row.augmented;
  CHECK(augmented == 2);
}

TEST_CASE("emit_outputs writes results, timing, and plot data") {
  const auto rows = run_sweep(tiny_spec());
  const fs::path out = fs::temp_directory_path() / "occrec_harness_out";
  fs::remove_all(out);
  emit_outputs(rows, out);
  const std::string csv = slurp(out / "results.csv");
  CHECK(csv.find("baseline,occlusion,k2") == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);  // header + 4 rows
  CHECK(csv == results_csv(rows));
  CHECK(fs::exists(out / "timing.csv"));
  const std::string occ = slurp(out / "occlusion_accuracy.tsv");
  CHECK(occ.find("occlusion\taccuracy\tbaseline") == 0);
  fs::remove_all(out);
}

TEST_CASE("timing report fits a clean line") {
  std::vector<ResultRow> rows;
  for (int k2 : {10, 25, 50, 100}) {
    ResultRow row;
    row.baseline = "feedback";
    row.k2 = k2;
    row.mean_feedback_ns = 1000.0 + 35.0 * k2;
    row.distance_evals = 100;
    rows.push_back(row);
  }
  const TimingReport rep = timing_report(rows);
  CHECK(rep.slope == doctest::Approx(35.0));
  CHECK(rep.intercept == doctest::Approx(1000.0));
  CHECK(rep.r2 == doctest::Approx(1.0));
  CHECK(rep.total_distance_evals == 400);
}

TEST_CASE("manifest is plain key=value text") {
  const fs::path file = fs::temp_directory_path() / "occrec_manifest.txt";
  write_manifest(file, {{"seed", "7"}, {"k2", "50"}});
  CHECK(slurp(file) == "seed=7\nk2=50\n");
  fs::remove(file);
}

TEST_CASE("toy oracle: overlap-only errors without distortion") {
  // single cluster per class: classifier and memory rules coincide, so
  // imputation cannot move any decision and the error rate is the analytic
  // nearest-mean value
  ToyWorld world;
  world.centers = {{0.0, 0.0}, {2.0, 0.0}};
  world.center_class = {0, 1};
  world.sigma = 0.5;
  const ToyResult res = toy_oracle(world, 100000, 0.0, 1.0, 11);
  CHECK(res.err_before == res.err_after);
  CHECK(res.frac_saved == 0.0);
  CHECK(res.frac_broken == 0.0);
  const double analytic = 0.5 * std::erfc((2.0 / (2.0 * 0.5)) / std::sqrt(2.0));
  // dense-grid enumeration oracle for the same quantity
  double grid_err = 0, grid_mass = 0;
  const double step = 0.02;
  for (double x = -4.0; x <= 6.0; x += step)
    for (double y = -3.0; y <= 3.0; y += step) {
      for (std::size_t c = 0; c < 2; ++c) {
        const double dx = x - world.centers[c](0), dy = y - world.centers[c](1);
        const double density = std::exp(-(dx * dx + dy * dy) / (2 * 0.5 * 0.5));
        const int decide = (x - 0.0) * (x - 0.0) + y * y <= (x - 2.0) * (x - 2.0) + y * y ? 0 : 1;
        grid_mass += density;
        if (decide != static_cast<int>(c)) grid_err += density;
      }
    }
  CHECK(res.err_before == doctest::Approx(grid_err / grid_mass).epsilon(0.05));
  CHECK(res.err_before == doctest::Approx(analytic).epsilon(0.05));
}

TEST_CASE("toy oracle: imputation saves points whose nearest cluster stays correct") {
  // two clusters per class; +2 distortion sweeps points from cluster (4,0)
  // across the class-mean boundary while their nearest cluster stays class 0
  ToyWorld world;
  world.centers = {{0.0, 0.0}, {4.0, 0.0}, {2.0, 3.0}, {6.0, 3.0}};
  world.center_class = {0, 0, 1, 1};
  world.sigma = 0.01;
  const ToyResult res = toy_oracle(world, 8000, 2.0, 1e9, 13);
  CHECK(res.err_before == doctest::Approx(0.25).epsilon(0.15));
  CHECK(res.err_after == 0.0);
  CHECK(res.frac_saved == doctest::Approx(0.25).epsilon(0.15));
  CHECK(res.frac_broken == 0.0);
  // the likelihood-style ratio improves toward the true class
  CHECK(res.mean_ratio_after <= res.mean_ratio_before);
}

TEST_CASE("toy oracle: correction probability decays for severe distortion") {
  ToyWorld world;
  world.centers = {{0.0, 0.0}, {4.0, 0.0}, {2.0, 3.0}, {6.0, 3.0}};
  world.center_class = {0, 0, 1, 1};
  world.sigma = 0.2;
  const ToyResult mild = toy_oracle(world, 30000, 2.0, 1e9, 17);
  const ToyResult severe = toy_oracle(world, 30000, 8.0, 1e9, 17);
  CHECK(mild.frac_saved > severe.frac_saved);
  CHECK_THROWS_AS(toy_oracle(world, 0, 1.0, 1.0, 1), config_error);
}
