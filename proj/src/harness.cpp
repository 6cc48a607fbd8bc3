#include "occrec/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include "occrec/dataset.hpp"
#include "occrec/parallel.hpp"

namespace occrec {

namespace {

using clock_type = std::chrono::steady_clock;

std::uint64_t elapsed_ns(clock_type::time_point t0) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(clock_type::now() - t0).count());
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void finalize_accuracy(EvalResult& res, const std::vector<int>& labels,
                       const std::vector<std::uint8_t>& correct) {
  std::array<int, kNumClasses> total{}, hit{};
  int all_hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ++total[static_cast<std::size_t>(labels[i])];
    if (correct[i]) {
      ++hit[static_cast<std::size_t>(labels[i])];
      ++all_hit;
    }
  }
  res.images = static_cast<int>(labels.size());
  res.accuracy = labels.empty() ? 0 : static_cast<double>(all_hit) / static_cast<double>(labels.size());
  for (int c = 0; c < kNumClasses; ++c)
    res.per_class_accuracy[static_cast<std::size_t>(c)] =
        total[static_cast<std::size_t>(c)] ? static_cast<double>(hit[static_cast<std::size_t>(c)]) /
                                                 static_cast<double>(total[static_cast<std::size_t>(c)])
                                           : 0;
}

}  // namespace

void PipelineConfig::apply_seed() {
  dict.seed = seed;
  svm.seed = seed ^ 0x5851f42d4c957f2dull;
}

Artifacts train_pipeline(const std::vector<ImageRecord>& train, const PipelineConfig& cfg) {
  Artifacts art;
  art.dict = learn_dictionary(train, cfg.dict);
  StoreOptions sopt;
  sopt.store_h1 = cfg.store_h1;
  sopt.h1_file = cfg.h1_file;
  sopt.lowpass = cfg.lowpass;
  art.store = build_store(train, art.dict, sopt);
  art.memory = build_cluster_memory(art.store, cfg.k2, cfg.seed ^ 0xa0761d6478bd642full);
  art.bank = train_bank(art.store, cfg.svm);
  if (!cfg.augment_levels.empty()) {
    const auto augmented = augment_with_occlusions(train, cfg.augment_levels);
    StoreOptions aopt;
    aopt.lowpass = cfg.lowpass;
    const ActivityStore aug_store = build_store(augmented, art.dict, aopt);
    art.bank_augmented = train_bank(aug_store, cfg.svm);
  }
  return art;
}

EncodedTestSet encode_test_set(const std::vector<ImageRecord>& test, const DictionaryF& dict,
                               double occlusion) {
  EncodedTestSet set;
  set.occlusion = occlusion;
  set.h2.resize(static_cast<Index>(test.size()), 4 * dict.field_count());
  set.labels.resize(test.size());
  std::vector<std::uint64_t> ns(test.size());
  const OcclusionSpec spec{occlusion};
  parallel_for(test.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto t0 = clock_type::now();
      const ImageRecord img = occlude(test[i], spec);
      set.h2.row(static_cast<Index>(i)) = encode_h2(img, dict).transpose();
      set.labels[i] = test[i].label;
      ns[i] = elapsed_ns(t0);
    }
  }, 8);
  double total = 0;
  for (auto v : ns) total += static_cast<double>(v);
  set.mean_encode_ns = test.empty() ? 0 : total / static_cast<double>(test.size());
  return set;
}

EvalResult eval_feedforward(const EncodedTestSet& test, const HypothesisBank& bank) {
  const std::size_t n = test.labels.size();
  std::vector<std::uint8_t> correct(n, 0);
  std::vector<std::uint64_t> ns(n, 0);
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto t0 = clock_type::now();
      const int label = bank.full.predict(test.h2.row(static_cast<Index>(i)).transpose());
      ns[i] = elapsed_ns(t0);
      correct[i] = label == test.labels[i];
    }
  }, 64);
  EvalResult res;
  finalize_accuracy(res, test.labels, correct);
  double total = 0;
  for (auto v : ns) total += static_cast<double>(v);
  res.mean_classify_ns = n ? total / static_cast<double>(n) : 0;
  return res;
}

EvalResult eval_feedback(const EncodedTestSet& test, const ClusterMemory& mem,
                         const HypothesisBank& bank, const FeedbackConfig& cfg) {
  const std::size_t n = test.labels.size();
  std::vector<std::uint8_t> correct(n, 0);
  std::vector<std::uint64_t> ns(n, 0), loop_ns(n, 0), evals(n, 0);
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto t0 = clock_type::now();
      const auto res = classify_recurrent_from_h2(test.h2.row(static_cast<Index>(i)).transpose(),
                                                  mem, bank, cfg);
      ns[i] = elapsed_ns(t0);
      correct[i] = res.label == test.labels[i];
      evals[i] = res.log.total_cluster_evals();
      for (const auto& entry : res.log.entries)
        if (!entry.final_entry) loop_ns[i] += entry.wall_ns;
    }
  }, 16);
  EvalResult res;
  finalize_accuracy(res, test.labels, correct);
  double total = 0, loop_total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total += static_cast<double>(ns[i]);
    loop_total += static_cast<double>(loop_ns[i]);
    res.distance_evals += evals[i];
  }
  res.mean_classify_ns = n ? total / static_cast<double>(n) : 0;
  res.mean_feedback_ns = n ? loop_total / static_cast<double>(n) : 0;
  return res;
}

EvalResult eval_feedback_images(const std::vector<ImageRecord>& test, double occlusion,
                                const DictionaryF& dict, const ClusterMemory& mem,
                                const ActivityStore& store, const HypothesisBank& bank,
                                const FeedbackConfig& cfg) {
  const std::size_t n = test.size();
  std::vector<std::uint8_t> correct(n, 0);
  std::vector<std::uint64_t> ns(n, 0), loop_ns(n, 0), evals(n, 0);
  std::vector<int> labels(n);
  const OcclusionSpec spec{occlusion};
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      labels[i] = test[i].label;
      const auto t0 = clock_type::now();
      const ImageRecord img = occlude(test[i], spec);
      const auto res = classify_recurrent(img, dict, mem, store, bank, cfg);
      ns[i] = elapsed_ns(t0);
      correct[i] = res.label == labels[i];
      evals[i] = res.log.total_cluster_evals();
      for (const auto& entry : res.log.entries)
        if (!entry.final_entry) loop_ns[i] += entry.wall_ns;
    }
  }, 8);
  EvalResult res;
  finalize_accuracy(res, labels, correct);
  double total = 0, loop_total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total += static_cast<double>(ns[i]);
    loop_total += static_cast<double>(loop_ns[i]);
    res.distance_evals += evals[i];
  }
  res.mean_classify_ns = n ? total / static_cast<double>(n) : 0;
  res.mean_feedback_ns = n ? loop_total / static_cast<double>(n) : 0;
  return res;
}

EvalResult eval_rbm(const EncodedTestSet& test, const RbmModel& model,
                    const LinearClassifier& clf, int gibbs_epochs, std::uint64_t seed,
                    bool binary_readout) {
  const std::size_t n = test.labels.size();
  std::vector<std::uint8_t> correct(n, 0);
  std::vector<std::uint64_t> ns(n, 0);
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto t0 = clock_type::now();
      const VecF v0 = binarize(test.h2.row(static_cast<Index>(i)).transpose(),
                               model.binarize_thresholds);
      const VecF corrected = gibbs_correct(v0, model, gibbs_epochs, seed + i, binary_readout);
      const int label = clf.predict(corrected);
      ns[i] = elapsed_ns(t0);
      correct[i] = label == test.labels[i];
    }
  }, 32);
  EvalResult res;
  finalize_accuracy(res, test.labels, correct);
  double total = 0;
  for (auto v : ns) total += static_cast<double>(v);
  res.mean_classify_ns = n ? total / static_cast<double>(n) : 0;
  return res;
}

namespace {

ResultRow make_row(const std::string& baseline, const EncodedTestSet& test,
                   const EvalResult& eval) {
  ResultRow row;
  row.baseline = baseline;
  row.occlusion = test.occlusion;
  row.accuracy = eval.accuracy;
  row.per_class_accuracy = eval.per_class_accuracy;
  row.images = eval.images;
  row.mean_encode_ns = test.mean_encode_ns;
  row.mean_classify_ns = eval.mean_classify_ns;
  row.mean_feedback_ns = eval.mean_feedback_ns;
  row.distance_evals = eval.distance_evals;
  return row;
}

}  // namespace

std::vector<ResultRow> run_sweep(const ExperimentSpec& spec) {
  PipelineConfig pcfg = spec.pipeline;
  pcfg.apply_seed();

  const auto train = load_cifar10_train(pcfg.data_dir, static_cast<std::size_t>(pcfg.train_count));
  const auto test = load_cifar10_test(pcfg.data_dir, static_cast<std::size_t>(pcfg.test_count));

  // the shared artifacts, trained once; cluster memories are per grid value
  // and an infeasible value must fail its rows rather than the whole sweep
  Artifacts art;
  art.dict = learn_dictionary(train, pcfg.dict);
  {
    StoreOptions sopt;
    sopt.store_h1 = pcfg.store_h1;
    sopt.h1_file = pcfg.h1_file;
    sopt.lowpass = pcfg.lowpass;
    art.store = build_store(train, art.dict, sopt);
  }
  art.bank = train_bank(art.store, pcfg.svm);
  if (!pcfg.augment_levels.empty()) {
    const auto augmented = augment_with_occlusions(train, pcfg.augment_levels);
    StoreOptions aopt;
    aopt.lowpass = pcfg.lowpass;
    art.bank_augmented = train_bank(build_store(augmented, art.dict, aopt), pcfg.svm);
  }

  std::vector<int> k2_values = spec.k2_values;
  if (k2_values.empty()) k2_values.push_back(pcfg.k2);
  std::map<int, ClusterMemory> memories;
  std::map<int, std::string> memory_errors;
  for (int k2 : k2_values) {
    try {
      memories.emplace(k2, build_cluster_memory(art.store, k2, pcfg.seed ^ 0xa0761d6478bd642full));
    } catch (const std::exception& ex) {
      memory_errors[k2] = ex.what();
    }
  }

  const bool wants_rbm =
      std::find(spec.baselines.begin(), spec.baselines.end(), "rbm") != spec.baselines.end();
  std::optional<RbmModel> rbm_model;
  std::optional<LinearClassifier> rbm_clf;
  if (wants_rbm) {
    const VecF thresholds = median_thresholds(art.store.h2);
    RowMatF binary(art.store.h2.rows(), art.store.h2.cols());
    for (Index i = 0; i < binary.rows(); ++i)
      binary.row(i) = binarize(art.store.h2.row(i).transpose(), thresholds).transpose();
    RbmOptions ropt = spec.rbm;
    ropt.hidden = static_cast<int>(art.store.h2.cols());
    ropt.seed = pcfg.seed ^ 0xe7037ed1a0b428dbull;
    rbm_model = train_rbm(binary, ropt, thresholds);
    rbm_clf = train_linear_svm(binary, art.store.labels,
                               [] {
                                 std::vector<int> all(kNumClasses);
                                 std::iota(all.begin(), all.end(), 0);
                                 return all;
                               }(),
                               pcfg.svm);
  }

  std::vector<ResultRow> rows;
  for (double occlusion : spec.occlusions) {
    const EncodedTestSet encoded = encode_test_set(test, art.dict, occlusion);
    for (const std::string& baseline : spec.baselines) {
      if (baseline == "feedforward") {
        ResultRow row = make_row(baseline, encoded, eval_feedforward(encoded, art.bank));
        rows.push_back(row);
        if (spec.eval_augmented && art.bank_augmented) {
          ResultRow aug = make_row(baseline, encoded,
                                   eval_feedforward(encoded, *art.bank_augmented));
          aug.augmented = true;
          rows.push_back(aug);
        }
      } else if (baseline == "feedback") {
        for (int k2 : k2_values) {
          for (const FeedbackConfig& cfg : spec.configs) {
            ResultRow row;
            row.baseline = baseline;
            row.occlusion = occlusion;
            row.k2 = k2;
            row.iterations = cfg.iterations;
            row.m = cfg.m;
            row.scheme = to_string(cfg.scheme);
            row.alpha = cfg.alpha;
            row.beta = cfg.beta;
            row.tau = cfg.tau;
            row.anneal = cfg.anneal;
            auto mem_it = memories.find(k2);
            if (mem_it == memories.end()) {
              row.failed = true;
              row.fail_reason = memory_errors.count(k2) ? memory_errors[k2] : "memory unavailable";
              rows.push_back(row);
              continue;
            }
            EvalResult eval;
            try {
              eval = cfg.layer1_feedback
                         ? eval_feedback_images(test, occlusion, art.dict, mem_it->second,
                                                art.store, art.bank, cfg)
                         : eval_feedback(encoded, mem_it->second, art.bank, cfg);
            } catch (const std::exception& ex) {
              row.failed = true;
              row.fail_reason = ex.what();
              rows.push_back(row);
              continue;
            }
            ResultRow filled = make_row(baseline, encoded, eval);
            filled.k2 = row.k2;
            filled.iterations = row.iterations;
            filled.m = row.m;
            filled.scheme = row.scheme;
            filled.alpha = row.alpha;
            filled.beta = row.beta;
            filled.tau = row.tau;
            filled.anneal = row.anneal;
            rows.push_back(filled);
            if (spec.eval_augmented && art.bank_augmented) {
              const EvalResult aug_eval =
                  eval_feedback(encoded, mem_it->second, *art.bank_augmented, cfg);
              ResultRow aug = make_row(baseline, encoded, aug_eval);
              aug.k2 = row.k2;
              aug.iterations = row.iterations;
              aug.m = row.m;
              aug.scheme = row.scheme;
              aug.alpha = row.alpha;
              aug.beta = row.beta;
              aug.tau = row.tau;
              aug.anneal = row.anneal;
              aug.augmented = true;
              rows.push_back(aug);
            }
          }
        }
      } else if (baseline == "rbm") {
        for (int gibbs : spec.gibbs_values) {
          ResultRow row = make_row(baseline, encoded,
                                   eval_rbm(encoded, *rbm_model, *rbm_clf, gibbs,
                                            pcfg.seed ^ 0x2545f4914f6cdd1dull,
                                            spec.rbm_binary_readout));
          row.gibbs_epochs = gibbs;
          rows.push_back(row);
        }
      } else {
        ResultRow row;
        row.baseline = baseline;
        row.occlusion = occlusion;
        row.failed = true;
        row.fail_reason = "unknown baseline";
        rows.push_back(row);
      }
    }
  }
  return rows;
}

TimingReport timing_report(const std::vector<ResultRow>& rows) {
  TimingReport rep;
  std::map<int, std::pair<double, int>> by_k2;
  for (const auto& row : rows) {
    if (row.failed) continue;
    rep.total_distance_evals += row.distance_evals;
    if (row.baseline != "feedback") continue;
    auto& slot = by_k2[row.k2];
    slot.first += row.mean_feedback_ns;
    slot.second += 1;
  }
  for (const auto& [k2, acc] : by_k2)
    rep.mean_feedback_ns_by_k2.emplace_back(k2, acc.first / acc.second);

  const std::size_t n = rep.mean_feedback_ns_by_k2.size();
  if (n >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (const auto& [x, y] : rep.mean_feedback_ns_by_k2) {
      sx += x;
      sy += y;
      sxx += x * static_cast<double>(x);
      sxy += x * y;
      syy += y * y;
    }
    const double dn = static_cast<double>(n);
    const double denom = dn * sxx - sx * sx;
    if (denom != 0) {
      rep.slope = (dn * sxy - sx * sy) / denom;
      rep.intercept = (sy - rep.slope * sx) / dn;
      double ss_res = 0, ss_tot = 0;
      const double mean_y = sy / dn;
      for (const auto& [x, y] : rep.mean_feedback_ns_by_k2) {
        const double pred = rep.intercept + rep.slope * x;
        ss_res += (y - pred) * (y - pred);
        ss_tot += (y - mean_y) * (y - mean_y);
      }
      rep.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
    }
  }
  return rep;
}

namespace {

const char* kResultHeader =
    "baseline,occlusion,k2,iterations,m,scheme,alpha,beta,tau,anneal,augmented,gibbs_epochs,"
    "accuracy,acc_c0,acc_c1,acc_c2,acc_c3,acc_c4,acc_c5,acc_c6,acc_c7,acc_c8,acc_c9,"
    "distance_evals,failed,fail_reason";

std::string row_csv(const ResultRow& r) {
  std::ostringstream os;
  os << r.baseline << ',' << format_double(r.occlusion) << ',' << r.k2 << ',' << r.iterations
     << ',' << r.m << ',' << r.scheme << ',' << format_double(r.alpha) << ','
     << format_double(r.beta) << ',' << format_double(r.tau) << ',' << (r.anneal ? 1 : 0) << ','
     << (r.augmented ? 1 : 0) << ',' << r.gibbs_epochs << ',' << format_double(r.accuracy);
  for (double a : r.per_class_accuracy) os << ',' << format_double(a);
  os << ',' << r.distance_evals << ',' << (r.failed ? 1 : 0) << ',' << r.fail_reason;
  return os.str();
}

void write_plotdata(const std::filesystem::path& file, const std::string& x_name,
                    const std::string& series_name,
                    const std::vector<std::array<std::string, 3>>& points) {
  if (points.empty()) return;
  std::ofstream out(file);
  if (!out) throw io_error("cannot write " + file.string());
  out << x_name << "\taccuracy\t" << series_name << "\n";
  for (const auto& p : points) out << p[0] << '\t' << p[1] << '\t' << p[2] << "\n";
}

}  // namespace

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::string csv = kResultHeader;
  csv += '\n';
  for (const auto& row : rows) {
    csv += row_csv(row);
    csv += '\n';
  }
  return csv;
}

void emit_outputs(const std::vector<ResultRow>& rows, const std::filesystem::path& out_dir) {
  if (rows.empty()) throw config_error("emit_outputs: no rows");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  const auto results_path = out_dir / "results.csv";
  std::ofstream results(results_path);
  if (!results) {
    // do not lose the computation: echo everything before failing
    std::cout << results_csv(rows);
    throw io_error("cannot write " + results_path.string());
  }
  results << results_csv(rows);

  std::ofstream timing(out_dir / "timing.csv");
  timing << "baseline,occlusion,k2,iterations,m,scheme,augmented,gibbs_epochs,"
            "mean_encode_ns,mean_classify_ns,mean_feedback_ns\n";
  for (const auto& r : rows) {
    if (r.failed) continue;
    timing << r.baseline << ',' << format_double(r.occlusion) << ',' << r.k2 << ','
           << r.iterations << ',' << r.m << ',' << r.scheme << ',' << (r.augmented ? 1 : 0) << ','
           << r.gibbs_epochs << ',' << format_double(r.mean_encode_ns) << ','
           << format_double(r.mean_classify_ns) << ',' << format_double(r.mean_feedback_ns) << "\n";
  }

  // figure-style views over whatever the sweep produced
  std::vector<std::array<std::string, 3>> occ_points, k2_points, iter_points, scheme_points,
      gibbs_points, augment_points, alpha_points;
  for (const auto& r : rows) {
    if (r.failed) continue;
    const std::string acc = format_double(r.accuracy);
    const std::string series = r.baseline + (r.augmented ? "+augmented" : "");
    occ_points.push_back({format_double(r.occlusion), acc, series});
    if (r.baseline == "feedback") {
      k2_points.push_back({std::to_string(r.k2), acc, format_double(r.occlusion)});
      iter_points.push_back({std::to_string(r.iterations), acc, r.scheme});
      scheme_points.push_back({std::to_string(r.iterations), acc, r.scheme});
      alpha_points.push_back({format_double(r.alpha), acc, std::to_string(r.iterations)});
    }
    if (r.baseline == "rbm")
      gibbs_points.push_back({std::to_string(r.gibbs_epochs), acc, format_double(r.occlusion)});
    if (r.augmented) augment_points.push_back({format_double(r.occlusion), acc, r.baseline});
  }
  write_plotdata(out_dir / "occlusion_accuracy.tsv", "occlusion", "baseline", occ_points);
  write_plotdata(out_dir / "k2_accuracy.tsv", "k2", "occlusion", k2_points);
  write_plotdata(out_dir / "iterations_accuracy.tsv", "iterations", "scheme", iter_points);
  write_plotdata(out_dir / "scheme_accuracy.tsv", "iterations", "scheme", scheme_points);
  write_plotdata(out_dir / "gibbs_accuracy.tsv", "gibbs_epochs", "occlusion", gibbs_points);
  write_plotdata(out_dir / "augment_accuracy.tsv", "occlusion", "baseline", augment_points);
  write_plotdata(out_dir / "alpha_accuracy.tsv", "alpha", "iterations", alpha_points);
}

void write_manifest(const std::filesystem::path& file,
                    const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream out(file);
  if (!out) throw io_error("cannot write " + file.string());
  for (const auto& [key, value] : entries) out << key << "=" << value << "\n";
}

ToyWorld default_toy_world() {
  ToyWorld world;
  world.centers = {{0.0, 0.0}, {2.4, 0.6}, {1.0, 1.8}, {3.4, 2.2}};
  world.center_class = {0, 0, 1, 1};
  world.sigma = 0.35;
  return world;
}

ToyResult toy_oracle(const ToyWorld& world, int trials, double distortion, double alpha,
                     std::uint64_t seed) {
  if (trials < 1) throw config_error("toy_oracle: trials must be >= 1");
  if (world.centers.size() < 2 || world.centers.size() != world.center_class.size())
    throw config_error("toy_oracle: malformed world");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, world.sigma);
  std::uniform_int_distribution<std::size_t> pick(0, world.centers.size() - 1);

  // The output layer sees classes coarsely (one mean per class); the memory
  // retains the individual cluster centers. The gap between the two rules is
  // what lets a pull toward the nearest cluster center cross back over the
  // class boundary.
  std::array<Eigen::Vector2d, 2> class_mean{Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero()};
  std::array<int, 2> class_count{0, 0};
  for (std::size_t i = 0; i < world.centers.size(); ++i) {
    class_mean[static_cast<std::size_t>(world.center_class[i])] += world.centers[i];
    ++class_count[static_cast<std::size_t>(world.center_class[i])];
  }
  for (int c = 0; c < 2; ++c) {
    if (class_count[static_cast<std::size_t>(c)] == 0)
      throw config_error("toy_oracle: class " + std::to_string(c) + " has no clusters");
    class_mean[static_cast<std::size_t>(c)] /= class_count[static_cast<std::size_t>(c)];
  }
  const auto classify = [&](const Eigen::Vector2d& x) {
    return (x - class_mean[0]).squaredNorm() <= (x - class_mean[1]).squaredNorm() ? 0 : 1;
  };
  const auto nearest = [&](const Eigen::Vector2d& x) {
    std::size_t best = 0;
    double bestd = (x - world.centers[0]).squaredNorm();
    for (std::size_t i = 1; i < world.centers.size(); ++i) {
      const double d = (x - world.centers[i]).squaredNorm();
      if (d < bestd) {
        bestd = d;
        best = i;
      }
    }
    return best;
  };
  const auto nearest_of_class = [&](const Eigen::Vector2d& x, int cls) {
    double bestd = std::numeric_limits<double>::infinity();
    Eigen::Vector2d best = x;
    for (std::size_t i = 0; i < world.centers.size(); ++i) {
      if (world.center_class[i] != cls) continue;
      const double d = (x - world.centers[i]).squaredNorm();
      if (d < bestd) {
        bestd = d;
        best = world.centers[i];
      }
    }
    return best;
  };

  ToyResult res;
  res.trials = trials;
  int wrong_before = 0, wrong_after = 0, saved = 0, broken = 0;
  double ratio_before = 0, ratio_after = 0;
  for (int t = 0; t < trials; ++t) {
    const std::size_t source = pick(rng);
    const int truth = world.center_class[source];
    Eigen::Vector2d x = world.centers[source] + Eigen::Vector2d(gauss(rng), gauss(rng));
    x(0) += distortion;

    const int before = classify(x);
    const Eigen::Vector2d target = world.centers[nearest(x)];
    const Eigen::Vector2d imputed = (x + alpha * target) / (1.0 + alpha);
    const int after = classify(imputed);

    const auto ratio = [&](const Eigen::Vector2d& p) {
      const Eigen::Vector2d mu_true = nearest_of_class(p, truth);
      const Eigen::Vector2d mu_other = nearest_of_class(p, 1 - truth);
      const double denom = (p - mu_other).squaredNorm();
      return denom > 0 ? (p - mu_true).squaredNorm() / denom
                       : std::numeric_limits<double>::infinity();
    };
    ratio_before += ratio(x);
    ratio_after += ratio(imputed);

    if (before != truth) ++wrong_before;
    if (after != truth) ++wrong_after;
    if (before != truth && after == truth) ++saved;
    if (before == truth && after != truth) ++broken;
  }
  res.err_before = static_cast<double>(wrong_before) / trials;
  res.err_after = static_cast<double>(wrong_after) / trials;
  res.frac_saved = static_cast<double>(saved) / trials;
  res.frac_broken = static_cast<double>(broken) / trials;
  res.mean_ratio_before = ratio_before / trials;
  res.mean_ratio_after = ratio_after / trials;
  return res;
}

}  // namespace occrec
