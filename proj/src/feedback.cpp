#include "occrec/feedback.hpp"

#include <chrono>
#include <ostream>

namespace occrec {

Scheme scheme_from_string(const std::string& name) {
  if (name == "wta" || name == "winner_takes_all") return Scheme::winner_takes_all;
  if (name == "average") return Scheme::average;
  if (name == "ncs" || name == "non_class_specific") return Scheme::non_class_specific;
  throw config_error("unknown scheme '" + name + "' (expected wta|average|ncs)");
}

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::winner_takes_all: return "wta";
    case Scheme::average: return "average";
    case Scheme::non_class_specific: return "ncs";
  }
  return "?";
}

void FeedbackConfig::validate() const {
  if (alpha < 0 || beta < 0 || tau < 0)
    throw config_error("feedback magnitudes must be >= 0");
  if (iterations < 0) throw config_error("iterations must be >= 0");
  if (m < 1 || m > 3) throw config_error("hypothesis count m must be in {1,2,3}");
}

std::uint64_t TrajectoryLog::total_cluster_evals() const {
  std::uint64_t total = 0;
  for (const auto& e : entries) total += e.cluster_evals;
  return total;
}

std::uint64_t TrajectoryLog::total_wall_ns() const {
  std::uint64_t total = 0;
  for (const auto& e : entries) total += e.wall_ns;
  return total;
}

void write_trajectory(std::ostream& out, const TrajectoryLog& log) {
  for (const auto& e : log.entries) {
    out << "iter=" << e.iteration << " final=" << (e.final_entry ? 1 : 0);
    out << " hyps=";
    for (int i = 0; i < e.hyp_count; ++i) out << (i ? "," : "") << e.hyps[static_cast<std::size_t>(i)];
    if (!e.final_entry) {
      out << " alpha=" << e.alpha << " beta=" << e.beta
          << " chosen_class=" << e.chosen_class << " chosen_center=" << e.chosen_center
          << " chosen_dist2=" << e.chosen_dist2 << " merged_dist2=" << e.merged_dist2
          << " cluster_evals=" << e.cluster_evals;
    }
    out << " wall_ns=" << e.wall_ns << "\n";
  }
}

PerClassSamples sample_per_class(const VecF& h2, const std::vector<int>& hyps,
                                 const ClusterMemory& mem) {
  PerClassSamples out;
  out.samples.reserve(hyps.size());
  for (int cls : hyps) {
    if (cls < 0 || cls >= mem.num_classes())
      throw config_error("sample_per_class: hypothesis class " + std::to_string(cls) +
                         " outside memory range");
    const RowMatF& centers = mem.per_class[static_cast<std::size_t>(cls)];
    const NearestHit hit = nearest_center<float>(centers, h2);
    out.samples.emplace_back(centers.row(hit.index).transpose());
    out.center_indices.push_back(hit.index);
    out.dist2.push_back(hit.dist2);
    out.evals += hit.evals;
  }
  return out;
}

CompetitionResult compete(const VecF& h2, const PerClassSamples& samples,
                          const std::vector<int>& hyps, const FeedbackConfig& cfg,
                          const ClusterMemory& mem) {
  CompetitionResult res;
  switch (cfg.scheme) {
    case Scheme::winner_takes_all: {
      if (samples.samples.empty()) throw config_error("compete: no samples");
      std::size_t best = 0;
      for (std::size_t i = 1; i < samples.samples.size(); ++i)
        if (samples.dist2[i] < samples.dist2[best]) best = i;
      res.sample = samples.samples[best];
      res.source_class = hyps[best];
      res.center_index = samples.center_indices[best];
      res.dist2 = samples.dist2[best];
      return res;
    }
    case Scheme::average: {
      if (samples.samples.empty()) throw config_error("compete: no samples");
      VecF mean = VecF::Zero(h2.size());
      for (const auto& s : samples.samples) mean += s;
      mean /= static_cast<float>(samples.samples.size());
      res.sample = std::move(mean);
      res.dist2 = (res.sample - h2).squaredNorm();
      return res;
    }
    case Scheme::non_class_specific: {
      // three nearest global centers kept for diagnostics; the feedback
      // sample is the single nearest unless averaging is requested
      const RowMatF& centers = mem.global_centers;
      std::array<Index, 3> top{-1, -1, -1};
      std::array<double, 3> topd{0, 0, 0};
      int filled = 0;
      for (Index i = 0; i < centers.rows(); ++i) {
        const double d2 = (centers.row(i).transpose() - h2).squaredNorm();
        ++res.evals;
        int pos = filled;
        while (pos > 0 && topd[static_cast<std::size_t>(pos - 1)] > d2) --pos;
        if (pos < 3) {
          for (int s = std::min(filled, 2); s > pos; --s) {
            top[static_cast<std::size_t>(s)] = top[static_cast<std::size_t>(s - 1)];
            topd[static_cast<std::size_t>(s)] = topd[static_cast<std::size_t>(s - 1)];
          }
          top[static_cast<std::size_t>(pos)] = i;
          topd[static_cast<std::size_t>(pos)] = d2;
          if (filled < 3) ++filled;
        }
      }
      res.ncs_nearest = top;
      if (cfg.ncs_average3 && filled >= 1) {
        VecF mean = VecF::Zero(h2.size());
        const int take = std::min(filled, 3);
        for (int i = 0; i < take; ++i) mean += centers.row(top[static_cast<std::size_t>(i)]).transpose();
        mean /= static_cast<float>(take);
        res.sample = std::move(mean);
        res.dist2 = (res.sample - h2).squaredNorm();
      } else {
        res.sample = centers.row(top[0]).transpose();
        res.center_index = top[0];
        res.dist2 = topd[0];
      }
      return res;
    }
  }
  throw config_error("compete: unknown scheme");
}

VecF merge_layer2(const VecF& h2, const VecF& sample, double alpha) {
  if (alpha < 0) throw config_error("merge_layer2: alpha must be >= 0");
  return merge_toward(h2, sample, static_cast<float>(alpha));
}

Layer1Activity<float> merge_layer1(const Layer1Activity<float>& h1,
                                   const Layer1Activity<float>& sample, double beta) {
  if (beta < 0) throw config_error("merge_layer1: beta must be >= 0");
  if (h1.rows != sample.rows || h1.cols != sample.cols ||
      h1.values.cols() != sample.values.cols())
    throw config_error("merge_layer1: shape mismatch");
  Layer1Activity<float> out;
  out.rows = h1.rows;
  out.cols = h1.cols;
  out.values = merge_toward(h1.values, sample.values, static_cast<float>(beta));
  return out;
}

NearestHit sample_layer1_index(const VecF& h2_next, const ActivityStore& store) {
  if (!store.has_h1())
    throw config_error("Layer-1 sampling requires the Layer-1 store; rebuild with --store-h1 on");
  return nearest_center<float>(store.h2, h2_next);
}

Layer1Activity<float> fetch_layer1(const ActivityStore& store, Index row) {
  if (!store.has_h1())
    throw config_error("Layer-1 fetch requires the Layer-1 store; rebuild with --store-h1 on");
  const auto flat = store.h1->row(row);
  Layer1Activity<float> act;
  act.rows = store.layer1_rows;
  act.cols = store.layer1_cols;
  const Index k = store.layer1_maps;
  act.values.resize(static_cast<Index>(act.rows) * act.cols, k);
  for (Index loc = 0; loc < act.values.rows(); ++loc)
    act.values.row(loc) = flat.segment(loc * k, k).transpose();
  return act;
}

VecF repool_merge(const VecF& h2_next, const Layer1Activity<float>& h1_next, double tau) {
  if (tau < 0) throw config_error("repool_merge: tau must be >= 0");
  const VecF pooled = pool_quadrants(h1_next);
  return merge_toward(h2_next, pooled, static_cast<float>(tau));
}

namespace {

ClassifyResult run_loop(VecF h2, Layer1Activity<float>* h1, const ClusterMemory& mem,
                        const ActivityStore* store, const HypothesisBank& bank,
                        const FeedbackConfig& cfg) {
  using clock = std::chrono::steady_clock;
  ClassifyResult res;
  double alpha = cfg.alpha, beta = cfg.beta;

  for (int it = 0; it < cfg.iterations; ++it) {
    const auto t0 = clock::now();
    IterationRecord rec;
    rec.iteration = it;
    rec.alpha = alpha;
    rec.beta = beta;

    const std::vector<int> hyps = hypotheses(bank, h2, cfg.m);
    rec.hyp_count = static_cast<int>(hyps.size());
    for (std::size_t i = 0; i < hyps.size(); ++i) rec.hyps[i] = hyps[i];

    CompetitionResult winner;
    if (cfg.scheme == Scheme::non_class_specific) {
      winner = compete(h2, PerClassSamples{}, hyps, cfg, mem);
      rec.cluster_evals = winner.evals;
      rec.ncs_nearest = winner.ncs_nearest;
    } else {
      const PerClassSamples samples = sample_per_class(h2, hyps, mem);
      for (std::size_t i = 0; i < samples.dist2.size() && i < 3; ++i)
        rec.hyp_dist2[i] = samples.dist2[i];
      winner = compete(h2, samples, hyps, cfg, mem);
      rec.cluster_evals = samples.evals + winner.evals;
    }
    rec.chosen_class = winner.source_class;
    rec.chosen_center = winner.center_index;
    rec.chosen_dist2 = winner.dist2;

    h2 = merge_layer2(h2, winner.sample, alpha);
    rec.merged_dist2 = (h2 - winner.sample).squaredNorm();

    if (cfg.layer1_feedback) {
      const NearestHit hit = sample_layer1_index(h2, *store);
      const Layer1Activity<float> h1_sample = fetch_layer1(*store, hit.index);
      *h1 = merge_layer1(*h1, h1_sample, beta);
      h2 = repool_merge(h2, *h1, cfg.tau);
    }

    if (cfg.anneal) {
      alpha *= 0.5;
      beta *= 0.5;
    }
    rec.wall_ns = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - t0).count());
    res.log.entries.push_back(rec);
  }

  const auto t0 = clock::now();
  IterationRecord fin;
  fin.iteration = cfg.iterations;
  fin.final_entry = true;
  const std::vector<int> hyps = hypotheses(bank, h2, cfg.m);
  fin.hyp_count = static_cast<int>(hyps.size());
  for (std::size_t i = 0; i < hyps.size(); ++i) fin.hyps[i] = hyps[i];
  fin.wall_ns = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - t0).count());
  res.log.entries.push_back(fin);
  res.label = hyps[0];
  return res;
}

void check_dims(const DictionaryF& dict, const ClusterMemory& mem, const ActivityStore& store,
                const HypothesisBank& bank) {
  const Index h2_dim = 4 * dict.field_count();
  if (store.h2.cols() != h2_dim)
    throw config_error("classify_recurrent: store dimension " + std::to_string(store.h2.cols()) +
                       " != 4K = " + std::to_string(h2_dim));
  if (mem.dim() != h2_dim)
    throw config_error("classify_recurrent: memory dimension " + std::to_string(mem.dim()) +
                       " != 4K = " + std::to_string(h2_dim));
  if (bank.full.weights.cols() != h2_dim)
    throw config_error("classify_recurrent: classifier dimension " +
                       std::to_string(bank.full.weights.cols()) + " != 4K = " +
                       std::to_string(h2_dim));
}

}  // namespace

ClassifyResult classify_recurrent(const ImageRecord& image, const DictionaryF& dict,
                                  const ClusterMemory& mem, const ActivityStore& store,
                                  const HypothesisBank& bank, const FeedbackConfig& cfg) {
  cfg.validate();
  check_dims(dict, mem, store, bank);
  if (cfg.layer1_feedback && !store.has_h1())
    throw config_error("classify_recurrent: Layer-1 feedback needs the Layer-1 store; "
                       "rebuild with --store-h1 on");
  Layer1Activity<float> h1 = encode_layer1(image, dict);
  VecF h2 = pool_quadrants(h1);
  return run_loop(std::move(h2), cfg.layer1_feedback ? &h1 : nullptr, mem,
                  cfg.layer1_feedback ? &store : nullptr, bank, cfg);
}

ClassifyResult classify_recurrent_from_h2(const VecF& h2, const ClusterMemory& mem,
                                          const HypothesisBank& bank,
                                          const FeedbackConfig& cfg) {
  cfg.validate();
  if (cfg.layer1_feedback)
    throw config_error("classify_recurrent_from_h2: Layer-1 feedback needs the full image path");
  if (mem.dim() != h2.size())
    throw config_error("classify_recurrent_from_h2: memory dimension mismatch");
  return run_loop(h2, nullptr, mem, nullptr, bank, cfg);
}

}  // namespace occrec
