#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "occrec/classifiers.hpp"
#include "occrec/memory.hpp"
#include "occrec/ops.hpp"
#include "occrec/types.hpp"

namespace occrec {

enum class Scheme { winner_takes_all, average, non_class_specific };

Scheme scheme_from_string(const std::string& name);
std::string to_string(Scheme s);

struct FeedbackConfig {
  double alpha = 0.5;  // Layer-2 feedback magnitude
  double beta = 0.0;   // Layer-1 feedback magnitude
  double tau = 0.0;    // re-pooling feedback ratio
  int iterations = 3;  // T
  int m = 3;           // hypothesis count
  Scheme scheme = Scheme::winner_takes_all;
  bool layer1_feedback = false;
  bool anneal = true;        // halve alpha (and beta) after each iteration
  bool ncs_average3 = false; // class-agnostic scheme: average 3 nearest instead of 1

  void validate() const;
};

/// One loop iteration's observables, plus a final entry holding the closing
/// hypothesis extraction. Enough to audit competition, contraction, and the
/// annealing schedule offline.
struct IterationRecord {
  int iteration = 0;              // 0-based; the final entry repeats the count
  bool final_entry = false;
  std::array<int, 3> hyps{-1, -1, -1};
  int hyp_count = 0;
  double alpha = 0, beta = 0;
  int chosen_class = -1;          // class whose memory supplied the sample
  Index chosen_center = -1;       // center row within that memory
  std::array<double, 3> hyp_dist2{0, 0, 0};  // nearest-center distance^2 per hypothesis
  double chosen_dist2 = 0;        // |h2 - sample|^2 before the merge
  double merged_dist2 = 0;        // |h2' - sample|^2 after the merge
  std::array<Index, 3> ncs_nearest{-1, -1, -1};  // diagnostics, class-agnostic scheme
  std::uint64_t cluster_evals = 0;  // distances to memory centers this iteration
  std::uint64_t wall_ns = 0;
};

struct TrajectoryLog {
  std::vector<IterationRecord> entries;  // iterations + 1

  std::uint64_t total_cluster_evals() const;
  std::uint64_t total_wall_ns() const;
};

/// Writes one line per record: space-separated key=value fields.
void write_trajectory(std::ostream& out, const TrajectoryLog& log);

struct PerClassSamples {
  std::vector<VecF> samples;          // one per hypothesis
  std::vector<Index> center_indices;  // row within the hypothesis class memory
  std::vector<double> dist2;          // squared distance to h2
  std::uint64_t evals = 0;
};

/// For each class hypothesis, the nearest center in that class's memory.
PerClassSamples sample_per_class(const VecF& h2, const std::vector<int>& hyps,
                                 const ClusterMemory& mem);

struct CompetitionResult {
  VecF sample;
  int source_class = -1;   // -1 for averaged or class-agnostic samples
  Index center_index = -1; // winning hypothesis sample or global center row
  double dist2 = 0;        // squared distance of the sample to h2
  std::array<Index, 3> ncs_nearest{-1, -1, -1};
  std::uint64_t evals = 0; // extra memory-center distances (class-agnostic)
};

/// Resolves the retrieved samples into the single feedback vector:
/// winner-takes-all keeps the sample closest to h2, average takes the
/// arithmetic mean, and the class-agnostic scheme ignores the samples and
/// queries the global memory directly.
CompetitionResult compete(const VecF& h2, const PerClassSamples& samples,
                          const std::vector<int>& hyps, const FeedbackConfig& cfg,
                          const ClusterMemory& mem);

/// (h2 + alpha * sample) / (1 + alpha), elementwise.
VecF merge_layer2(const VecF& h2, const VecF& sample, double alpha);

/// (h1 + beta * sample) / (1 + beta); shapes must agree.
Layer1Activity<float> merge_layer1(const Layer1Activity<float>& h1,
                                   const Layer1Activity<float>& sample, double beta);

/// Nearest stored training row to the merged Layer-2 activity; the Layer-1
/// retrieval index. Throws config_error when Layer-1 storage is off
/// (enable with --store-h1 on).
NearestHit sample_layer1_index(const VecF& h2_next, const ActivityStore& store);

/// Fetches the stored Layer-1 activity for a training row.
Layer1Activity<float> fetch_layer1(const ActivityStore& store, Index row);

/// (h2_next + tau * pool(h1_next)) / (1 + tau).
VecF repool_merge(const VecF& h2_next, const Layer1Activity<float>& h1_next, double tau);

struct ClassifyResult {
  int label = -1;
  TrajectoryLog log;
};

/// The full iterative classification loop starting from a raw image:
/// encode and pool once, then `iterations` rounds of hypothesis extraction,
/// memory sampling, competition, and merging (Layer-1 stages only when
/// enabled), with the feedback magnitudes halved per round when annealing.
/// The label is the first hypothesis of the closing extraction.
ClassifyResult classify_recurrent(const ImageRecord& image, const DictionaryF& dict,
                                  const ClusterMemory& mem, const ActivityStore& store,
                                  const HypothesisBank& bank, const FeedbackConfig& cfg);

/// Same loop starting from a precomputed Layer-2 activity. Only valid when
/// Layer-1 feedback is off; used by sweeps that cache encodings.
ClassifyResult classify_recurrent_from_h2(const VecF& h2, const ClusterMemory& mem,
                                          const HypothesisBank& bank, const FeedbackConfig& cfg);

}  // namespace occrec
