#pragma once

#include <cstdint>
#include <vector>

#include "occrec/classifiers.hpp"
#include "occrec/features.hpp"
#include "occrec/types.hpp"

namespace occrec {

/// Binary restricted Boltzmann machine over binarized Layer-2 activities.
/// One weight matrix serves both conditional directions.
struct RbmModel {
  MatF weights;       // V x H
  VecF visible_bias;  // V
  VecF hidden_bias;   // H
  VecF binarize_thresholds;          // per-dimension, length V
  std::vector<float> epoch_recon_error;  // mean |v0 - v1| per training epoch

  Index visible() const { return weights.rows(); }
  Index hidden() const { return weights.cols(); }

  VecF hidden_probs(const VecF& v) const;   // sigmoid(W'v + hidden_bias)
  VecF visible_probs(const VecF& h) const;  // sigmoid(Wh + visible_bias)

  /// -log unnormalized probability of a visible vector (free energy).
  double free_energy(const VecF& v) const;
};

/// 1 where the activity exceeds the threshold, else 0.
VecF binarize(const VecF& h2, float threshold);
VecF binarize(const VecF& h2, const VecF& thresholds);

/// Per-dimension lower median of the training rows; the default
/// binarization threshold.
VecF median_thresholds(const RowMatF& rows);

struct RbmOptions {
  int hidden = 800;
  float learning_rate = 0.1f;
  int batch = 100;
  int epochs = 100;
  std::uint64_t seed = 99;
};

/// CD-1 training on binary data (throws config_error otherwise).
/// Single-threaded: mini-batch order is part of the result.
RbmModel train_rbm(const RowMatF& data, const RbmOptions& opt,
                   const VecF& thresholds = VecF());

/// Alternating Gibbs sampling initialized at v0 for `epochs` full sweeps.
/// Returns the final visible activation probabilities (or a binary sample
/// with binary_readout). epochs = 0 returns v0 unchanged.
VecF gibbs_correct(const VecF& v0, const RbmModel& model, int epochs, std::uint64_t seed,
                   bool binary_readout = false);

/// encode -> pool -> binarize -> Gibbs correction -> linear classification.
int classify_with_rbm(const ImageRecord& image, const DictionaryF& dict, const RbmModel& model,
                      const LinearClassifier& clf, int gibbs_epochs, std::uint64_t seed,
                      bool binary_readout = false);

}  // namespace occrec
