#pragma once

#include <cstdint>
#include <vector>

#include "occrec/dataset.hpp"
#include "occrec/ops.hpp"
#include "occrec/types.hpp"

namespace occrec {

/// Learned front end for convolutional encoding: a patch whitening
/// transform plus K unit-norm receptive fields in the whitened space.
template <typename T>
struct Dictionary {
  int patch_size = 6;     // w
  int channels = kChannels;
  T norm_reg = T(10);     // variance regularizer used for patch normalization
  Vec<T> mean;            // length w*w*channels, mean of normalized patches
  Mat<T> whitener;        // symmetric ZCA transform, (w*w*channels)^2
  RowMat<T> fields;       // K x (w*w*channels), unit L2 rows

  Index field_count() const { return fields.rows(); }
  Index patch_dim() const { return static_cast<Index>(patch_size) * patch_size * channels; }
  int grid_side() const { return kImageSide + 1 - patch_size; }
};

using DictionaryF = Dictionary<float>;

struct DictionaryFitOptions {
  int field_count = 200;       // K
  int patch_size = 6;          // w
  int patches_per_image = 20;
  std::uint64_t seed = 1;
  double zca_eps = 0.01;       // eigenvalue regularizer
  double norm_reg = 10.0;      // added to patch variance before division
  int kmeans_iters = 30;
};

/// Samples random patches, applies per-patch brightness/contrast
/// normalization, fits ZCA whitening, and runs spherical k-means for the
/// receptive fields. Deterministic for a fixed seed.
DictionaryF learn_dictionary(const std::vector<ImageRecord>& train,
                             const DictionaryFitOptions& opt);

template <typename T>
using Layer1Activity = ActivityGrid<T>;

/// Dense stride-1 encoding: every w x w patch is normalized, whitened,
/// and triangle-encoded against the dictionary fields. Output grid is
/// (33 - w) x (33 - w) with one map per field, all entries >= 0.
Layer1Activity<float> encode_layer1(const ImageRecord& image, const DictionaryF& dict);

/// encode_layer1 followed by quadrant mean-pooling; the standard
/// feedforward activity vector of length 4K.
VecF encode_h2(const ImageRecord& image, const DictionaryF& dict);

namespace detail {

/// All stride-1 patches of an image as rows (grid row-major), raw intensities.
RowMatF extract_patches(const ImageRecord& image, int patch_size);

/// Per-row brightness/contrast normalization: subtract the row mean and
/// divide by sqrt(var + reg).
void normalize_patches(RowMatF& patches, double reg);

}  // namespace detail

}  // namespace occrec
