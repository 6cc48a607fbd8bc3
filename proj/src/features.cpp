#include "occrec/features.hpp"

#include <random>

#include "occrec/kmeans.hpp"

namespace occrec {

namespace detail {

RowMatF extract_patches(const ImageRecord& image, int patch_size) {
  const int side = kImageSide + 1 - patch_size;
  const Index dim = static_cast<Index>(patch_size) * patch_size * kChannels;
  RowMatF patches(static_cast<Index>(side) * side, dim);
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      Index row = static_cast<Index>(r) * side + c;
      Index col = 0;
      for (int ch = 0; ch < kChannels; ++ch)
        for (int pr = 0; pr < patch_size; ++pr)
          for (int pc = 0; pc < patch_size; ++pc)
            patches(row, col++) = static_cast<float>(image.at(ch, r + pr, c + pc));
    }
  }
  return patches;
}

void normalize_patches(RowMatF& patches, double reg) {
  const Index dim = patches.cols();
  for (Index i = 0; i < patches.rows(); ++i) {
    auto row = patches.row(i);
    const float mean = row.mean();
    row.array() -= mean;
    const float var = row.squaredNorm() / static_cast<float>(dim);
    row /= std::sqrt(var + static_cast<float>(reg));
  }
}

}  // namespace detail

DictionaryF learn_dictionary(const std::vector<ImageRecord>& train,
                             const DictionaryFitOptions& opt) {
  if (opt.field_count < 2) throw config_error("learn_dictionary: field_count must be >= 2");
  if (opt.patch_size < 1 || opt.patch_size > kImageSide)
    throw config_error("learn_dictionary: patch_size out of range");
  const std::size_t total = train.size() * static_cast<std::size_t>(opt.patches_per_image);
  if (total < 10 * static_cast<std::size_t>(opt.field_count))
    throw config_error("learn_dictionary: need at least 10*K patches, have " +
                       std::to_string(total));

  const int w = opt.patch_size;
  const int max_origin = kImageSide - w;
  const Index dim = static_cast<Index>(w) * w * kChannels;
  RowMatF patches(static_cast<Index>(total), dim);
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<int> origin(0, max_origin);
  std::uniform_int_distribution<std::size_t> image_pick(0, train.size() - 1);
  for (Index p = 0; p < patches.rows(); ++p) {
    const ImageRecord& img = train[image_pick(rng)];
    const int r0 = origin(rng), c0 = origin(rng);
    Index col = 0;
    for (int ch = 0; ch < kChannels; ++ch)
      for (int pr = 0; pr < w; ++pr)
        for (int pc = 0; pc < w; ++pc)
          patches(p, col++) = static_cast<float>(img.at(ch, r0 + pr, c0 + pc));
  }

  detail::normalize_patches(patches, opt.norm_reg);

  // ZCA fit in double for a stable eigendecomposition.
  Mat<double> x = patches.cast<double>();
  Vec<double> mean = x.colwise().mean().transpose();
  x.rowwise() -= mean.transpose();
  Mat<double> cov = (x.transpose() * x) / static_cast<double>(x.rows() - 1);
  if (cov.diagonal().maxCoeff() <= 0)
    throw config_error("learn_dictionary: degenerate patch sample (zero variance)");
  Eigen::SelfAdjointEigenSolver<Mat<double>> eig(cov);
  Vec<double> scale = (eig.eigenvalues().array() + opt.zca_eps).rsqrt();
  Mat<double> whitener =
      eig.eigenvectors() * scale.asDiagonal() * eig.eigenvectors().transpose();

  RowMatF whitened = (x * whitener).cast<float>();

  KMeansOptions km;
  km.clusters = opt.field_count;
  km.max_iters = opt.kmeans_iters;
  km.rel_tol = 1e-5;
  km.seed = opt.seed ^ 0x9e3779b97f4a7c15ull;
  km.spherical = true;
  auto fit = kmeans<float>(whitened, km);

  DictionaryF dict;
  dict.patch_size = w;
  dict.channels = kChannels;
  dict.norm_reg = static_cast<float>(opt.norm_reg);
  dict.mean = mean.cast<float>();
  dict.whitener = whitener.cast<float>();
  dict.fields = fit.centers;
  return dict;
}

Layer1Activity<float> encode_layer1(const ImageRecord& image, const DictionaryF& dict) {
  if (dict.fields.rows() == 0) throw config_error("encode_layer1: dictionary not fitted");
  RowMatF patches = detail::extract_patches(image, dict.patch_size);
  detail::normalize_patches(patches, dict.norm_reg);
  RowMatF whitened = (patches.rowwise() - dict.mean.transpose()) * dict.whitener;
  const int side = dict.grid_side();
  Layer1Activity<float> act;
  act.rows = side;
  act.cols = side;
  act.values = triangle_encode<float>(whitened, dict.fields);
  return act;
}

VecF encode_h2(const ImageRecord& image, const DictionaryF& dict) {
  return pool_quadrants(encode_layer1(image, dict));
}

}  // namespace occrec
