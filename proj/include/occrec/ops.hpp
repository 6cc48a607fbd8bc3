#pragma once

#include <cstdint>
#include <limits>

#include "occrec/types.hpp"

namespace occrec {

/// A stack of 2-D feature maps flattened into one matrix: entry
/// (r * cols + c, k) is map k at spatial position (r, c). This is the
/// shape produced by convolutional encoding and consumed by pooling.
template <typename T>
struct ActivityGrid {
  Mat<T> values;  // (rows*cols) x maps
  int rows = 0;
  int cols = 0;

  Index maps() const { return values.cols(); }
  T& at(int r, int c, Index k) { return values(static_cast<Index>(r) * cols + c, k); }
  T at(int r, int c, Index k) const { return values(static_cast<Index>(r) * cols + c, k); }
};

/// Mean-pools each feature map over the four spatial quadrants. The output
/// has length 4*maps, laid out quadrant-major: entry q*maps + k is the mean
/// of map k over quadrant q. Quadrants are ordered top-left, top-right,
/// bottom-left, bottom-right; on odd grids the middle row/column belongs to
/// the bottom/right quadrant.
template <typename T>
Vec<T> pool_quadrants(const ActivityGrid<T>& grid) {
  const Index k = grid.maps();
  const int rs = grid.rows / 2;  // top quadrants get floor(rows/2) rows
  const int cs = grid.cols / 2;
  Vec<T> out = Vec<T>::Zero(4 * k);
  for (int r = 0; r < grid.rows; ++r) {
    const int qr = r < rs ? 0 : 1;
    for (int c = 0; c < grid.cols; ++c) {
      const int q = qr * 2 + (c < cs ? 0 : 1);
      out.segment(q * k, k) += grid.values.row(static_cast<Index>(r) * grid.cols + c).transpose();
    }
  }
  const T top = static_cast<T>(rs), bot = static_cast<T>(grid.rows - rs);
  const T left = static_cast<T>(cs), right = static_cast<T>(grid.cols - cs);
  out.segment(0 * k, k) /= top * left;
  out.segment(1 * k, k) /= top * right;
  out.segment(2 * k, k) /= bot * left;
  out.segment(3 * k, k) /= bot * right;
  return out;
}

/// 3x3 box filter applied to every feature map, with replicated edges.
/// Each output sample is the mean of the nine (clamped) neighbours.
template <typename T>
ActivityGrid<T> box_filter_3x3(const ActivityGrid<T>& grid) {
  ActivityGrid<T> out{Mat<T>(grid.values.rows(), grid.values.cols()), grid.rows, grid.cols};
  const auto clampr = [&](int r) { return r < 0 ? 0 : (r >= grid.rows ? grid.rows - 1 : r); };
  const auto clampc = [&](int c) { return c < 0 ? 0 : (c >= grid.cols ? grid.cols - 1 : c); };
  const T inv9 = static_cast<T>(1) / static_cast<T>(9);
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      Index dst = static_cast<Index>(r) * grid.cols + c;
      auto acc = out.values.row(dst);
      acc.setZero();
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc)
          acc += grid.values.row(static_cast<Index>(clampr(r + dr)) * grid.cols + clampc(c + dc));
      acc *= inv9;
    }
  }
  return out;
}

/// Soft ("triangle") assignment of whitened patches against unit-norm
/// receptive fields: activation(i, k) = max(0, mean_j z(i,j) - z(i,k))
/// where z(i,k) is the Euclidean distance from patch i to field k.
/// Rows of `patches` and `fields` live in the same whitened space.
template <typename T>
Mat<T> triangle_encode(const RowMat<T>& patches, const RowMat<T>& fields) {
  const Index n = patches.rows(), k = fields.rows();
  Vec<T> pn = patches.rowwise().squaredNorm();
  Vec<T> fn = fields.rowwise().squaredNorm();
  Mat<T> d2 = (-2 * patches * fields.transpose());
  d2.colwise() += pn;
  d2.rowwise() += fn.transpose();
  Mat<T> z = d2.cwiseMax(T(0)).cwiseSqrt();
  Vec<T> mu = z.rowwise().mean();
  Mat<T> act(n, k);
  act = ((-z).colwise() + mu).cwiseMax(T(0));
  return act;
}

/// Leaky merge of a retrieved sample into the current activity:
/// (current + weight * sample) / (1 + weight). A convex combination, so the
/// result is bounded by the elementwise extremes of its inputs and its
/// distance to `sample` contracts by exactly 1/(1 + weight).
template <typename A, typename B>
typename A::PlainObject merge_toward(const Eigen::MatrixBase<A>& current,
                                     const Eigen::MatrixBase<B>& sample,
                                     typename A::Scalar weight) {
  using S = typename A::Scalar;
  return (current + weight * sample) / (S(1) + weight);
}

struct NearestHit {
  Index index = -1;
  double dist2 = std::numeric_limits<double>::infinity();
  std::uint64_t evals = 0;  // number of candidate distances actually computed
};

/// Linear scan for the row of `centers` with minimum squared Euclidean
/// distance to `query`. Ties resolve to the lowest index.
template <typename T>
NearestHit nearest_center(const Eigen::Ref<const RowMat<T>>& centers,
                          const Eigen::Ref<const Vec<T>>& query) {
  if (centers.rows() == 0) throw config_error("nearest_center: empty center set");
  NearestHit hit;
  for (Index i = 0; i < centers.rows(); ++i) {
    const double d2 = (centers.row(i).transpose() - query).squaredNorm();
    ++hit.evals;
    if (d2 < hit.dist2) {
      hit.dist2 = d2;
      hit.index = i;
    }
  }
  return hit;
}

}  // namespace occrec
