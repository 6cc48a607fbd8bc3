#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "occrec/parallel.hpp"
#include "occrec/types.hpp"

namespace occrec {

struct KMeansOptions {
  int clusters = 2;
  int max_iters = 100;
  double rel_tol = 1e-4;  // stop when relative inertia change falls below
  std::uint64_t seed = 1;
  bool spherical = false;  // renormalize centers to unit length each update
};

template <typename T>
struct KMeansResult {
  RowMat<T> centers;             // clusters x dim
  std::vector<Index> assignment;  // per input row
  std::vector<double> inertia;    // one entry per assignment pass
  int iterations = 0;
};

namespace detail {

// Squared distances from every row of x to every row of centers, written
// chunk-parallel. Computed as |x|^2 - 2 x c' + |c|^2 in double to keep the
// assignment pass stable.
template <typename T>
void assign_rows(const RowMat<T>& x, const RowMat<T>& centers,
                 std::vector<Index>& assignment, double* inertia_out) {
  const Index n = x.rows(), k = centers.rows();
  assignment.resize(static_cast<std::size_t>(n));
  Vec<double> cn = centers.template cast<double>().rowwise().squaredNorm();
  std::vector<double> partial((static_cast<std::size_t>(n) + 511) / 512, 0.0);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t b, std::size_t e) {
    const Index rows = static_cast<Index>(e - b);
    Mat<double> cross = (x.middleRows(static_cast<Index>(b), rows).template cast<double>() *
                         centers.transpose().template cast<double>());
    for (Index i = 0; i < rows; ++i) {
      const double xn = x.row(static_cast<Index>(b) + i).template cast<double>().squaredNorm();
      Index best = 0;
      double bestd = xn - 2.0 * cross(i, 0) + cn(0);
      for (Index j = 1; j < k; ++j) {
        const double d = xn - 2.0 * cross(i, j) + cn(j);
        if (d < bestd) {
          bestd = d;
          best = j;
        }
      }
      assignment[b + static_cast<std::size_t>(i)] = best;
      partial[b / 512] += bestd < 0 ? 0.0 : bestd;
    }
  }, 512);
  if (inertia_out) {
    double total = 0;
    for (double p : partial) total += p;
    *inertia_out = total;
  }
}

// k-means++ seeding: first center uniform, the rest sampled with probability
// proportional to squared distance from the nearest chosen center.
template <typename T>
RowMat<T> seed_centers(const RowMat<T>& x, int k, std::mt19937_64& rng) {
  const Index n = x.rows();
  RowMat<T> centers(k, x.cols());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Index first = static_cast<Index>(unit(rng) * static_cast<double>(n));
  if (first >= n) first = n - 1;
  centers.row(0) = x.row(first);
  Vec<double> d2 = (x.template cast<double>().rowwise() -
                    centers.row(0).template cast<double>())
                       .rowwise()
                       .squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Index pick;
    if (total <= 0) {
      pick = static_cast<Index>(c) % n;  // all points duplicated; cycle rows
    } else {
      double target = unit(rng) * total;
      pick = n - 1;
      for (Index i = 0; i < n; ++i) {
        target -= d2(i);
        if (target <= 0) {
          pick = i;
          break;
        }
      }
    }
    centers.row(c) = x.row(pick);
    Vec<double> nd = (x.template cast<double>().rowwise() -
                      centers.row(c).template cast<double>())
                         .rowwise()
                         .squaredNorm();
    d2 = d2.cwiseMin(nd);
  }
  return centers;
}

}  // namespace detail

/// Lloyd's algorithm with k-means++ seeding. Deterministic for a fixed seed:
/// chunked assignment writes per-row slots and center updates accumulate in
/// row order. Empty clusters are reseeded to the row farthest from its
/// center. In spherical mode centers are renormalized to unit length after
/// every update (zero-norm means keep their previous direction).
template <typename T>
KMeansResult<T> kmeans(const RowMat<T>& x, const KMeansOptions& opt) {
  if (opt.clusters < 1) throw config_error("kmeans: clusters must be >= 1");
  if (x.rows() < opt.clusters)
    throw config_error("kmeans: " + std::to_string(x.rows()) + " rows < " +
                       std::to_string(opt.clusters) + " clusters");
  std::mt19937_64 rng(opt.seed);
  KMeansResult<T> res;
  res.centers = detail::seed_centers(x, opt.clusters, rng);
  if (opt.spherical) {
    for (Index c = 0; c < res.centers.rows(); ++c) {
      const T norm = res.centers.row(c).norm();
      if (norm > 0) res.centers.row(c) /= norm;
    }
  }

  const Index dim = x.cols();
  Mat<double> sums(opt.clusters, dim);
  std::vector<Index> counts(static_cast<std::size_t>(opt.clusters));
  double prev_inertia = std::numeric_limits<double>::infinity();

  for (int it = 0; it < opt.max_iters; ++it) {
    double inertia = 0;
    detail::assign_rows(x, res.centers, res.assignment, &inertia);
    res.inertia.push_back(inertia);
    res.iterations = it + 1;

    sums.setZero();
    std::fill(counts.begin(), counts.end(), 0);
    for (Index i = 0; i < x.rows(); ++i) {
      const Index c = res.assignment[static_cast<std::size_t>(i)];
      sums.row(c) += x.row(i).template cast<double>();
      ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < opt.clusters; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0) {
        // steal the row farthest from its own center
        Index far = 0;
        double fard = -1;
        for (Index i = 0; i < x.rows(); ++i) {
          const Index a = res.assignment[static_cast<std::size_t>(i)];
          const double d = (x.row(i).template cast<double>() -
                            res.centers.row(a).template cast<double>())
                               .squaredNorm();
          if (d > fard) {
            fard = d;
            far = i;
          }
        }
        res.centers.row(c) = x.row(far);
      } else {
        Vec<double> mean = sums.row(c).transpose() / static_cast<double>(counts[static_cast<std::size_t>(c)]);
        if (opt.spherical) {
          const double norm = mean.norm();
          if (norm > 0) mean /= norm;
          else continue;  // degenerate direction: keep previous center
        }
        res.centers.row(c) = mean.template cast<T>().transpose();
      }
    }

    if (prev_inertia < std::numeric_limits<double>::infinity()) {
      const double denom = prev_inertia > 0 ? prev_inertia : 1.0;
      if (std::abs(prev_inertia - inertia) / denom < opt.rel_tol) break;
    }
    prev_inertia = inertia;
  }
  // final assignment against the converged centers
  detail::assign_rows(x, res.centers, res.assignment, nullptr);
  return res;
}

}  // namespace occrec
