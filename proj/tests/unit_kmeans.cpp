#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "occrec/kmeans.hpp"

using namespace occrec;

namespace {

RowMat<double> gaussian_blobs(int per_blob, const std::vector<std::array<double, 2>>& means,
                              double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  RowMat<double> rows(per_blob * static_cast<Index>(means.size()), 2);
  Index r = 0;
  for (const auto& m : means)
    for (int i = 0; i < per_blob; ++i, ++r) {
      rows(r, 0) = m[0] + gauss(rng);
      rows(r, 1) = m[1] + gauss(rng);
    }
  return rows;
}

// Exhaustive oracle for tiny instances: best 2-cluster split by total inertia.
std::pair<double, std::array<Eigen::Vector2d, 2>> best_two_partition(const RowMat<double>& x) {
  const Index n = x.rows();
  double best = 1e300;
  std::array<Eigen::Vector2d, 2> centers{};
  for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
    Eigen::Vector2d sum0 = Eigen::Vector2d::Zero(), sum1 = Eigen::Vector2d::Zero();
    int n0 = 0, n1 = 0;
    for (Index i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        sum0 += x.row(i).transpose();
        ++n0;
      } else {
        sum1 += x.row(i).transpose();
        ++n1;
      }
    }
    if (n0 == 0 || n1 == 0) continue;
    const Eigen::Vector2d c0 = sum0 / n0, c1 = sum1 / n1;
    double inertia = 0;
    for (Index i = 0; i < n; ++i) {
      const Eigen::Vector2d p = x.row(i).transpose();
      inertia += (mask & (1u << i)) ? (p - c0).squaredNorm() : (p - c1).squaredNorm();
    }
    if (inertia < best) {
      best = inertia;
      centers = {c0, c1};
    }
  }
  return {best, centers};
}

}  // namespace

TEST_CASE("one cluster is the sample mean") {
  const auto x = gaussian_blobs(40, {{1.0, -2.0}}, 0.5, 11);
  KMeansOptions opt;
  opt.clusters = 1;
  const auto fit = kmeans<double>(x, opt);
  const Eigen::Vector2d mean = x.colwise().mean().transpose();
  CHECK((fit.centers.row(0).transpose() - mean).norm() <= 1e-9);
}

TEST_CASE("square corners with two clusters match the exhaustive-partition oracle") {
  RowMat<double> x(4, 2);
  x << 0, 0, 0, 1, 10, 0, 10, 1;
  const auto [oracle_inertia, oracle_centers] = best_two_partition(x);

  KMeansOptions opt;
  opt.clusters = 2;
  opt.seed = 5;
  const auto fit = kmeans<double>(x, opt);
  CHECK(fit.inertia.back() == doctest::Approx(oracle_inertia).epsilon(1e-9));
  // centers are the midpoints of the two near pairs, in either order
  const Eigen::Vector2d a = fit.centers.row(0).transpose(), b = fit.centers.row(1).transpose();
  const bool direct = (a - oracle_centers[0]).norm() < 1e-9 && (b - oracle_centers[1]).norm() < 1e-9;
  const bool swapped = (a - oracle_centers[1]).norm() < 1e-9 && (b - oracle_centers[0]).norm() < 1e-9;
  CHECK((direct || swapped));
}

TEST_CASE("inertia is non-increasing across iterations") {
  const auto x = gaussian_blobs(60, {{0, 0}, {4, 0}, {0, 4}, {5, 5}}, 1.2, 31);
  KMeansOptions opt;
  opt.clusters = 4;
  opt.seed = 17;
  opt.rel_tol = 0;  // run all iterations
  opt.max_iters = 40;
  const auto fit = kmeans<double>(x, opt);
  REQUIRE(fit.inertia.size() >= 2);
  for (std::size_t i = 1; i < fit.inertia.size(); ++i)
    CHECK(fit.inertia[i] <= fit.inertia[i - 1] * (1 + 1e-10));
}

TEST_CASE("centers are the means of their cells at convergence") {
  const auto x = gaussian_blobs(50, {{0, 0}, {6, 0}, {0, 6}}, 0.8, 23);
  KMeansOptions opt;
  opt.clusters = 3;
  opt.seed = 2;
  opt.rel_tol = 0;
  opt.max_iters = 200;
  const auto fit = kmeans<double>(x, opt);
  RowMat<double> sums = RowMat<double>::Zero(3, 2);
  std::vector<int> counts(3, 0);
  for (Index i = 0; i < x.rows(); ++i) {
    sums.row(fit.assignment[static_cast<std::size_t>(i)]) += x.row(i);
    ++counts[static_cast<std::size_t>(fit.assignment[static_cast<std::size_t>(i)])];
  }
  for (Index c = 0; c < 3; ++c) {
    REQUIRE(counts[static_cast<std::size_t>(c)] > 0);
    const Eigen::Vector2d mean = sums.row(c).transpose() / counts[static_cast<std::size_t>(c)];
    CHECK((fit.centers.row(c).transpose() - mean).norm() <= 1e-6);
  }
}

TEST_CASE("fixed seed reproduces centers bit-exactly") {
  const auto x = gaussian_blobs(80, {{0, 0}, {3, 3}}, 1.0, 77);
  KMeansOptions opt;
  opt.clusters = 5;
  opt.seed = 1234;
  const auto a = kmeans<double>(x, opt);
  const auto b = kmeans<double>(x, opt);
  CHECK(a.centers == b.centers);
  CHECK(a.assignment == b.assignment);
}

TEST_CASE("spherical mode recovers two repeated unit patterns") {
  RowMat<float> x(20, 6);
  VecF u(6), v(6);
  u << 1, 0, 2, 0, 1, 0;
  v << 0, 3, 0, 1, 0, 2;
  u.normalize();
  v.normalize();
  for (Index i = 0; i < 20; ++i) x.row(i) = (i % 2 == 0 ? u : v).transpose();
  KMeansOptions opt;
  opt.clusters = 2;
  opt.spherical = true;
  opt.seed = 9;
  const auto fit = kmeans<float>(x, opt);
  for (Index c = 0; c < 2; ++c) CHECK(fit.centers.row(c).norm() == doctest::Approx(1.0).epsilon(1e-5));
  const bool direct = (fit.centers.row(0).transpose() - u).norm() < 1e-5 &&
                      (fit.centers.row(1).transpose() - v).norm() < 1e-5;
  const bool swapped = (fit.centers.row(0).transpose() - v).norm() < 1e-5 &&
                       (fit.centers.row(1).transpose() - u).norm() < 1e-5;
  CHECK((direct || swapped));
}

TEST_CASE("more clusters than rows is rejected") {
  RowMat<double> x(3, 2);
  x << 0, 0, 1, 1, 2, 2;
  KMeansOptions opt;
  opt.clusters = 5;
  CHECK_THROWS_AS(kmeans<double>(x, opt), config_error);
}
