#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <random>

#include "occrec/memory.hpp"
#include "occrec/synth.hpp"

using namespace occrec;
namespace fs = std::filesystem;

namespace {

std::vector<ImageRecord> sample_images(int n) {
  std::vector<ImageRecord> images;
  for (int i = 0; i < n; ++i) images.push_back(synth_record(31, 0, static_cast<std::uint64_t>(i)));
  return images;
}

DictionaryF tiny_dict(const std::vector<ImageRecord>& images) {
  DictionaryFitOptions opt;
  opt.field_count = 12;
  opt.patches_per_image = 10;
  opt.seed = 3;
  return learn_dictionary(images, opt);
}

}  // namespace

TEST_CASE("store shapes, labels, and the low-pass toggle") {
  const auto images = sample_images(40);
  const DictionaryF dict = tiny_dict(images);

  const ActivityStore filtered = build_store(images, dict, {});
  CHECK(filtered.h2.rows() == 40);
  CHECK(filtered.h2.cols() == 4 * 12);
  for (std::size_t i = 0; i < images.size(); ++i)
    CHECK(filtered.labels[i] == images[i].label);
  CHECK_FALSE(filtered.has_h1());

  StoreOptions raw;
  raw.lowpass = false;
  const ActivityStore unfiltered = build_store(images, dict, raw);
  // with the filter off, stored rows are exactly the pooled encoding
  for (int i = 0; i < 5; ++i) {
    const VecF direct = encode_h2(images[static_cast<std::size_t>(i)], dict);
    CHECK(unfiltered.h2.row(i).transpose() == direct);
  }
  CHECK(filtered.h2 != unfiltered.h2);
}

TEST_CASE("store content does not depend on scheduling") {
  const auto images = sample_images(30);
  const DictionaryF dict = tiny_dict(images);
  setenv("OCCREC_THREADS", "1", 1);
  const ActivityStore serial = build_store(images, dict, {});
  setenv("OCCREC_THREADS", "4", 1);
  const ActivityStore parallel = build_store(images, dict, {});
  unsetenv("OCCREC_THREADS");
  CHECK(serial.h2 == parallel.h2);
}

TEST_CASE("layer-1 rows round-trip through the disk store") {
  const auto images = sample_images(12);
  const DictionaryF dict = tiny_dict(images);
  const fs::path h1_file = fs::temp_directory_path() / "occrec_mem_h1.f32";
  StoreOptions opt;
  opt.store_h1 = true;
  opt.h1_file = h1_file;
  const ActivityStore store = build_store(images, dict, opt);
  REQUIRE(store.has_h1());
  CHECK(store.h1->rows() == 12);
  CHECK(store.h1->cols() == 27 * 27 * 12);
  // row 4 equals the filtered encoding of image 4
  auto expect = box_filter_3x3(encode_layer1(images[4], dict));
  const auto flat = store.h1->row(4);
  for (Index loc = 0; loc < expect.values.rows(); ++loc)
    for (Index k = 0; k < expect.values.cols(); ++k)
      CHECK(flat(loc * 12 + k) == expect.values(loc, k));
  fs::remove(h1_file);
}

TEST_CASE("cluster memory layout and degenerate cases") {
  std::mt19937_64 rng(5);
  std::normal_distribution<float> gauss(0.0f, 1.0f);
  ActivityStore store;
  const int per_class = 30, classes = 4, dim = 16;
  store.h2.resize(per_class * classes, dim);
  store.labels.resize(static_cast<std::size_t>(per_class) * classes);
  for (Index i = 0; i < store.h2.rows(); ++i) {
    const int cls = static_cast<int>(i) % classes;
    store.labels[static_cast<std::size_t>(i)] = cls;
    for (Index d = 0; d < dim; ++d) store.h2(i, d) = gauss(rng) + 4.0f * static_cast<float>(cls == d % classes);
  }

  SUBCASE("per-class and global center counts") {
    const ClusterMemory mem = build_cluster_memory(store, 5, 17);
    CHECK(mem.num_classes() == classes);
    CHECK(mem.clusters_per_class == 5);
    for (const auto& centers : mem.per_class) {
      CHECK(centers.rows() == 5);
      CHECK(centers.cols() == dim);
      CHECK(centers.allFinite());
    }
    CHECK(mem.global_centers.rows() == 5 * classes);
    CHECK(mem.global_centers.allFinite());
  }
  SUBCASE("k2 = 1 reduces to per-class means") {
    const ClusterMemory mem = build_cluster_memory(store, 1, 17);
    for (int c = 0; c < classes; ++c) {
      VecF mean = VecF::Zero(dim);
      int count = 0;
      for (Index i = 0; i < store.h2.rows(); ++i)
        if (store.labels[static_cast<std::size_t>(i)] == c) {
          mean += store.h2.row(i).transpose();
          ++count;
        }
      mean /= static_cast<float>(count);
      CHECK((mem.per_class[static_cast<std::size_t>(c)].row(0).transpose() - mean).norm() <= 1e-4f);
    }
  }
  SUBCASE("class smaller than k2 is a configuration error") {
    CHECK_THROWS_WITH_AS(build_cluster_memory(store, 31, 17), doctest::Contains("class"),
                         config_error);
  }
}
