#include "occrec/memory.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cstring>

#include "occrec/kmeans.hpp"
#include "occrec/parallel.hpp"

namespace occrec {

Layer1DiskStore::Layer1DiskStore(std::filesystem::path file, Index rows, Index cols)
    : file_(std::move(file)), rows_(rows), cols_(cols) {
  const int fd = ::open(file_.c_str(), O_RDONLY);
  if (fd < 0) throw io_error("Layer1DiskStore: cannot open " + file_.string());
  mapped_bytes_ = static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_) * sizeof(float);
  void* p = ::mmap(nullptr, mapped_bytes_, PROT_READ, MAP_SHARED, fd, 0);
  ::close(fd);
  if (p == MAP_FAILED) throw io_error("Layer1DiskStore: mmap failed for " + file_.string());
  data_ = static_cast<const float*>(p);
}

Layer1DiskStore::~Layer1DiskStore() {
  if (data_) ::munmap(const_cast<float*>(data_), mapped_bytes_);
}

Layer1DiskStore::Layer1DiskStore(Layer1DiskStore&& other) noexcept { *this = std::move(other); }

Layer1DiskStore& Layer1DiskStore::operator=(Layer1DiskStore&& other) noexcept {
  if (this != &other) {
    if (data_) ::munmap(const_cast<float*>(data_), mapped_bytes_);
    file_ = std::move(other.file_);
    rows_ = other.rows_;
    cols_ = other.cols_;
    data_ = other.data_;
    mapped_bytes_ = other.mapped_bytes_;
    other.data_ = nullptr;
    other.rows_ = other.cols_ = 0;
    other.mapped_bytes_ = 0;
  }
  return *this;
}

void Layer1DiskStore::allocate(const std::filesystem::path& file, Index rows, Index cols) {
  const int fd = ::open(file.c_str(), O_RDWR | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw io_error("Layer1DiskStore: cannot create " + file.string());
  const off_t bytes =
      static_cast<off_t>(rows) * static_cast<off_t>(cols) * static_cast<off_t>(sizeof(float));
  if (::ftruncate(fd, bytes) != 0) {
    ::close(fd);
    throw io_error("Layer1DiskStore: cannot size " + file.string());
  }
  ::close(fd);
}

void Layer1DiskStore::write_row(const std::filesystem::path& file, Index row, const VecF& values) {
  const int fd = ::open(file.c_str(), O_WRONLY);
  if (fd < 0) throw io_error("Layer1DiskStore: cannot open " + file.string() + " for writing");
  const off_t offset = static_cast<off_t>(row) * static_cast<off_t>(values.size()) *
                       static_cast<off_t>(sizeof(float));
  const ssize_t n = ::pwrite(fd, values.data(),
                             static_cast<std::size_t>(values.size()) * sizeof(float), offset);
  ::close(fd);
  if (n != static_cast<ssize_t>(static_cast<std::size_t>(values.size()) * sizeof(float)))
    throw io_error("Layer1DiskStore: short write to " + file.string());
}

Eigen::Map<const VecF> Layer1DiskStore::row(Index i) const {
  return Eigen::Map<const VecF>(data_ + static_cast<std::size_t>(i) * cols_, cols_);
}

ActivityStore build_store(const std::vector<ImageRecord>& train, const DictionaryF& dict,
                          const StoreOptions& opt) {
  const Index n = static_cast<Index>(train.size());
  const int side = dict.grid_side();
  const Index k = dict.field_count();
  const Index h1_dim = static_cast<Index>(side) * side * k;

  ActivityStore store;
  store.h2.resize(n, 4 * k);
  store.labels.resize(train.size());
  store.layer1_rows = side;
  store.layer1_cols = side;
  store.layer1_maps = static_cast<int>(k);

  if (opt.store_h1) {
    if (opt.h1_file.empty())
      throw config_error("build_store: store_h1 requires an h1_file path");
    Layer1DiskStore::allocate(opt.h1_file, n, h1_dim);
  }

  parallel_for(train.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      auto h1 = encode_layer1(train[i], dict);
      if (opt.lowpass) h1 = box_filter_3x3(h1);
      store.h2.row(static_cast<Index>(i)) = pool_quadrants(h1).transpose();
      store.labels[i] = train[i].label;
      if (opt.store_h1) {
        VecF flat(h1_dim);
        // row-major spatial order, maps contiguous per location
        for (Index loc = 0; loc < h1.values.rows(); ++loc)
          flat.segment(loc * k, k) = h1.values.row(loc).transpose();
        Layer1DiskStore::write_row(opt.h1_file, static_cast<Index>(i), flat);
      }
    }
  }, 16);

  if (opt.store_h1)
    store.h1 = std::make_shared<Layer1DiskStore>(opt.h1_file, n, h1_dim);
  return store;
}

ClusterMemory build_cluster_memory(const ActivityStore& store, int k2, std::uint64_t seed) {
  if (k2 < 1) throw config_error("build_cluster_memory: k2 must be >= 1");
  int num_classes = 0;
  for (int label : store.labels) num_classes = std::max(num_classes, label + 1);

  std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(num_classes));
  for (Index i = 0; i < store.size(); ++i)
    by_class[static_cast<std::size_t>(store.labels[static_cast<std::size_t>(i)])].push_back(i);

  for (int c = 0; c < num_classes; ++c)
    if (by_class[static_cast<std::size_t>(c)].size() < static_cast<std::size_t>(k2))
      throw config_error("build_cluster_memory: class " + std::to_string(c) + " has " +
                         std::to_string(by_class[static_cast<std::size_t>(c)].size()) +
                         " rows < k2 = " + std::to_string(k2));

  ClusterMemory mem;
  mem.clusters_per_class = k2;
  mem.per_class.resize(static_cast<std::size_t>(num_classes));
  for (int c = 0; c < num_classes; ++c) {
    const auto& idx = by_class[static_cast<std::size_t>(c)];
    RowMatF rows(static_cast<Index>(idx.size()), store.h2.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) rows.row(static_cast<Index>(i)) = store.h2.row(idx[i]);
    KMeansOptions km;
    km.clusters = k2;
    km.seed = seed + static_cast<std::uint64_t>(c);
    auto fit = kmeans<float>(rows, km);
    mem.per_class[static_cast<std::size_t>(c)] = std::move(fit.centers);
  }

  KMeansOptions km;
  km.clusters = k2 * num_classes;
  km.seed = seed ^ 0xda3e39cb94b95bdbull;
  auto fit = kmeans<float>(store.h2, km);
  mem.global_centers = std::move(fit.centers);
  return mem;
}

}  // namespace occrec
