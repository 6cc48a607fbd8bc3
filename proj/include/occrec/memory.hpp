#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

#include "occrec/features.hpp"
#include "occrec/ops.hpp"
#include "occrec/types.hpp"

namespace occrec {

/// Read-only memory-mapped matrix of float rows backing the Layer-1
/// activity store, which is far too large to keep resident. Rows are
/// written once at build time and mapped for the lifetime of the store.
class Layer1DiskStore {
 public:
  Layer1DiskStore() = default;
  Layer1DiskStore(std::filesystem::path file, Index rows, Index cols);
  ~Layer1DiskStore();
  Layer1DiskStore(Layer1DiskStore&&) noexcept;
  Layer1DiskStore& operator=(Layer1DiskStore&&) noexcept;
  Layer1DiskStore(const Layer1DiskStore&) = delete;
  Layer1DiskStore& operator=(const Layer1DiskStore&) = delete;

  /// Creates the backing file sized for rows x cols floats.
  static void allocate(const std::filesystem::path& file, Index rows, Index cols);
  /// Writes one row at its slot; safe to call concurrently on distinct rows.
  static void write_row(const std::filesystem::path& file, Index row, const VecF& values);

  Eigen::Map<const VecF> row(Index i) const;
  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  const std::filesystem::path& file() const { return file_; }

 private:
  std::filesystem::path file_;
  Index rows_ = 0, cols_ = 0;
  const float* data_ = nullptr;
  std::size_t mapped_bytes_ = 0;
};

/// Filtered training activities: one row per training image. h2 rows are
/// the low-pass filtered, quadrant-pooled Layer-2 activities; the optional
/// Layer-1 store holds the filtered full-resolution maps.
struct ActivityStore {
  RowMatF h2;               // N x 4K
  std::vector<int> labels;  // N
  int layer1_rows = 0, layer1_cols = 0, layer1_maps = 0;
  std::shared_ptr<Layer1DiskStore> h1;  // null when Layer-1 storage is off

  Index size() const { return h2.rows(); }
  bool has_h1() const { return h1 != nullptr; }
};

struct StoreOptions {
  bool store_h1 = false;
  std::filesystem::path h1_file;  // required when store_h1
  bool lowpass = true;            // 3x3 box filter before pooling/storage
};

/// Encodes every training image, applies the low-pass filter to each
/// Layer-1 map, pools to Layer 2, and stores the results. Parallel over
/// images; output is independent of processing order.
ActivityStore build_store(const std::vector<ImageRecord>& train, const DictionaryF& dict,
                          const StoreOptions& opt = {});

/// K-means centers of stored Layer-2 activities: one center set per class
/// plus a class-agnostic set over all rows.
struct ClusterMemory {
  int clusters_per_class = 0;          // K2
  std::vector<RowMatF> per_class;      // C entries, each K2 x 4K
  RowMatF global_centers;              // (C*K2) x 4K

  int num_classes() const { return static_cast<int>(per_class.size()); }
  Index dim() const { return per_class.empty() ? 0 : per_class.front().cols(); }
};

/// Clusters each class's rows into K2 centers and all rows into C*K2
/// class-agnostic centers. Throws config_error when a class has fewer than
/// K2 rows.
ClusterMemory build_cluster_memory(const ActivityStore& store, int k2, std::uint64_t seed);

}  // namespace occrec
