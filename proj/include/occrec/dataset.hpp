#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "occrec/types.hpp"

namespace occrec {

inline constexpr int kImageSide = 32;
inline constexpr int kChannels = 3;
inline constexpr int kNumClasses = 10;
inline constexpr int kPixelsPerChannel = kImageSide * kImageSide;
inline constexpr int kPixelsPerImage = kPixelsPerChannel * kChannels;
inline constexpr std::size_t kRecordBytes = 1 + kPixelsPerImage;

/// One labeled 32x32 RGB raster. Pixels are stored channel-planar
/// (all R, then G, then B), each plane row-major, exactly as on disk.
struct ImageRecord {
  std::uint8_t label = 0;
  std::array<std::uint8_t, kPixelsPerImage> pixels{};

  std::uint8_t at(int channel, int row, int col) const {
    return pixels[static_cast<std::size_t>(channel) * kPixelsPerChannel + row * kImageSide + col];
  }
  std::uint8_t& at(int channel, int row, int col) {
    return pixels[static_cast<std::size_t>(channel) * kPixelsPerChannel + row * kImageSide + col];
  }
};

/// Axis-aligned square occluder centered on the image, filled with zeros.
struct OcclusionSpec {
  double area_fraction = 0.0;

  /// Side length in pixels: round(32 * sqrt(area_fraction)).
  int side() const;
};

struct RecordRange {
  std::size_t offset = 0;
  std::size_t count = 0;
};

/// Reads records from one CIFAR-10 binary batch file (1 label byte followed
/// by 3072 channel-planar pixel bytes per record). Throws io_error naming
/// the offending record on truncation or an out-of-range label.
std::vector<ImageRecord> load_cifar10(const std::filesystem::path& file,
                                      std::optional<RecordRange> subset = std::nullopt);

/// Loads the first `count` training images from the standard batch files
/// data_batch_1.bin .. data_batch_5.bin under `dir` (file order preserved).
std::vector<ImageRecord> load_cifar10_train(const std::filesystem::path& dir, std::size_t count);

/// Loads the first `count` records of test_batch.bin under `dir`.
std::vector<ImageRecord> load_cifar10_test(const std::filesystem::path& dir, std::size_t count);

/// Zeroes a centered square of the given area fraction in every channel.
/// The square spans [16 - ceil(s/2), 16 + floor(s/2)) on both axes.
ImageRecord occlude(const ImageRecord& image, const OcclusionSpec& spec);

/// Expands a training set with occluded copies: all originals first, then
/// each level's occluded copies in input order.
std::vector<ImageRecord> augment_with_occlusions(const std::vector<ImageRecord>& train,
                                                 const std::vector<double>& levels);

}  // namespace occrec
