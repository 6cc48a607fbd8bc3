#include "occrec/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace occrec {

int OcclusionSpec::side() const {
  if (area_fraction < 0.0 || area_fraction >= 1.0)
    throw config_error("occlusion area_fraction must be in [0, 1), got " +
                       std::to_string(area_fraction));
  return static_cast<int>(std::lround(kImageSide * std::sqrt(area_fraction)));
}

std::vector<ImageRecord> load_cifar10(const std::filesystem::path& file,
                                      std::optional<RecordRange> subset) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw io_error("cannot open " + file.string());

  std::size_t skip = 0, want = std::numeric_limits<std::size_t>::max();
  if (subset) {
    skip = subset->offset;
    want = subset->count;
  }
  if (skip > 0) in.seekg(static_cast<std::streamoff>(skip * kRecordBytes));

  std::vector<ImageRecord> records;
  std::size_t index = skip;
  while (records.size() < want) {
    ImageRecord rec;
    char label_byte;
    if (!in.read(&label_byte, 1)) break;  // clean end of file
    rec.label = static_cast<std::uint8_t>(label_byte);
    if (!in.read(reinterpret_cast<char*>(rec.pixels.data()), kPixelsPerImage))
      throw io_error(file.string() + ": truncated record " + std::to_string(index));
    if (rec.label >= kNumClasses)
      throw io_error(file.string() + ": record " + std::to_string(index) +
                     " has label " + std::to_string(rec.label) + " >= " +
                     std::to_string(kNumClasses));
    records.push_back(rec);
    ++index;
  }
  // EOF on a record boundary is a clean stop; a partial record throws above.
  return records;
}

std::vector<ImageRecord> load_cifar10_train(const std::filesystem::path& dir, std::size_t count) {
  std::vector<ImageRecord> all;
  all.reserve(count);
  for (int batch = 1; batch <= 5 && all.size() < count; ++batch) {
    const auto file = dir / ("data_batch_" + std::to_string(batch) + ".bin");
    RecordRange range{0, count - all.size()};
    auto part = load_cifar10(file, range);
    all.insert(all.end(), part.begin(), part.end());
  }
  if (all.size() < count)
    throw io_error(dir.string() + ": training batches hold only " +
                   std::to_string(all.size()) + " of " + std::to_string(count) +
                   " requested records");
  return all;
}

std::vector<ImageRecord> load_cifar10_test(const std::filesystem::path& dir, std::size_t count) {
  auto records = load_cifar10(dir / "test_batch.bin", RecordRange{0, count});
  if (records.size() < count)
    throw io_error(dir.string() + ": test batch holds only " + std::to_string(records.size()) +
                   " of " + std::to_string(count) + " requested records");
  return records;
}

ImageRecord occlude(const ImageRecord& image, const OcclusionSpec& spec) {
  const int s = spec.side();
  ImageRecord out = image;
  if (s == 0) return out;
  const int center = kImageSide / 2;
  const int lo = center - (s + 1) / 2;
  const int hi = center + s / 2;  // half-open
  for (int ch = 0; ch < kChannels; ++ch)
    for (int r = lo; r < hi; ++r)
      for (int c = lo; c < hi; ++c) out.at(ch, r, c) = 0;
  return out;
}

std::vector<ImageRecord> augment_with_occlusions(const std::vector<ImageRecord>& train,
                                                 const std::vector<double>& levels) {
  if (levels.empty()) throw config_error("augment_with_occlusions: empty level list");
  std::vector<ImageRecord> out;
  out.reserve(train.size() * (1 + levels.size()));
  out.insert(out.end(), train.begin(), train.end());
  for (double level : levels) {
    const OcclusionSpec spec{level};
    for (const auto& rec : train) out.push_back(occlude(rec, spec));
  }
  return out;
}

}  // namespace occrec
