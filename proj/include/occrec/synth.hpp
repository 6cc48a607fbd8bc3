#pragma once

#include <cstdint>
#include <filesystem>

#include "occrec/dataset.hpp"

namespace occrec {

// Procedural stand-in corpus in the exact CIFAR-10 binary layout, for
// running the pipeline and its experiment suite on machines where the real
// dataset is not present. Ten texture classes, three prototypes each,
// centered objects over uninformative backgrounds, so center occlusion
// removes class evidence progressively. Fully deterministic per seed and
// record index.

inline constexpr int kSynthGeneratorVersion = 15;

struct SynthOptions {
  std::uint64_t seed = 2024;
  int train_per_batch = 10000;  // five batches, matching the real layout
  int test_count = 10000;
};

/// Deterministically generates one record of the synthetic corpus.
/// split 0 = train, 1 = test; index is global within the split.
ImageRecord synth_record(std::uint64_t seed, int split, std::uint64_t index);

/// Writes data_batch_1.bin .. data_batch_5.bin, test_batch.bin and
/// batches.meta.txt under dir.
void write_synthetic_corpus(const std::filesystem::path& dir, const SynthOptions& opt = {});

/// True when dir holds the expected CIFAR-10 batch files.
bool has_cifar10_layout(const std::filesystem::path& dir);

}  // namespace occrec
