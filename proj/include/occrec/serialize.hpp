#pragma once

#include <filesystem>

#include "occrec/classifiers.hpp"
#include "occrec/features.hpp"
#include "occrec/memory.hpp"
#include "occrec/rbm.hpp"

// Shared binary container for trained artifacts: an 8-byte magic, a format
// version, an artifact kind tag, then kind-specific fields. All integers and
// 32-bit floats are little-endian; matrices are written row-major with
// explicit dimensions.

namespace occrec {

enum class ArtifactKind : std::uint32_t {
  dictionary = 1,
  store = 2,
  memory = 3,
  bank = 4,
  rbm = 5,
};

void save_dictionary(const std::filesystem::path& file, const DictionaryF& dict);
DictionaryF load_dictionary(const std::filesystem::path& file);

/// The Layer-1 row file (when present) is referenced by name relative to
/// the container's directory and reopened on load.
void save_store(const std::filesystem::path& file, const ActivityStore& store);
ActivityStore load_store(const std::filesystem::path& file);

void save_memory(const std::filesystem::path& file, const ClusterMemory& mem);
ClusterMemory load_memory(const std::filesystem::path& file);

void save_bank(const std::filesystem::path& file, const HypothesisBank& bank);
HypothesisBank load_bank(const std::filesystem::path& file);

void save_rbm(const std::filesystem::path& file, const RbmModel& model);
RbmModel load_rbm(const std::filesystem::path& file);

/// Peeks at the header and returns the stored kind; throws io_error on a
/// foreign or damaged file.
ArtifactKind probe_artifact(const std::filesystem::path& file);

}  // namespace occrec
