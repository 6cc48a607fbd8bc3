#include "occrec/serialize.hpp"

#include <cstring>
#include <fstream>

namespace occrec {

namespace {

constexpr char kMagic[8] = {'O', 'C', 'R', 'E', 'C', 'B', 'I', 'N'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(const std::filesystem::path& file) : out_(file, std::ios::binary) {
    if (!out_) throw io_error("cannot write " + file.string());
  }
  void u32(std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out_.write(reinterpret_cast<char*>(b), 4);
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void raw(const char* data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void vec(const VecF& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (Index i = 0; i < v.size(); ++i) f32(v(i));
  }
  template <typename M>
  void mat(const M& m) {
    u32(static_cast<std::uint32_t>(m.rows()));
    u32(static_cast<std::uint32_t>(m.cols()));
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c) f32(m(r, c));
  }
  void header(ArtifactKind kind) {
    raw(kMagic, 8);
    u32(kVersion);
    u32(static_cast<std::uint32_t>(kind));
  }

 private:
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& file) : in_(file, std::ios::binary), file_(file) {
    if (!in_) throw io_error("cannot read " + file.string());
  }
  std::uint32_t u32() {
    unsigned char b[4];
    if (!in_.read(reinterpret_cast<char*>(b), 4)) fail("unexpected end of file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    std::string s(n, '\0');
    if (n && !in_.read(s.data(), n)) fail("unexpected end of file in string");
    return s;
  }
  VecF vec() {
    const std::uint32_t n = u32();
    VecF v(n);
    for (std::uint32_t i = 0; i < n; ++i) v(i) = f32();
    return v;
  }
  template <typename M>
  M mat() {
    const std::uint32_t rows = u32(), cols = u32();
    M m(rows, cols);
    for (std::uint32_t r = 0; r < rows; ++r)
      for (std::uint32_t c = 0; c < cols; ++c) m(r, c) = f32();
    return m;
  }
  ArtifactKind header() {
    char magic[8];
    if (!in_.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
      fail("not an artifact container (bad magic)");
    const std::uint32_t version = u32();
    if (version != kVersion)
      fail("unsupported container version " + std::to_string(version));
    return static_cast<ArtifactKind>(u32());
  }
  void expect(ArtifactKind kind, const char* what) {
    if (header() != kind) fail(std::string("container does not hold a ") + what);
  }
  [[noreturn]] void fail(const std::string& why) { throw io_error(file_.string() + ": " + why); }

 private:
  std::ifstream in_;
  std::filesystem::path file_;
};

}  // namespace

void save_dictionary(const std::filesystem::path& file, const DictionaryF& dict) {
  Writer w(file);
  w.header(ArtifactKind::dictionary);
  w.i32(dict.patch_size);
  w.i32(dict.channels);
  w.i32(static_cast<std::int32_t>(dict.field_count()));
  w.f32(dict.norm_reg);
  w.vec(dict.mean);
  w.mat(dict.whitener);
  w.mat(dict.fields);
}

DictionaryF load_dictionary(const std::filesystem::path& file) {
  Reader r(file);
  r.expect(ArtifactKind::dictionary, "dictionary");
  DictionaryF dict;
  dict.patch_size = r.i32();
  dict.channels = r.i32();
  const std::int32_t k = r.i32();
  dict.norm_reg = r.f32();
  dict.mean = r.vec();
  dict.whitener = r.mat<MatF>();
  dict.fields = r.mat<RowMatF>();
  if (dict.fields.rows() != k) r.fail("field count mismatch");
  return dict;
}

void save_store(const std::filesystem::path& file, const ActivityStore& store) {
  Writer w(file);
  w.header(ArtifactKind::store);
  w.mat(store.h2);
  w.u32(static_cast<std::uint32_t>(store.labels.size()));
  for (int label : store.labels) w.i32(label);
  w.i32(store.layer1_rows);
  w.i32(store.layer1_cols);
  w.i32(store.layer1_maps);
  w.u32(store.has_h1() ? 1 : 0);
  if (store.has_h1()) w.str(store.h1->file().filename().string());
}

ActivityStore load_store(const std::filesystem::path& file) {
  Reader r(file);
  r.expect(ArtifactKind::store, "store");
  ActivityStore store;
  store.h2 = r.mat<RowMatF>();
  const std::uint32_t n = r.u32();
  store.labels.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) store.labels[i] = r.i32();
  store.layer1_rows = r.i32();
  store.layer1_cols = r.i32();
  store.layer1_maps = r.i32();
  if (r.u32()) {
    const auto h1_file = file.parent_path() / r.str();
    const Index h1_dim = static_cast<Index>(store.layer1_rows) * store.layer1_cols *
                         store.layer1_maps;
    store.h1 = std::make_shared<Layer1DiskStore>(h1_file, store.h2.rows(), h1_dim);
  }
  return store;
}

void save_memory(const std::filesystem::path& file, const ClusterMemory& mem) {
  Writer w(file);
  w.header(ArtifactKind::memory);
  w.i32(mem.clusters_per_class);
  w.u32(static_cast<std::uint32_t>(mem.per_class.size()));
  for (const auto& centers : mem.per_class) w.mat(centers);
  w.mat(mem.global_centers);
}

ClusterMemory load_memory(const std::filesystem::path& file) {
  Reader r(file);
  r.expect(ArtifactKind::memory, "cluster memory");
  ClusterMemory mem;
  mem.clusters_per_class = r.i32();
  const std::uint32_t c = r.u32();
  mem.per_class.resize(c);
  for (std::uint32_t i = 0; i < c; ++i) mem.per_class[i] = r.mat<RowMatF>();
  mem.global_centers = r.mat<RowMatF>();
  return mem;
}

namespace {

void write_classifier(Writer& w, const LinearClassifier& clf) {
  w.u32(static_cast<std::uint32_t>(clf.class_map.size()));
  for (int c : clf.class_map) w.i32(c);
  w.mat(clf.weights);
  w.vec(clf.biases);
  w.vec(clf.feat_mean);
  w.vec(clf.feat_scale);
}

LinearClassifier read_classifier(Reader& r) {
  LinearClassifier clf;
  const std::uint32_t n = r.u32();
  clf.class_map.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) clf.class_map[i] = r.i32();
  clf.weights = r.mat<MatF>();
  clf.biases = r.vec();
  clf.feat_mean = r.vec();
  clf.feat_scale = r.vec();
  return clf;
}

}  // namespace

void save_bank(const std::filesystem::path& file, const HypothesisBank& bank) {
  Writer w(file);
  w.header(ArtifactKind::bank);
  w.i32(bank.num_classes);
  w.u32(static_cast<std::uint32_t>(bank.count()));
  w.i32(-1);
  w.i32(-1);
  write_classifier(w, bank.full);
  for (int p = 0; p < bank.num_classes; ++p) {
    w.i32(p);
    w.i32(-1);
    write_classifier(w, bank.leave_one[static_cast<std::size_t>(p)]);
  }
  for (const auto& [key, clf] : bank.leave_pair) {
    w.i32(key.first);
    w.i32(key.second);
    write_classifier(w, clf);
  }
}

HypothesisBank load_bank(const std::filesystem::path& file) {
  Reader r(file);
  r.expect(ArtifactKind::bank, "hypothesis bank");
  HypothesisBank bank;
  bank.num_classes = r.i32();
  const std::uint32_t count = r.u32();
  bank.leave_one.resize(static_cast<std::size_t>(bank.num_classes));
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::int32_t p = r.i32(), q = r.i32();
    LinearClassifier clf = read_classifier(r);
    if (p < 0)
      bank.full = std::move(clf);
    else if (q < 0)
      bank.leave_one[static_cast<std::size_t>(p)] = std::move(clf);
    else
      bank.leave_pair[{p, q}] = std::move(clf);
  }
  return bank;
}

void save_rbm(const std::filesystem::path& file, const RbmModel& model) {
  Writer w(file);
  w.header(ArtifactKind::rbm);
  w.mat(model.weights);
  w.vec(model.visible_bias);
  w.vec(model.hidden_bias);
  w.vec(model.binarize_thresholds);
  w.u32(static_cast<std::uint32_t>(model.epoch_recon_error.size()));
  for (float e : model.epoch_recon_error) w.f32(e);
}

RbmModel load_rbm(const std::filesystem::path& file) {
  Reader r(file);
  r.expect(ArtifactKind::rbm, "RBM model");
  RbmModel model;
  model.weights = r.mat<MatF>();
  model.visible_bias = r.vec();
  model.hidden_bias = r.vec();
  model.binarize_thresholds = r.vec();
  const std::uint32_t n = r.u32();
  model.epoch_recon_error.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) model.epoch_recon_error[i] = r.f32();
  return model;
}

ArtifactKind probe_artifact(const std::filesystem::path& file) {
  Reader r(file);
  return r.header();
}

}  // namespace occrec
