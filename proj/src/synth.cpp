#include "occrec/synth.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

namespace occrec {

namespace {

// splitmix64: cheap, well-mixed per-record stream seeding
std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

struct Rng {
  std::uint64_t state;
  std::uint64_t next() { return state = mix(state); }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int n) { return static_cast<int>(uniform() * n) % n; }
  double gauss() {
    // Box-Muller; one draw per call is fine at this scale
    const double u = std::max(uniform(), 1e-12), v = uniform();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
  }
};

// Shared color palette; classes draw from it so color alone is a weak cue.
constexpr double kPalette[6][3] = {
    {215, 70, 60}, {70, 180, 75}, {65, 95, 210}, {225, 200, 70}, {160, 75, 190}, {80, 200, 200},
};

constexpr double kTwoPi = 2.0 * std::numbers::pi;

}  // namespace

ImageRecord synth_record(std::uint64_t seed, int split, std::uint64_t index) {
  Rng rng{mix(seed ^ mix(static_cast<std::uint64_t>(split) + 1) ^ (index * 0x9e3779b97f4a7c15ull))};

  const int label = static_cast<int>(mix(index ^ mix(seed + split)) % kNumClasses);
  const int proto = rng.uniform_int(3);

  // class identity lives mainly in texture orientation and frequency
  const double theta = (label * 18.0 + proto * 4.0 + rng.uniform(-5.0, 5.0)) * std::numbers::pi / 180.0;
  const double freq = 0.55 + 0.035 * label + 0.09 * proto + rng.uniform(-0.02, 0.02);
  const double phase = rng.uniform(0.0, kTwoPi);
  const double ux = std::cos(theta), uy = std::sin(theta);
  // the outer zone carries its own class-tied grating, so partial views
  // away from the center still vote; half-grid orientations and a lower
  // frequency band keep it distinct from every class's inner texture
  const double theta2 = (label * 18.0 + 9.0 + rng.uniform(-3.0, 3.0)) * std::numbers::pi / 180.0;
  const double freq2 = 0.26 + 0.018 * label + 0.042 * proto;
  const double phase2 = rng.uniform(0.0, kTwoPi);

  // a class-independent "material" grating dominates the object surface;
  // the class gratings ride on top of it with lower weight, so distances in
  // activity space sort by material and style before class
  const int material = rng.uniform_int(6);
  const double m_theta = (7.0 + 31.0 * material) * std::numbers::pi / 180.0;
  const double m_freq = 0.20 + 0.065 * material;
  const double m_phase = rng.uniform(0.0, kTwoPi);

  const double* color_a = kPalette[(label + proto) % 6];
  const double* color_b = kPalette[(label + 2 * proto + 3) % 6];
  const double brightness = rng.uniform(0.75, 1.15);

  // class-independent background: smooth gradient plus one of six strong
  // texture styles shared by every class, so generic clustering groups by
  // style before class
  double base[3], gx[3], gy[3];
  for (int ch = 0; ch < 3; ++ch) {
    base[ch] = rng.uniform(115.0, 185.0);
    gx[ch] = rng.uniform(-45.0, 45.0);
    gy[ch] = rng.uniform(-45.0, 45.0);
  }
  const int style = rng.uniform_int(6);
  const double s_theta = (15.0 + 29.0 * style) * std::numbers::pi / 180.0;
  const double s_freq = 0.55 + 0.13 * style;
  const double s_phase = rng.uniform(0.0, kTwoPi);
  const double s_amp = 26.0;

  const double cr = 16.0 + rng.uniform(-3.0, 3.0);
  const double cc = 16.0 + rng.uniform(-3.0, 3.0);
  const double radius = rng.uniform(9.5, 15.5);
  const int shape = proto;  // 0 disc, 1 square, 2 diamond
  const double noise_sigma = 9.0;

  ImageRecord rec;
  rec.label = static_cast<std::uint8_t>(label);
  for (int r = 0; r < kImageSide; ++r) {
    for (int c = 0; c < kImageSide; ++c) {
      const double dr = r - cr, dc = c - cc;
      double dist;
      switch (shape) {
        case 1: dist = std::max(std::abs(dr), std::abs(dc)); break;
        case 2: dist = (std::abs(dr) + std::abs(dc)) * 0.75; break;
        default: dist = std::sqrt(dr * dr + dc * dc); break;
      }
      const double mask = std::clamp(1.2 * (radius - dist), 0.0, 1.0);
      // texture contrast plateaus inside half the radius and fades toward
      // the rim, so the informative signal is centered but graded
      const double visibility = mask;

      // inner zone: primary class grating; outer zone: its companion; both
      // blended over the shared material texture
      const double inner_w = std::clamp((5.5 - dist) / 1.5, 0.0, 1.0);
      const double t_in = std::sin(kTwoPi * freq * (ux * dr + uy * dc) / 6.0 + phase);
      const double t_out = std::sin(
          kTwoPi * freq2 * (std::cos(theta2) * dr + std::sin(theta2) * dc) / 6.0 + phase2);
      const double t_class = inner_w * t_in + (1.0 - inner_w) * t_out;
      const double t_material =
          std::sin(kTwoPi * m_freq * (std::cos(m_theta) * dr + std::sin(m_theta) * dc) / 6.0 +
                   m_phase);
      const double t = 0.3 * t_material + 0.7 * t_class;
      const double mixv = 0.5 * (t + 1.0);

      const double s_tex = s_amp * std::sin(
          kTwoPi * s_freq * (std::cos(s_theta) * r + std::sin(s_theta) * c) / 6.0 + s_phase);
      for (int ch = 0; ch < 3; ++ch) {
        const double bg =
            base[ch] + gx[ch] * (c / 31.0 - 0.5) + gy[ch] * (r / 31.0 - 0.5) + s_tex;
        const double obj = brightness * (color_a[ch] * mixv + color_b[ch] * (1.0 - mixv));
        double value = bg * (1.0 - visibility) + obj * visibility + noise_sigma * rng.gauss();
        value = std::clamp(value, 40.0, 255.0);
        rec.at(ch, r, c) = static_cast<std::uint8_t>(std::lround(value));
      }
    }
  }
  return rec;
}

void write_synthetic_corpus(const std::filesystem::path& dir, const SynthOptions& opt) {
  std::filesystem::create_directories(dir);
  std::uint64_t index = 0;
  for (int batch = 1; batch <= 5; ++batch) {
    std::ofstream out(dir / ("data_batch_" + std::to_string(batch) + ".bin"), std::ios::binary);
    if (!out) throw io_error("cannot write synthetic batch under " + dir.string());
    for (int i = 0; i < opt.train_per_batch; ++i, ++index) {
      const ImageRecord rec = synth_record(opt.seed, 0, index);
      out.put(static_cast<char>(rec.label));
      out.write(reinterpret_cast<const char*>(rec.pixels.data()), kPixelsPerImage);
    }
  }
  std::ofstream out(dir / "test_batch.bin", std::ios::binary);
  if (!out) throw io_error("cannot write synthetic test batch under " + dir.string());
  for (int i = 0; i < opt.test_count; ++i) {
    const ImageRecord rec = synth_record(opt.seed, 1, static_cast<std::uint64_t>(i));
    out.put(static_cast<char>(rec.label));
    out.write(reinterpret_cast<const char*>(rec.pixels.data()), kPixelsPerImage);
  }
  std::ofstream meta(dir / "batches.meta.txt");
  meta << "synthetic textured-object corpus v" << kSynthGeneratorVersion << " (seed " << opt.seed
       << ")\n";
  for (int c = 0; c < kNumClasses; ++c) meta << "synthetic_" << c << "\n";
}

bool has_cifar10_layout(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  for (int batch = 1; batch <= 5; ++batch)
    if (!fs::exists(dir / ("data_batch_" + std::to_string(batch) + ".bin"))) return false;
  return fs::exists(dir / "test_batch.bin");
}

}  // namespace occrec
