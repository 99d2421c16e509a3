#include "gsmooth/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "gsmooth/rng.hpp"

namespace gsmooth {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw DatasetError("cannot open " + path.string() + ": no such file");
  }
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw DatasetError("cannot open " + path.string());
  std::vector<std::uint8_t> out;
  std::uint8_t buf[1 << 16];
  for (;;) {
    const int n = gzread(f, buf, sizeof buf);
    if (n < 0) {
      int code = 0;
      const std::string msg = gzerror(f, &code);
      gzclose(f);
      throw DatasetError("read error in " + path.string() + ": " + msg);
    }
    if (n == 0) break;
    out.insert(out.end(), buf, buf + n);
  }
  gzclose(f);
  return out;
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

void need(const std::vector<std::uint8_t>& b, std::size_t bytes, const std::filesystem::path& path,
          const char* what) {
  if (b.size() < bytes) {
    throw DatasetError(path.string() + ": truncated " + what + " (have " + std::to_string(b.size()) +
                       " bytes, need " + std::to_string(bytes) + ")");
  }
}

std::string magic_hex(std::uint32_t m) {
  char s[11];
  std::snprintf(s, sizeof s, "0x%08x", m);
  return s;
}

}  // namespace

IdxImages read_idx_images(const std::filesystem::path& path) {
  const auto b = slurp(path);
  need(b, 16, path, "header");
  const std::uint32_t magic = be32(b, 0);
  if (magic != kImageMagic) {
    throw DatasetError(path.string() + ": bad image magic " + magic_hex(magic) + ", expected " +
                       magic_hex(kImageMagic));
  }
  IdxImages out;
  out.count = be32(b, 4);
  out.rows = be32(b, 8);
  out.cols = be32(b, 12);
  const std::size_t payload = out.count * out.rows * out.cols;
  need(b, 16 + payload, path, "image data");
  out.pixels.assign(b.begin() + 16, b.begin() + 16 + static_cast<std::ptrdiff_t>(payload));
  return out;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
  const auto b = slurp(path);
  need(b, 8, path, "header");
  const std::uint32_t magic = be32(b, 0);
  if (magic != kLabelMagic) {
    throw DatasetError(path.string() + ": bad label magic " + magic_hex(magic) + ", expected " +
                       magic_hex(kLabelMagic));
  }
  const std::size_t count = be32(b, 4);
  need(b, 8 + count, path, "label data");
  return {b.begin() + 8, b.begin() + 8 + static_cast<std::ptrdiff_t>(count)};
}

template <Split S>
ImageSet<S> load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const auto img = read_idx_images(images_path);
  const auto lab = read_idx_labels(labels_path);
  if (img.count != lab.size()) {
    throw DatasetError("image/label count mismatch: " + images_path.string() + " has " +
                       std::to_string(img.count) + " images, " + labels_path.string() + " has " +
                       std::to_string(lab.size()) + " labels");
  }
  ImageSet<S> set;
  set.rows = img.rows;
  set.cols = img.cols;
  set.images.resize(img.pixels.size());
  std::transform(img.pixels.begin(), img.pixels.end(), set.images.begin(),
                 [](std::uint8_t p) { return static_cast<double>(p) / 255.0; });
  set.labels.resize(lab.size());
  for (std::size_t i = 0; i < lab.size(); ++i) {
    if (lab[i] > 9) {
      throw DatasetError(labels_path.string() + ": label " + std::to_string(lab[i]) + " at index " +
                         std::to_string(i) + " is outside [0, 9]");
    }
    set.labels[i] = lab[i];
  }
  set.provenance = images_path.string() + ";" + labels_path.string();
  return set;
}

template TrainSet load_idx<Split::train>(const std::filesystem::path&, const std::filesystem::path&);
template TestSet load_idx<Split::test>(const std::filesystem::path&, const std::filesystem::path&);

MnistFiles locate_mnist(const std::filesystem::path& dir) {
  auto find = [&](const std::string& stem) {
    for (const auto& name : {stem + ".gz", stem}) {
      const auto p = dir / name;
      if (std::filesystem::is_regular_file(p)) return p;
    }
    throw DatasetError("dataset file " + stem + "[.gz] not found in " + dir.string());
  };
  return {find("train-images-idx3-ubyte"), find("train-labels-idx1-ubyte"),
          find("t10k-images-idx3-ubyte"), find("t10k-labels-idx1-ubyte")};
}

TrainSet add_pixel_noise(const TrainSet& set, double std_dev, std::uint64_t seed) {
  if (!(std_dev >= 0.0)) throw std::invalid_argument("add_pixel_noise: std must be >= 0");
  TrainSet out = set;
  if (std_dev == 0.0) return out;
  for (std::size_t i = 0; i < out.images.size(); ++i) out.images[i] += std_dev * keyed_normal(seed, i);
  out.provenance += ";pixel_noise(std=" + std::to_string(std_dev) + ",seed=" + std::to_string(seed) + ")";
  return out;
}

TrainSet flip_labels(const TrainSet& set, double frac, std::uint64_t seed) {
  if (!(frac >= 0.0 && frac <= 1.0)) throw std::invalid_argument("flip_labels: frac must lie in [0, 1]");
  TrainSet out = set;
  const std::size_t n = set.size();
  const auto count = static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
  if (count == 0) return out;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  CounterRng rng(seed);
  // partial Fisher-Yates: the first `count` entries are a uniform sample without replacement
  for (std::size_t i = 0; i < count; ++i) std::swap(order[i], order[i + rng.index(n - i)]);
  for (std::size_t i = 0; i < count; ++i) {
    int& label = out.labels[order[i]];
    label = static_cast<int>((static_cast<std::size_t>(label) + 1 + rng.index(9)) % 10);
  }
  out.provenance += ";label_flip(frac=" + std::to_string(frac) + ",seed=" + std::to_string(seed) + ")";
  return out;
}

std::pair<TrainSet, TrainSet> split_validation(const TrainSet& set, double frac, std::uint64_t seed) {
  if (!(frac >= 0.0 && frac < 1.0)) throw std::invalid_argument("split_validation: frac must lie in [0, 1)");
  const std::size_t n = set.size();
  const auto count = static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  CounterRng rng(seed);
  for (std::size_t i = 0; i < count; ++i) std::swap(order[i], order[i + rng.index(n - i)]);
  std::vector<bool> in_val(n, false);
  for (std::size_t i = 0; i < count; ++i) in_val[order[i]] = true;

  TrainSet train;
  TrainSet val;
  for (auto* part : {&train, &val}) {
    part->rows = set.rows;
    part->cols = set.cols;
  }
  for (std::size_t i = 0; i < n; ++i) {
    TrainSet& dst = in_val[i] ? val : train;
    const auto img = set.image(i);
    dst.images.insert(dst.images.end(), img.begin(), img.end());
    dst.labels.push_back(set.labels[i]);
  }
  train.provenance = set.provenance + ";train_part(seed=" + std::to_string(seed) + ")";
  val.provenance = set.provenance + ";validation_part(seed=" + std::to_string(seed) + ")";
  return {std::move(train), std::move(val)};
}

template <Split S>
ImageSet<S> take_first(const ImageSet<S>& set, std::size_t n) {
  ImageSet<S> out;
  out.rows = set.rows;
  out.cols = set.cols;
  n = std::min(n, set.size());
  out.images.assign(set.images.begin(), set.images.begin() + static_cast<std::ptrdiff_t>(n * set.pixels()));
  out.labels.assign(set.labels.begin(), set.labels.begin() + static_cast<std::ptrdiff_t>(n));
  out.provenance = set.provenance + ";first(" + std::to_string(n) + ")";
  return out;
}

template TrainSet take_first(const TrainSet&, std::size_t);
template TestSet take_first(const TestSet&, std::size_t);

}  // namespace gsmooth
