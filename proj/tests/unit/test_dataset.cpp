#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <zlib.h>

#include "gsmooth/dataset.hpp"

using namespace gsmooth;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> be32(std::uint32_t v) {
  return {static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
          static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)};
}

std::vector<std::uint8_t> idx_images(std::uint32_t n, std::uint32_t rows, std::uint32_t cols,
                                     const std::vector<std::uint8_t>& pixels) {
  std::vector<std::uint8_t> out{0, 0, 8, 3};
  for (auto v : {n, rows, cols}) {
    const auto b = be32(v);
    out.insert(out.end(), b.begin(), b.end());
  }
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

std::vector<std::uint8_t> idx_labels(const std::vector<std::uint8_t>& labels) {
  std::vector<std::uint8_t> out{0, 0, 8, 1};
  const auto b = be32(static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), b.begin(), b.end());
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("gsmooth_dataset_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write_plain(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_gz(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  gzFile f = gzopen(p.string().c_str(), "wb");
  ASSERT_NE(f, nullptr);
  gzwrite(f, bytes.data(), static_cast<unsigned>(bytes.size()));
  gzclose(f);
}

TrainSet synthetic_train(std::size_t n) {
  TrainSet set;
  set.rows = 28;
  set.cols = 28;
  set.images.assign(n * 784, 0.5);
  for (std::size_t i = 0; i < n; ++i) set.labels.push_back(static_cast<int>(i % 10));
  return set;
}

template <class T>
constexpr bool accepts_pixel_noise = requires(const T& t) { add_pixel_noise(t, 1.0, 1u); };

template <class T>
constexpr bool accepts_label_flips = requires(const T& t) { flip_labels(t, 0.1, 1u); };

}  // namespace

static_assert(accepts_pixel_noise<TrainSet> && accepts_label_flips<TrainSet>);
static_assert(!accepts_pixel_noise<TestSet> && !accepts_label_flips<TestSet>);

TEST(Idx, ReadsHeaderAndScalesPixels) {
  TempDir dir;
  std::vector<std::uint8_t> pixels(3 * 28 * 28, 0);
  pixels[0] = 255;
  pixels[1] = 51;
  write_plain(dir / "img", idx_images(3, 28, 28, pixels));
  write_plain(dir / "lbl", idx_labels({7, 0, 9}));
  const auto set = load_idx<Split::train>(dir / "img", dir / "lbl");
  EXPECT_EQ(set.size(), 3u);
  EXPECT_EQ(set.rows, 28u);
  EXPECT_EQ(set.cols, 28u);
  EXPECT_EQ(set.images[0], 1.0);
  EXPECT_DOUBLE_EQ(set.images[1], 0.2);
  EXPECT_EQ(set.labels, (std::vector<int>{7, 0, 9}));
}

TEST(Idx, GzipIsInflatedTransparently) {
  TempDir dir;
  std::vector<std::uint8_t> pixels(2 * 4 * 4);
  for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = static_cast<std::uint8_t>(i * 7);
  write_gz(dir / "img.gz", idx_images(2, 4, 4, pixels));
  write_plain(dir / "img", idx_images(2, 4, 4, pixels));
  const auto a = read_idx_images(dir / "img.gz");
  const auto b = read_idx_images(dir / "img");
  EXPECT_EQ(a.count, 2u);
  EXPECT_EQ(a.pixels, b.pixels);
}

TEST(Idx, WrongMagicIsReported) {
  TempDir dir;
  auto bytes = idx_images(1, 2, 2, {1, 2, 3, 4});
  bytes[3] = 1;
  write_plain(dir / "img", bytes);
  try {
    (void)read_idx_images(dir / "img");
    FAIL() << "bad magic accepted";
  } catch (const DatasetError& e) {
    EXPECT_NE(std::string(e.what()).find("0x00000801"), std::string::npos) << e.what();
  }
}

TEST(Idx, TruncatedFileIsAnError) {
  TempDir dir;
  write_plain(dir / "img", idx_images(2, 4, 4, std::vector<std::uint8_t>(20, 0)));
  EXPECT_THROW((void)read_idx_images(dir / "img"), DatasetError);
  write_plain(dir / "short", {0, 0, 8});
  EXPECT_THROW((void)read_idx_labels(dir / "short"), DatasetError);
}

TEST(Idx, CountMismatchIsAnError) {
  TempDir dir;
  write_plain(dir / "img", idx_images(2, 2, 2, std::vector<std::uint8_t>(8, 0)));
  write_plain(dir / "lbl", idx_labels({1, 2, 3}));
  EXPECT_THROW((void)load_idx<Split::test>(dir / "img", dir / "lbl"), DatasetError);
}

TEST(Idx, LabelAboveNineIsAnError) {
  TempDir dir;
  write_plain(dir / "img", idx_images(1, 2, 2, std::vector<std::uint8_t>(4, 0)));
  write_plain(dir / "lbl", idx_labels({12}));
  EXPECT_THROW((void)load_idx<Split::train>(dir / "img", dir / "lbl"), DatasetError);
}

TEST(Idx, MissingFileIsAnError) {
  TempDir dir;
  EXPECT_THROW((void)read_idx_images(dir / "nothing"), DatasetError);
  EXPECT_THROW((void)locate_mnist(dir.path()), DatasetError);
}

TEST(Idx, LocatesPlainAndCompressedFiles) {
  TempDir dir;
  write_gz(dir / "train-images-idx3-ubyte.gz", idx_images(1, 2, 2, {0, 0, 0, 0}));
  write_plain(dir / "train-labels-idx1-ubyte", idx_labels({1}));
  write_gz(dir / "t10k-images-idx3-ubyte.gz", idx_images(1, 2, 2, {0, 0, 0, 0}));
  write_gz(dir / "t10k-labels-idx1-ubyte.gz", idx_labels({2}));
  const auto files = locate_mnist(dir.path());
  EXPECT_EQ(files.train_labels.filename(), "train-labels-idx1-ubyte");
  EXPECT_EQ(files.test_images.filename(), "t10k-images-idx3-ubyte.gz");
}

TEST(Idx, BundledDeskData) {
  const auto files = locate_mnist(fs::path(GSMOOTH_SOURCE_DIR) / "data" / "mnist-desk");
  const auto train = load_idx<Split::train>(files.train_images, files.train_labels);
  const auto test = load_idx<Split::test>(files.test_images, files.test_labels);
  EXPECT_EQ(train.size(), 5000u);
  EXPECT_EQ(test.size(), 5000u);
  EXPECT_EQ(train.pixels(), 784u);
  for (double v : train.images) {
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
  }
}

// ---- corruption ------------------------------------------------------------------

TEST(PixelNoise, ZeroStdIsIdentity) {
  const auto set = synthetic_train(20);
  EXPECT_EQ(add_pixel_noise(set, 0.0, 5).images, set.images);
}

TEST(PixelNoise, MeanIsCentredAndUnclamped) {
  const auto set = synthetic_train(200);
  const auto noisy = add_pixel_noise(set, 1.0, 5);
  double mean = 0.0;
  bool outside = false;
  for (std::size_t i = 0; i < set.images.size(); ++i) {
    mean += noisy.images[i] - set.images[i];
    outside = outside || noisy.images[i] < 0.0 || noisy.images[i] > 1.0;
  }
  const double n = static_cast<double>(set.images.size());
  EXPECT_LT(std::abs(mean / n), 4.0 / std::sqrt(n));
  EXPECT_TRUE(outside);
  EXPECT_EQ(noisy.labels, set.labels);
}

TEST(PixelNoise, SameSeedSameOutput) {
  const auto set = synthetic_train(10);
  EXPECT_EQ(add_pixel_noise(set, 0.5, 9).images, add_pixel_noise(set, 0.5, 9).images);
  EXPECT_NE(add_pixel_noise(set, 0.5, 9).images, add_pixel_noise(set, 0.5, 10).images);
}

TEST(LabelFlips, ZeroFractionIsIdentity) {
  const auto set = synthetic_train(50);
  EXPECT_EQ(flip_labels(set, 0.0, 3).labels, set.labels);
}

TEST(LabelFlips, FullFractionChangesEveryLabel) {
  const auto set = synthetic_train(300);
  const auto flipped = flip_labels(set, 1.0, 3);
  for (std::size_t i = 0; i < set.size(); ++i) {
    EXPECT_NE(flipped.labels[i], set.labels[i]);
    EXPECT_GE(flipped.labels[i], 0);
    EXPECT_LE(flipped.labels[i], 9);
  }
}

TEST(LabelFlips, ExactCount) {
  const auto set = synthetic_train(5000);
  const auto flipped = flip_labels(set, 0.1, 3);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < set.size(); ++i) changed += flipped.labels[i] != set.labels[i];
  EXPECT_EQ(changed, 500u);
  EXPECT_EQ(flip_labels(set, 0.1, 3).labels, flipped.labels);
  EXPECT_EQ(flipped.images, set.images);
}

TEST(ValidationSplit, SizesOrderAndCoverage) {
  auto set = synthetic_train(100);
  for (std::size_t i = 0; i < set.size(); ++i) set.images[i * 784] = static_cast<double>(i);
  const auto [train, val] = split_validation(set, 0.1, 4);
  EXPECT_EQ(val.size(), 10u);
  EXPECT_EQ(train.size(), 90u);
  std::vector<int> seen(100, 0);
  double last = -1.0;
  for (const auto* part : {&train, &val}) {
    last = -1.0;
    for (std::size_t i = 0; i < part->size(); ++i) {
      const double id = part->images[i * 784];
      EXPECT_GT(id, last);
      last = id;
      ++seen[static_cast<std::size_t>(id)];
    }
  }
  for (int c : seen) EXPECT_EQ(c, 1);
  EXPECT_EQ(split_validation(set, 0.1, 4).second.images, val.images);
}

TEST(TakeFirst, Truncates) {
  const auto set = synthetic_train(30);
  EXPECT_EQ(take_first(set, 12).size(), 12u);
  EXPECT_EQ(take_first(set, 100).size(), 30u);
}
