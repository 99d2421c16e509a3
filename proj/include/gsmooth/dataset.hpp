#pragma once

// MNIST in IDX format plus the training-set corruptions.
//
// Train and test sets are distinct types; the noise injectors only accept the
// training type, so a test set cannot be corrupted by accident.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gsmooth {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Split { train, test };

template <Split S>
struct ImageSet {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> images;  // N * rows * cols, row-major per image
  std::vector<int> labels;     // N values in [0, 9]
  std::string provenance;      // source files and corruptions applied

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t pixels() const noexcept { return rows * cols; }
  std::span<const double> image(std::size_t i) const {
    return std::span<const double>(images).subspan(i * pixels(), pixels());
  }
};

using TrainSet = ImageSet<Split::train>;
using TestSet = ImageSet<Split::test>;

struct IdxImages {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;
};

/// Big-endian IDX readers; gzip input is inflated transparently.
IdxImages read_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);

/// Pixels scaled by 1/255. Throws DatasetError on bad magic, truncation,
/// label values above 9 or an image/label count mismatch.
template <Split S>
ImageSet<S> load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

/// Finds {train,t10k}-{images-idx3,labels-idx1}-ubyte[.gz] under `dir`.
struct MnistFiles {
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path test_images;
  std::filesystem::path test_labels;
};
MnistFiles locate_mnist(const std::filesystem::path& dir);

/// Adds i.i.d. Normal(0, std^2) to every pixel, no clamping. std == 0 is the identity.
TrainSet add_pixel_noise(const TrainSet& set, double std_dev, std::uint64_t seed);

/// Relabels exactly round(frac * N) samples, chosen without replacement, each to
/// one of the nine other classes uniformly.
TrainSet flip_labels(const TrainSet& set, double frac, std::uint64_t seed);

/// Seeded split into (train, validation) with round(frac * N) validation samples.
/// Both parts keep the original sample order.
std::pair<TrainSet, TrainSet> split_validation(const TrainSet& set, double frac, std::uint64_t seed);

/// The first `n` samples (all of them if n >= size).
template <Split S>
ImageSet<S> take_first(const ImageSet<S>& set, std::size_t n);

}  // namespace gsmooth
