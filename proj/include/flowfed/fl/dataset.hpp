#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace flowfed::fl {

/// Dense row-major feature matrix with integer class labels.
struct Dataset {
  std::size_t dim = 0;
  int n_classes = 0;
  std::vector<double> features;  // size() * dim
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * dim, dim};
  }
  bool operator==(const Dataset&) const = default;
};

/// Shape of the synthetic classification task; `seed` fixes the class means.
struct DatasetSpec {
  std::size_t n_train = 2000;
  std::size_t n_test = 500;
  int n_classes = 10;
  std::size_t dim = 16;
  double class_sep = 3.0;
  std::uint64_t seed = 1;
  bool operator==(const DatasetSpec&) const = default;
};

/// Gaussian blobs: one unit-covariance cluster per class with its mean on a
/// sphere of radius `class_sep`. Labels are balanced (counts differ by <= 1).
/// `sample_stream` selects an independent draw from the same class means.
Dataset make_synthetic_dataset(std::uint64_t seed, std::size_t n, int n_classes,
                               std::size_t dim, double class_sep,
                               std::uint64_t sample_stream = 0);

/// Training and held-out evaluation sets over shared class means.
std::pair<Dataset, Dataset> make_train_test(const DatasetSpec& spec);

/// Copies the listed rows into a new dataset.
Dataset subset(const Dataset& data, std::span<const std::size_t> indices);

}  // namespace flowfed::fl
