#include "flowfed/fl/dataset.hpp"

#include <cmath>
#include <random>

#include "flowfed/error.hpp"
#include "flowfed/seed.hpp"

namespace flowfed::fl {

Dataset make_synthetic_dataset(std::uint64_t seed, std::size_t n, int n_classes,
                               std::size_t dim, double class_sep,
                               std::uint64_t sample_stream) {
  if (n_classes < 1 || n < static_cast<std::size_t>(n_classes))
    throw Error(ErrorCode::InvalidArgs, "synthetic dataset needs n >= n_classes >= 1");
  if (dim < 2) throw Error(ErrorCode::InvalidArgs, "synthetic dataset needs dim >= 2");
  if (!(class_sep >= 0.0) || !std::isfinite(class_sep))
    throw Error(ErrorCode::InvalidArgs, "class_sep must be finite and >= 0");

  std::normal_distribution<double> gauss(0.0, 1.0);
  auto mean_rng = make_rng({seed, stream::kDataset});
  std::vector<double> means(static_cast<std::size_t>(n_classes) * dim);
  for (int c = 0; c < n_classes; ++c) {
    double norm2 = 0.0;
    double* m = means.data() + static_cast<std::size_t>(c) * dim;
    for (std::size_t j = 0; j < dim; ++j) {
      m[j] = gauss(mean_rng);
      norm2 += m[j] * m[j];
    }
    const double scale = norm2 > 0.0 ? class_sep / std::sqrt(norm2) : 0.0;
    for (std::size_t j = 0; j < dim; ++j) m[j] *= scale;
  }

  Dataset d;
  d.dim = dim;
  d.n_classes = n_classes;
  d.features.resize(n * dim);
  d.labels.resize(n);
  auto rng = make_rng({seed, stream::kDataset, sample_stream + 1});
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % static_cast<std::size_t>(n_classes));
    d.labels[i] = c;
    const double* m = means.data() + static_cast<std::size_t>(c) * dim;
    for (std::size_t j = 0; j < dim; ++j) d.features[i * dim + j] = m[j] + gauss(rng);
  }
  return d;
}

std::pair<Dataset, Dataset> make_train_test(const DatasetSpec& spec) {
  return {make_synthetic_dataset(spec.seed, spec.n_train, spec.n_classes, spec.dim,
                                 spec.class_sep, 0),
          make_synthetic_dataset(spec.seed, spec.n_test, spec.n_classes, spec.dim,
                                 spec.class_sep, 1)};
}

Dataset subset(const Dataset& data, std::span<const std::size_t> indices) {
  Dataset out;
  out.dim = data.dim;
  out.n_classes = data.n_classes;
  out.features.reserve(indices.size() * data.dim);
  out.labels.reserve(indices.size());
  for (auto i : indices) {
    auto r = data.row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
    out.labels.push_back(data.labels[i]);
  }
  return out;
}

}  // namespace flowfed::fl
