#include "flowfed/fl/partition.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "flowfed/error.hpp"
#include "flowfed/seed.hpp"

namespace flowfed::fl {

const char* partition_name(const PartitionSpec& spec) noexcept {
  switch (spec.index()) {
    case 0: return "iid";
    case 1: return "shards";
    default: return "dirichlet";
  }
}

namespace {

[[noreturn]] void reject(const std::string& path, const std::string& msg) {
  throw ValidationError({Violation{path, msg}});
}

std::vector<std::vector<std::size_t>> by_class(const Dataset& data, Rng& rng) {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(data.n_classes));
  for (std::size_t i = 0; i < data.size(); ++i)
    out[static_cast<std::size_t>(data.labels[i])].push_back(i);
  for (auto& idx : out) std::shuffle(idx.begin(), idx.end(), rng);
  return out;
}

Partition iid(const Dataset& data, int n_clients, Rng& rng) {
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  Partition p;
  p.assignments.resize(static_cast<std::size_t>(n_clients));
  for (std::size_t i = 0; i < idx.size(); ++i)
    p.assignments[i % static_cast<std::size_t>(n_clients)].push_back(idx[i]);
  return p;
}

Partition shards(const Dataset& data, const ShardPartition& spec, int n_clients, Rng& rng) {
  const int cpc = spec.classes_per_client;
  if (cpc < 1 || cpc > data.n_classes)
    reject("fl.partition.classes_per_client",
           "must be in [1, n_classes=" + std::to_string(data.n_classes) + "]");
  const long total = static_cast<long>(n_clients) * cpc;
  if (total % data.n_classes != 0)
    reject("fl.partition.classes_per_client",
           "n_clients * classes_per_client = " + std::to_string(total) +
               " is not a multiple of n_classes = " + std::to_string(data.n_classes));
  const auto per_class = static_cast<std::size_t>(total / data.n_classes);

  // Shards are cut within a class so a shard never spans two labels.
  std::vector<std::vector<std::size_t>> shard_list;
  auto classes = by_class(data, rng);
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const auto& idx = classes[c];
    if (idx.size() < per_class)
      reject("fl.partition.classes_per_client",
             "class " + std::to_string(c) + " has fewer samples than shards per class");
    for (std::size_t s = 0; s < per_class; ++s) {
      const std::size_t lo = idx.size() * s / per_class;
      const std::size_t hi = idx.size() * (s + 1) / per_class;
      shard_list.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(lo),
                              idx.begin() + static_cast<std::ptrdiff_t>(hi));
    }
  }
  std::shuffle(shard_list.begin(), shard_list.end(), rng);
  Partition p;
  p.assignments.resize(static_cast<std::size_t>(n_clients));
  for (std::size_t s = 0; s < shard_list.size(); ++s) {
    auto& dst = p.assignments[s / static_cast<std::size_t>(cpc)];
    dst.insert(dst.end(), shard_list[s].begin(), shard_list[s].end());
  }
  return p;
}

Partition dirichlet(const Dataset& data, const DirichletPartition& spec, int n_clients,
                    Rng& rng) {
  if (!(spec.alpha > 0.0)) reject("fl.partition.alpha", "must be > 0");
  const auto k = static_cast<std::size_t>(n_clients);
  Partition p;
  p.assignments.resize(k);
  std::gamma_distribution<double> gamma(spec.alpha, 1.0);
  for (const auto& idx : by_class(data, rng)) {
    std::vector<double> w(k);
    double sum = 0.0;
    for (auto& x : w) sum += (x = gamma(rng));
    if (!(sum > 0.0)) {
      // Every draw underflowed (tiny alpha): the class goes to one client.
      std::fill(w.begin(), w.end(), 0.0);
      w[std::uniform_int_distribution<std::size_t>(0, k - 1)(rng)] = 1.0;
      sum = 1.0;
    }
    double cum = 0.0;
    std::size_t lo = 0;
    for (std::size_t c = 0; c < k; ++c) {
      cum += w[c];
      const std::size_t hi =
          c + 1 == k ? idx.size()
                     : std::min(idx.size(), static_cast<std::size_t>(
                                                static_cast<double>(idx.size()) * cum / sum));
      for (std::size_t i = lo; i < hi; ++i) p.assignments[c].push_back(idx[i]);
      lo = std::max(lo, hi);
    }
  }
  // Repair empty clients with one sample from the largest (lowest id on ties).
  for (;;) {
    auto empty = std::find_if(p.assignments.begin(), p.assignments.end(),
                              [](const auto& a) { return a.empty(); });
    if (empty == p.assignments.end()) break;
    auto largest = std::max_element(
        p.assignments.begin(), p.assignments.end(),
        [](const auto& x, const auto& y) { return x.size() < y.size(); });
    empty->push_back(largest->back());
    largest->pop_back();
  }
  return p;
}

}  // namespace

Partition partition(const Dataset& data, const PartitionSpec& spec, int n_clients,
                    std::uint64_t seed) {
  if (n_clients < 1) reject("fl.n_clients", "must be >= 1");
  if (static_cast<std::size_t>(n_clients) > data.size())
    reject("fl.n_clients", "more clients (" + std::to_string(n_clients) +
                               ") than samples (" + std::to_string(data.size()) + ")");
  auto rng = make_rng({seed, stream::kPartition});
  Partition p;
  if (std::holds_alternative<IidPartition>(spec)) {
    p = iid(data, n_clients, rng);
  } else if (const auto* s = std::get_if<ShardPartition>(&spec)) {
    p = shards(data, *s, n_clients, rng);
  } else {
    p = dirichlet(data, std::get<DirichletPartition>(spec), n_clients, rng);
  }
  for (auto& a : p.assignments) std::sort(a.begin(), a.end());
  return p;
}

}  // namespace flowfed::fl
