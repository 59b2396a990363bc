#include "flowfed/fl/selection.hpp"

#include <algorithm>
#include <cmath>

namespace flowfed::fl {

std::size_t selection_size(double fraction, std::size_t n_clients) {
  const double raw = fraction * static_cast<double>(n_clients);
  const auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::clamp<std::size_t>(k, n_clients == 0 ? 0 : 1, n_clients);
}

std::vector<NodeId> select_clients(const SelectionStrategy& strategy,
                                   const std::map<NodeId, ClientState>& clients,
                                   double fraction, Rng& rng) {
  std::vector<NodeId> eligible;
  for (const auto& [id, st] : clients)
    if (st.available) eligible.push_back(id);
  const std::size_t k = std::min(selection_size(fraction, clients.size()), eligible.size());

  std::vector<NodeId> chosen;
  if (std::holds_alternative<RandomSelection>(strategy)) {
    std::shuffle(eligible.begin(), eligible.end(), rng);
    chosen.assign(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(k));
  } else if (std::get<ResourceAwareSelection>(strategy).top_k_by_cpu) {
    // eligible is id-sorted, so a stable sort keeps id order among equal cpu.
    std::stable_sort(eligible.begin(), eligible.end(), [&](const NodeId& a, const NodeId& b) {
      return clients.at(a).resources.cpu_units > clients.at(b).resources.cpu_units;
    });
    chosen.assign(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(k));
  } else {
    std::vector<NodeId> pool = eligible;
    for (std::size_t i = 0; i < k; ++i) {
      std::vector<double> w;
      for (const auto& id : pool) w.push_back(clients.at(id).resources.cpu_units);
      std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
      const auto j = pick(rng);
      chosen.push_back(pool[j]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

}  // namespace flowfed::fl
