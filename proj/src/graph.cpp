// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgnn/graph.hpp"

#include <map>
#include <mutex>
#include <stdexcept>
#include <string>

namespace cfgnn {

std::size_t node_index(std::size_t m, std::size_t k, std::size_t num_aps, std::size_t num_ues) {
  if (m >= num_aps || k >= num_ues)
    throw std::out_of_range("node_index: (" + std::to_string(m) + ", " + std::to_string(k) + ") out of range");
  return m * num_ues + k;
}

std::pair<std::size_t, std::size_t> node_pair(std::size_t i, std::size_t num_aps, std::size_t num_ues) {
  if (num_ues == 0 || i >= num_aps * num_ues) throw std::out_of_range("node_pair: node id out of range");
  return {i / num_ues, i % num_ues};
}

HeteroGraph::HeteroGraph(std::size_t num_aps, std::size_t num_ues) : m_(num_aps), k_(num_ues) {
  if (m_ < 1 || k_ < 1) throw std::invalid_argument("HeteroGraph: need M >= 1 and K >= 1");
  const std::size_t n = m_ * k_;
  NeighborLists& ap = lists_[static_cast<int>(EdgeType::kAp)];
  NeighborLists& ue = lists_[static_cast<int>(EdgeType::kUe)];
  ap.offsets.reserve(n + 1);
  ue.offsets.reserve(n + 1);
  ap.targets.reserve(n * (k_ - 1));
  ue.targets.reserve(n * (m_ - 1));
  ap.offsets.push_back(0);
  ue.offsets.push_back(0);
  for (std::size_t m = 0; m < m_; ++m) {
    for (std::size_t k = 0; k < k_; ++k) {
      for (std::size_t k2 = 0; k2 < k_; ++k2)
        if (k2 != k) ap.targets.push_back(m * k_ + k2);
      for (std::size_t m2 = 0; m2 < m_; ++m2)
        if (m2 != m) ue.targets.push_back(m2 * k_ + k);
      ap.offsets.push_back(ap.targets.size());
      ue.offsets.push_back(ue.targets.size());
    }
  }
}

HeteroGraph build_graph(std::size_t num_aps, std::size_t num_ues) { return HeteroGraph(num_aps, num_ues); }

std::shared_ptr<const HeteroGraph> cached_graph(std::size_t num_aps, std::size_t num_ues) {
  static std::mutex mu;
  static std::map<std::pair<std::size_t, std::size_t>, std::shared_ptr<const HeteroGraph>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{num_aps, num_ues}];
  if (!slot) slot = std::make_shared<const HeteroGraph>(num_aps, num_ues);
  return slot;
}

}  // namespace cfgnn
