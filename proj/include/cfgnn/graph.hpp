// SPDX-FileCopyrightText: Copyright (c) 2026 The cfgnn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace cfgnn {

/// Edge families of the AP/UE graph. An AP edge joins two nodes that share an
/// AP (same row of B); a UE edge joins two nodes that share a UE (same column).
enum class EdgeType { kAp = 0, kUe = 1 };
inline constexpr int kNumEdgeTypes = 2;

/// Row-major bijection between (AP m, UE k) pairs and node ids: i = m*K + k.
std::size_t node_index(std::size_t m, std::size_t k, std::size_t num_aps, std::size_t num_ues);
std::pair<std::size_t, std::size_t> node_pair(std::size_t i, std::size_t num_aps, std::size_t num_ues);

/// Compressed neighbor lists of one edge type.
struct NeighborLists {
  std::vector<std::size_t> offsets;  // num_nodes + 1
  std::vector<std::size_t> targets;

  std::span<const std::size_t> of(std::size_t i) const {
    return {targets.data() + offsets[i], offsets[i + 1] - offsets[i]};
  }
  std::size_t num_edges() const { return targets.size(); }
};

/// One node per (AP, UE) pair; no self loops; every node has M-1 UE neighbors
/// and K-1 AP neighbors. Both directions of every edge are stored.
class HeteroGraph {
 public:
  HeteroGraph(std::size_t num_aps, std::size_t num_ues);

  std::size_t num_aps() const { return m_; }
  std::size_t num_ues() const { return k_; }
  std::size_t num_nodes() const { return m_ * k_; }

  const NeighborLists& neighbors(EdgeType type) const { return lists_[static_cast<int>(type)]; }
  std::span<const std::size_t> ap_neighbors(std::size_t i) const { return neighbors(EdgeType::kAp).of(i); }
  std::span<const std::size_t> ue_neighbors(std::size_t i) const { return neighbors(EdgeType::kUe).of(i); }

 private:
  std::size_t m_, k_;
  NeighborLists lists_[kNumEdgeTypes];
};

HeteroGraph build_graph(std::size_t num_aps, std::size_t num_ues);

/// Shared immutable graph for (M, K), built on first use.
std::shared_ptr<const HeteroGraph> cached_graph(std::size_t num_aps, std::size_t num_ues);

}  // namespace cfgnn
