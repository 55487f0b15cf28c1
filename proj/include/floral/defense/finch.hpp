#pragma once

#include <span>
#include <vector>

#include "floral/errors.hpp"

namespace floral::defense {

// Cluster assignment for m points: assignment[i] in [0, clusters). Cluster
// ids are numbered by first appearance, so the labeling is deterministic.
struct ClusterPartition {
  std::vector<int> assignment;
  int clusters = 0;
};

// First FINCH partition: connected components of the first-nearest-neighbor
// graph A(i,j) = 1 iff j = nn(i), or nn(j) = i, or nn(i) = nn(j), under
// Euclidean distance. Ties pick the smallest index. A single point is one
// singleton cluster.
ClusterPartition finch_first_partition(std::span<const std::vector<double>> points);

// Full FINCH hierarchy: the first partition, then successively coarser ones
// obtained by clustering cluster means, ending at a single cluster. The
// defense consumes the first (finest) partition.
std::vector<ClusterPartition> finch_hierarchy(std::span<const std::vector<double>> points);

}  // namespace floral::defense
