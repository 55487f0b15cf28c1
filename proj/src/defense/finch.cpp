#include "floral/defense/finch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace floral::defense {

namespace {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

struct UnionFind {
  std::vector<int> parent;

  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }

  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }

  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Merging every point with its first neighbor produces exactly the connected
// components of the adjacency above: j = nn(i) gives the direct links, and
// shared-neighbor pairs meet through their common target.
ClusterPartition nn_components(std::span<const std::vector<double>> points) {
  const std::size_t n = points.size();
  ClusterPartition partition;
  if (n == 1) {
    partition.assignment = {0};
    partition.clusters = 1;
    return partition;
  }

  UnionFind uf(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t nearest = n;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = squared_distance(points[i], points[j]);
      if (d < best) {
        best = d;
        nearest = j;
      }
    }
    uf.unite(static_cast<int>(i), static_cast<int>(nearest));
  }

  partition.assignment.resize(n);
  std::vector<int> label(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int root = uf.find(static_cast<int>(i));
    if (label[root] < 0) label[root] = next++;
    partition.assignment[i] = label[root];
  }
  partition.clusters = next;
  return partition;
}

std::vector<std::vector<double>> cluster_means(std::span<const std::vector<double>> points,
                                               const ClusterPartition& partition) {
  const std::size_t dim = points.front().size();
  std::vector<std::vector<double>> means(partition.clusters, std::vector<double>(dim, 0.0));
  std::vector<int> counts(partition.clusters, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int k = partition.assignment[i];
    ++counts[k];
    for (std::size_t d = 0; d < dim; ++d) means[k][d] += points[i][d];
  }
  for (int k = 0; k < partition.clusters; ++k)
    for (double& v : means[k]) v /= counts[k];
  return means;
}

}  // namespace

ClusterPartition finch_first_partition(std::span<const std::vector<double>> points) {
  if (points.empty()) throw InputError("clustering needs at least one point");
  const std::size_t dim = points.front().size();
  for (const auto& p : points)
    if (p.size() != dim) throw InputError("clustering points differ in dimension");
  return nn_components(points);
}

std::vector<ClusterPartition> finch_hierarchy(std::span<const std::vector<double>> points) {
  std::vector<ClusterPartition> partitions;
  partitions.push_back(finch_first_partition(points));

  while (partitions.back().clusters > 1) {
    const ClusterPartition& current = partitions.back();
    auto means = cluster_means(points, current);
    ClusterPartition meta = nn_components(means);
    if (meta.clusters >= current.clusters) break;  // no further merging possible

    ClusterPartition lifted;
    lifted.assignment.resize(current.assignment.size());
    for (std::size_t i = 0; i < lifted.assignment.size(); ++i)
      lifted.assignment[i] = meta.assignment[static_cast<std::size_t>(current.assignment[i])];
    lifted.clusters = meta.clusters;
    partitions.push_back(std::move(lifted));
  }
  return partitions;
}

}  // namespace floral::defense
