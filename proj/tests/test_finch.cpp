#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include "floral/defense/finch.hpp"
#include "floral/util/rng.hpp"

using namespace floral;
using namespace floral::defense;

namespace {

// Independent reference: materialize the full first-neighbor adjacency
// matrix (j = nn(i), nn(j) = i, or nn(i) = nn(j)) and BFS its components.
std::vector<int> oracle_components(const std::vector<std::vector<double>>& points) {
  const std::size_t n = points.size();
  auto dist = [&](std::size_t a, std::size_t b) {
    double sum = 0.0;
    for (std::size_t d = 0; d < points[a].size(); ++d) {
      const double diff = points[a][d] - points[b][d];
      sum += diff * diff;
    }
    return sum;
  };

  std::vector<std::size_t> nn(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = dist(i, j);
      if (d < best) {
        best = d;
        nn[i] = j;
      }
    }
  }

  std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (nn[i] == j || nn[j] == i || nn[i] == nn[j]) adj[i][j] = adj[j][i] = true;
    }

  std::vector<int> component(n, -1);
  int next = 0;
  for (std::size_t start = 0; start < n; ++start) {
    if (component[start] >= 0) continue;
    std::queue<std::size_t> frontier;
    frontier.push(start);
    component[start] = next;
    while (!frontier.empty()) {
      const std::size_t at = frontier.front();
      frontier.pop();
      for (std::size_t j = 0; j < n; ++j)
        if (adj[at][j] && component[j] < 0) {
          component[j] = next;
          frontier.push(j);
        }
    }
    ++next;
  }
  return component;
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> fwd, bwd;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [fit, fnew] = fwd.try_emplace(a[i], b[i]);
    if (!fnew && fit->second != b[i]) return false;
    auto [bit, bnew] = bwd.try_emplace(b[i], a[i]);
    if (!bnew && bit->second != a[i]) return false;
  }
  return true;
}

// Tight blob whose first-neighbor graph is connected: collinear points with
// geometrically growing gaps, so each point's nearest neighbor is its
// predecessor. Diameter stays below `scale`.
void chain_blob(util::Rng& rng, double cx, double cy, double scale, int count, int label,
                std::vector<std::vector<double>>& points, std::vector<int>* truth) {
  const double angle = rng.uniform(0.0, 6.283185307179586);
  const double ratio = rng.uniform(1.05, 1.25);
  double gap = scale / 12.0;
  double offset = 0.0;
  for (int i = 0; i < count; ++i) {
    points.push_back({cx + offset * std::cos(angle), cy + offset * std::sin(angle)});
    if (truth) truth->push_back(label);
    offset += gap;
    gap *= ratio;
  }
}

std::vector<std::vector<double>> blob_instance(util::Rng& rng, double scale, double separation,
                                               std::vector<int>* truth = nullptr) {
  std::vector<std::vector<double>> points;
  const double centers[3][2] = {{0.0, 0.0}, {separation, 0.0}, {0.0, separation}};
  for (int b = 0; b < 3; ++b) {
    const int count = 3 + static_cast<int>(rng.below(4));
    chain_blob(rng, centers[b][0], centers[b][1], scale, count, b, points, truth);
  }
  return points;
}

}  // namespace

TEST_CASE("mutual nearest-neighbor pairs cluster together") {
  std::vector<std::vector<double>> points = {{0.0}, {0.1}, {5.0}, {5.1}};
  auto partition = finch_first_partition(points);
  CHECK(partition.clusters == 2);
  CHECK(partition.assignment[0] == partition.assignment[1]);
  CHECK(partition.assignment[2] == partition.assignment[3]);
  CHECK(partition.assignment[0] != partition.assignment[2]);
}

TEST_CASE("identical points form one cluster") {
  std::vector<std::vector<double>> points(6, std::vector<double>{1.0, 2.0});
  auto partition = finch_first_partition(points);
  CHECK(partition.clusters == 1);
}

TEST_CASE("single point is a singleton cluster") {
  std::vector<std::vector<double>> points = {{3.0, 4.0}};
  auto partition = finch_first_partition(points);
  CHECK(partition.clusters == 1);
  CHECK(partition.assignment == std::vector<int>{0});
}

TEST_CASE("dimension mismatch is rejected") {
  std::vector<std::vector<double>> points = {{1.0}, {1.0, 2.0}};
  CHECK_THROWS_AS(finch_first_partition(points), InputError);
  CHECK_THROWS_AS(finch_first_partition(std::span<const std::vector<double>>{}), InputError);
}

TEST_CASE("three well-separated blobs come out exactly") {
  auto rng = util::Rng::stream(0xf1c4, {1});
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<int> truth;
    auto points = blob_instance(rng, 0.1, 10.0, &truth);
    auto partition = finch_first_partition(points);
    CHECK(partition.clusters == 3);
    CHECK(same_partition(partition.assignment, truth));
    CHECK(same_partition(oracle_components(points), truth));
  }
}

TEST_CASE("first partition matches the adjacency-matrix oracle") {
  auto rng = util::Rng::stream(0xf1c4, {2});
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(15));
    const int dim = 1 + static_cast<int>(rng.below(4));
    std::vector<std::vector<double>> points;
    for (int i = 0; i < n; ++i) {
      std::vector<double> p;
      for (int d = 0; d < dim; ++d) p.push_back(rng.uniform(-3.0, 3.0));
      points.push_back(std::move(p));
    }
    auto partition = finch_first_partition(points);
    auto reference = oracle_components(points);
    CHECK(same_partition(partition.assignment, reference));
    CHECK(partition.clusters == 1 + *std::max_element(reference.begin(), reference.end()));
  }
}

TEST_CASE("no singleton clusters with two or more points") {
  auto rng = util::Rng::stream(0xf1c4, {3});
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(12));
    std::vector<std::vector<double>> points;
    for (int i = 0; i < n; ++i) points.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1)});
    auto partition = finch_first_partition(points);
    std::vector<int> sizes(partition.clusters, 0);
    for (int a : partition.assignment) ++sizes[a];
    for (int s : sizes) CHECK(s >= 2);
  }
}

TEST_CASE("hierarchy coarsens monotonically to one cluster") {
  auto rng = util::Rng::stream(0xf1c4, {4});
  std::vector<int> truth;
  auto points = blob_instance(rng, 0.05, 8.0, &truth);
  auto partitions = finch_hierarchy(points);
  REQUIRE(!partitions.empty());
  CHECK(partitions.front().clusters == 3);
  for (std::size_t i = 1; i < partitions.size(); ++i)
    CHECK(partitions[i].clusters < partitions[i - 1].clusters);
  CHECK(partitions.back().clusters == 1);
}
