#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "doctest.h"
#include "mv3dis/rng.h"
#include "mv3dis/superpoints.h"

using namespace mv3dis;

namespace {

PointCloud cloud_from(std::vector<Eigen::Vector3d> positions) {
  PointCloud cloud;
  cloud.positions = std::move(positions);
  return cloud;
}

// Two 50-point clusters, intra-cluster spacing ~0.02 m, centers 1 m apart
// (50x the intra-cluster spacing on the gap).
PointCloud two_cluster_cloud() {
  Rng rng(11);
  PointCloud cloud;
  for (int c = 0; c < 2; ++c) {
    const Eigen::Vector3d center(c * 1.0, 0, 0);
    for (int i = 0; i < 50; ++i)
      cloud.positions.push_back(center + Eigen::Vector3d(rng.uniform(-0.05, 0.05),
                                                         rng.uniform(-0.05, 0.05),
                                                         rng.uniform(-0.05, 0.05)));
  }
  return cloud;
}

std::set<std::set<std::uint32_t>> as_partition(const std::vector<Superpoint>& sps) {
  std::set<std::set<std::uint32_t>> partition;
  for (const Superpoint& sp : sps)
    partition.insert(std::set<std::uint32_t>(sp.point_indices.begin(), sp.point_indices.end()));
  return partition;
}

}  // namespace

TEST_CASE("knn graph on collinear and square layouts") {
  // 3 collinear points, k=1: symmetrization yields 2 unique edges.
  const PointCloud line = cloud_from({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}});
  const auto line_edges = build_knn_graph(line, 1);
  CHECK(line_edges.size() == 2);

  // unit square corners, k=2: sides only, no diagonals.
  const PointCloud square = cloud_from({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}});
  const auto square_edges = build_knn_graph(square, 2);
  CHECK(square_edges.size() == 4);
  for (const PointEdge& e : square_edges)
    CHECK((square.positions[e.a] - square.positions[e.b]).norm() == doctest::Approx(1.0));

  CHECK_THROWS_AS(build_knn_graph(square, 4), std::invalid_argument);
  CHECK_THROWS_AS(build_knn_graph(cloud_from({{0, 0, 0}}), 1), std::invalid_argument);
}

TEST_CASE("knn edge weights scale with normal disagreement") {
  PointCloud cloud = cloud_from({{0, 0, 0}, {1, 0, 0}});
  const auto plain = build_knn_graph(cloud, 1);
  CHECK(plain[0].weight == doctest::Approx(1.0));

  cloud.normals = {{0, 0, 1}, {0, 0, 1}};
  CHECK(build_knn_graph(cloud, 1)[0].weight == doctest::Approx(1.0));  // coplanar: 1.5-0.5 = 1
  cloud.normals = {{0, 0, 1}, {1, 0, 0}};
  CHECK(build_knn_graph(cloud, 1)[0].weight == doctest::Approx(1.5));  // orthogonal
}

TEST_CASE("felzenszwalb reference oracle on the two-cluster instance") {
  const PointCloud cloud = two_cluster_cloud();
  const auto edges = build_knn_graph(cloud, 6);
  const auto sps = felzenszwalb_segment(cloud, edges, 0.5, 1);

  // Independent reference: plain union-find over the same sorted edge list,
  // replaying the published merge criterion step by step.
  struct Ref {
    std::vector<std::uint32_t> parent;
    std::uint32_t find(std::uint32_t x) {
      return parent[x] == x ? x : parent[x] = find(parent[x]);
    }
  } ref;
  ref.parent.resize(cloud.size());
  std::iota(ref.parent.begin(), ref.parent.end(), 0u);
  std::vector<double> internal(cloud.size(), 0.0);
  std::vector<std::uint32_t> size(cloud.size(), 1);
  auto sorted = edges;
  std::sort(sorted.begin(), sorted.end(), [](const PointEdge& x, const PointEdge& y) {
    return std::tie(x.weight, x.a, x.b) < std::tie(y.weight, y.a, y.b);
  });
  for (const PointEdge& e : sorted) {
    const auto ra = ref.find(e.a), rb = ref.find(e.b);
    if (ra == rb) continue;
    if (e.weight <= std::min(internal[ra] + 0.5 / size[ra], internal[rb] + 0.5 / size[rb])) {
      ref.parent[rb] = ra;
      size[ra] += size[rb];
      internal[ra] = std::max({internal[ra], internal[rb], e.weight});
    }
  }
  std::set<std::set<std::uint32_t>> expected;
  {
    std::map<std::uint32_t, std::set<std::uint32_t>> groups;
    for (std::uint32_t i = 0; i < cloud.size(); ++i) groups[ref.find(i)].insert(i);
    for (auto& [root, members] : groups) expected.insert(members);
  }
  CHECK(as_partition(sps) == expected);
  CHECK(sps.size() == 2);  // the toy instance separates into exactly the two clusters

  // centroid = arithmetic mean of members
  for (const Superpoint& sp : sps) {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (auto i : sp.point_indices) mean += cloud.positions[i];
    mean /= static_cast<double>(sp.point_indices.size());
    CHECK((mean - sp.centroid).norm() < 1e-12);
  }
}

TEST_CASE("felzenszwalb extremes") {
  const PointCloud cloud = two_cluster_cloud();
  // k large enough that the graph is connected across the gap; merging can
  // only happen along edges.
  const auto edges = build_knn_graph(cloud, 55);

  // weight_scale -> inf merges everything
  CHECK(felzenszwalb_segment(cloud, edges, 1e12, 1).size() == 1);

  // min_size > N/2 absorbs the smaller side
  CHECK(felzenszwalb_segment(cloud, edges, 0.5, 51).size() == 1);
}

TEST_CASE("partition property and permutation equivariance") {
  const PointCloud cloud = two_cluster_cloud();
  const auto edges = build_knn_graph(cloud, 6);
  const auto sps = felzenszwalb_segment(cloud, edges, 0.05, 5);

  std::vector<int> seen(cloud.size(), 0);
  for (const Superpoint& sp : sps)
    for (auto i : sp.point_indices) ++seen[i];
  CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));

  // permute input order; compare partitions as sets of original-index sets
  std::vector<std::size_t> perm(cloud.size());
  std::iota(perm.begin(), perm.end(), 0u);
  Rng rng(5);
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
  PointCloud shuffled;
  shuffled.positions.resize(cloud.size());
  for (std::size_t i = 0; i < perm.size(); ++i) shuffled.positions[i] = cloud.positions[perm[i]];
  const auto sps2 =
      felzenszwalb_segment(shuffled, build_knn_graph(shuffled, 6), 0.05, 5);

  std::set<std::set<std::uint32_t>> mapped;
  for (const Superpoint& sp : sps2) {
    std::set<std::uint32_t> members;
    for (auto i : sp.point_indices) members.insert(static_cast<std::uint32_t>(perm[i]));
    mapped.insert(members);
  }
  CHECK(mapped == as_partition(sps));
}

TEST_CASE("increasing weight_scale never increases superpoint count") {
  const PointCloud cloud = two_cluster_cloud();
  const auto edges = build_knn_graph(cloud, 6);
  std::size_t prev = SIZE_MAX;
  for (double scale : {0.001, 0.01, 0.05, 0.2, 1.0, 10.0}) {
    const std::size_t count = felzenszwalb_segment(cloud, edges, scale, 1).size();
    CHECK(count <= prev);
    prev = count;
  }
}

TEST_CASE("superpoint adjacency") {
  const PointCloud cloud = two_cluster_cloud();

  // single superpoint -> empty adjacency
  const auto edges6 = build_knn_graph(cloud, 6);
  const auto one = felzenszwalb_segment(cloud, edges6, 1e12, 1);
  const auto adj_one = compute_adjacency(one, edges6, cloud.size());
  CHECK(adj_one.neighbors[0].empty());

  // k large enough to bridge the two clusters -> exactly one adjacency edge
  const auto edges_wide = build_knn_graph(cloud, 55);
  const auto two = felzenszwalb_segment(cloud, edges6, 0.5, 1);
  REQUIRE(two.size() == 2);
  const auto adj = compute_adjacency(two, edges_wide, cloud.size());
  // enumerate crossing pairs: only (0,1)
  CHECK(adj.neighbors[0] == std::vector<int>{1});
  CHECK(adj.neighbors[1] == std::vector<int>{0});
  CHECK(adj.adjacent(0, 1));
  CHECK(adj.adjacent(1, 0));  // symmetric
}
