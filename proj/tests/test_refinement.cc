#include <cmath>

#include "doctest.h"
#include "mv3dis/refinement.h"

using namespace mv3dis;

namespace {

struct ToyGraph {
  std::vector<Superpoint> superpoints;
  SuperpointAdjacency adjacency;
  AffinityGraph graph;

  void add_superpoint(Eigen::Vector3d centroid, std::size_t count) {
    Superpoint sp;
    sp.superpoint_id = static_cast<int>(superpoints.size());
    sp.centroid = centroid;
    sp.point_indices.resize(count);
    superpoints.push_back(std::move(sp));
    adjacency.neighbors.resize(superpoints.size());
  }

  void add_edge(int a, int b, double affinity) {
    adjacency.neighbors[a].push_back(b);
    adjacency.neighbors[b].push_back(a);
    std::sort(adjacency.neighbors[a].begin(), adjacency.neighbors[a].end());
    std::sort(adjacency.neighbors[b].begin(), adjacency.neighbors[b].end());
    graph.edges.push_back({std::min(a, b), std::max(a, b), affinity});
    graph.lookup.emplace(AffinityGraph::key(a, b), affinity);
  }
};

SegmentationState state_of(std::vector<int> assignment) {
  SegmentationState state;
  state.assignment = std::move(assignment);
  state.rebuild_regions();
  return state;
}

}  // namespace

TEST_CASE("boundary superpoints") {
  ToyGraph g;
  for (int i = 0; i < 6; ++i) g.add_superpoint({static_cast<double>(i), 0, 0}, 10);
  for (int i = 0; i + 1 < 6; ++i) g.add_edge(i, i + 1, 0.9);

  SUBCASE("single region: empty boundary") {
    const auto state = state_of({0, 0, 0, 0, 0, 0});
    CHECK(boundary_superpoints(state, g.adjacency).empty());
  }

  SUBCASE("two regions sharing one adjacency edge: both endpoints") {
    const auto state = state_of({0, 0, 0, 1, 1, 1});
    CHECK(boundary_superpoints(state, g.adjacency) == std::set<int>{2, 3});
  }

  SUBCASE("three-region chain: every superpoint touching a different region") {
    const auto state = state_of({0, 0, 1, 1, 2, 2});
    CHECK(boundary_superpoints(state, g.adjacency) == std::set<int>{1, 2, 3, 4});
  }
}

TEST_CASE("refine reaches a fixed point immediately on consistent states") {
  ToyGraph g;
  for (int i = 0; i < 4; ++i) g.add_superpoint({static_cast<double>(i), 0, 0}, 10);
  g.add_edge(0, 1, 0.9);
  g.add_edge(1, 2, 0.1);
  g.add_edge(2, 3, 0.9);
  const auto state = state_of({0, 0, 1, 1});

  const auto [refined, trace] = refine(state, g.graph, g.adjacency, g.superpoints, 10);
  CHECK(refined.assignment == state.assignment);
  CHECK(trace.iterations.size() == 1);
  CHECK(trace.iterations[0].moves == 0);
  CHECK(trace.converged);
}

TEST_CASE("misassigned superpoint moves in one iteration, converges in two") {
  // 0-1 strongly tied, 2 strongly tied to 3, but 2 starts in region with 0,1.
  ToyGraph g;
  for (int i = 0; i < 4; ++i) g.add_superpoint({static_cast<double>(i), 0, 0}, 10);
  g.add_edge(0, 1, 0.9);
  g.add_edge(1, 2, 0.2);
  g.add_edge(2, 3, 0.8);
  const auto state = state_of({0, 0, 0, 1});

  const auto [refined, trace] = refine(state, g.graph, g.adjacency, g.superpoints, 10);
  CHECK(refined.assignment[2] == refined.assignment[3]);
  CHECK(refined.assignment[0] == refined.assignment[1]);
  CHECK(refined.assignment[0] != refined.assignment[2]);
  REQUIRE(trace.iterations.size() == 2);
  CHECK(trace.iterations[0].moves == 1);
  CHECK(trace.iterations[0].details[0].superpoint == 2);
  CHECK(trace.iterations[1].moves == 0);
  CHECK(trace.converged);
}

TEST_CASE("each move strictly improves the mover's own score") {
  ToyGraph g;
  for (int i = 0; i < 6; ++i)
    g.add_superpoint({std::cos(i * 1.047), std::sin(i * 1.047), 0}, 10 + i);
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j) g.add_edge(i, j, ((i * 7 + j * 3) % 10) / 10.0);
  const auto state = state_of({0, 1, 0, 1, 0, 1});

  // Replay refine decisions and verify strict improvement at move time.
  SegmentationState current = state;
  const auto [refined, trace] = refine(state, g.graph, g.adjacency, g.superpoints, 10);
  for (const auto& iter : trace.iterations) {
    for (const auto& move : iter.details) {
      const auto before = neighbor_weighted_affinity(
          move.superpoint, current.regions[move.from_region], g.graph, g.adjacency, g.superpoints);
      const auto after = neighbor_weighted_affinity(
          move.superpoint, current.regions[move.to_region], g.graph, g.adjacency, g.superpoints);
      REQUIRE(after.has_value());
      if (before) CHECK(*after > *before);
      // apply the move to track the evolving state
      auto& from = current.regions[move.from_region];
      from.erase(std::find(from.begin(), from.end(), move.superpoint));
      auto& to = current.regions[move.to_region];
      to.insert(std::upper_bound(to.begin(), to.end(), move.superpoint), move.superpoint);
      current.assignment[move.superpoint] = move.to_region;
    }
  }
}

TEST_CASE("oscillation-prone symmetric case halts at max_iters") {
  // Two regions; superpoints 1 and 2 each prefer the other's region, and the
  // preference flips once the other moves.
  ToyGraph g;
  g.add_superpoint({0, 0, 0}, 30);
  g.add_superpoint({1, 0, 0}, 10);
  g.add_superpoint({2, 0, 0}, 10);
  g.add_superpoint({3, 0, 0}, 30);
  g.add_edge(0, 1, 0.3);
  g.add_edge(1, 2, 0.9);
  g.add_edge(2, 3, 0.3);
  const auto state = state_of({0, 0, 1, 1});

  const auto [refined, trace] = refine(state, g.graph, g.adjacency, g.superpoints, 3);
  CHECK(trace.iterations.size() <= 3);
  // partition preserved whatever happened
  std::vector<int> seen(4, 0);
  for (int r = 0; r < refined.region_count(); ++r)
    for (int sp : refined.regions[r]) ++seen[sp];
  for (int c : seen) CHECK(c == 1);
}

TEST_CASE("emptied regions are deleted and ids recompacted") {
  ToyGraph g;
  for (int i = 0; i < 3; ++i) g.add_superpoint({static_cast<double>(i), 0, 0}, 10);
  g.add_edge(0, 1, 0.9);
  g.add_edge(1, 2, 0.9);
  // superpoint 2 alone in region 1; its own-region score is undefined, so any
  // defined neighbor score wins and region 1 empties.
  const auto state = state_of({0, 0, 1});
  const auto [refined, trace] = refine(state, g.graph, g.adjacency, g.superpoints, 10);
  CHECK(refined.region_count() == 1);
  CHECK(refined.assignment == std::vector<int>{0, 0, 0});
}

TEST_CASE("determinism: identical traces across runs") {
  ToyGraph g;
  for (int i = 0; i < 8; ++i)
    g.add_superpoint({std::cos(i * 0.785), std::sin(i * 0.785), 0}, 10 + (i % 3));
  for (int i = 0; i < 8; ++i)
    for (int j = i + 1; j < 8; ++j)
      if ((i + j) % 2 == 0) g.add_edge(i, j, ((i * 5 + j) % 10) / 10.0);
  const auto state = state_of({0, 0, 1, 1, 2, 2, 3, 3});

  const auto [r1, t1] = refine(state, g.graph, g.adjacency, g.superpoints, 10);
  const auto [r2, t2] = refine(state, g.graph, g.adjacency, g.superpoints, 10);
  CHECK(r1.assignment == r2.assignment);
  REQUIRE(t1.iterations.size() == t2.iterations.size());
  for (std::size_t i = 0; i < t1.iterations.size(); ++i)
    CHECK(t1.iterations[i].moves == t2.iterations[i].moves);
}
