#include "mv3dis/superpoints.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <stdexcept>

#include "mv3dis/parallel.h"

namespace mv3dis {

namespace {

// Minimal kd-tree over 3D points. Built with full sorts and index tie-breaks
// so the structure (and therefore every query result) is reproducible across
// standard library implementations and thread counts.
class KdTree {
 public:
  explicit KdTree(const std::vector<Eigen::Vector3d>& points) : points_(points) {
    index_.resize(points.size());
    std::iota(index_.begin(), index_.end(), 0u);
    nodes_.reserve(points.size() * 2);
    root_ = build(0, points.size());
  }

  // k nearest neighbors of points_[query], excluding the query itself.
  // Ties on distance are broken by ascending point index.
  void knn(std::uint32_t query, int k, std::vector<std::pair<double, std::uint32_t>>& out) const {
    out.clear();
    search(root_, query, static_cast<std::size_t>(k), out);
    std::sort_heap(out.begin(), out.end());
  }

 private:
  struct Node {
    std::uint32_t point = 0;
    int axis = 0;
    int left = -1, right = -1;
  };

  int build(std::size_t lo, std::size_t hi) {
    if (lo >= hi) return -1;
    // Split on the widest axis of this range.
    Eigen::Vector3d mn = points_[index_[lo]], mx = points_[index_[lo]];
    for (std::size_t i = lo + 1; i < hi; ++i) {
      mn = mn.cwiseMin(points_[index_[i]]);
      mx = mx.cwiseMax(points_[index_[i]]);
    }
    int axis = 0;
    (mx - mn).maxCoeff(&axis);

    const std::size_t mid = (lo + hi) / 2;
    std::sort(index_.begin() + lo, index_.begin() + hi, [&](std::uint32_t a, std::uint32_t b) {
      const double ca = points_[a][axis], cb = points_[b][axis];
      if (ca != cb) return ca < cb;
      return a < b;
    });

    Node node;
    node.point = index_[mid];
    node.axis = axis;
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    nodes_[self].left = build(lo, mid);
    nodes_[self].right = build(mid + 1, hi);
    return self;
  }

  void search(int node_id, std::uint32_t query, std::size_t k,
              std::vector<std::pair<double, std::uint32_t>>& heap) const {
    if (node_id < 0) return;
    const Node& node = nodes_[node_id];
    const Eigen::Vector3d& q = points_[query];

    if (node.point != query) {
      const double d2 = (points_[node.point] - q).squaredNorm();
      const std::pair<double, std::uint32_t> cand{d2, node.point};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end());
      } else if (cand < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end());
      }
    }

    const double delta = q[node.axis] - points_[node.point][node.axis];
    const int near = delta <= 0 ? node.left : node.right;
    const int far = delta <= 0 ? node.right : node.left;
    search(near, query, k, heap);
    if (heap.size() < k || delta * delta <= heap.front().first) search(far, query, k, heap);
  }

  const std::vector<Eigen::Vector3d>& points_;
  std::vector<std::uint32_t> index_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

double edge_dissimilarity(const PointCloud& cloud, std::uint32_t a, std::uint32_t b) {
  const double dist = (cloud.positions[a] - cloud.positions[b]).norm();
  if (!cloud.has_normals()) return dist;
  const double dot = std::clamp(cloud.normals[a].dot(cloud.normals[b]), -1.0, 1.0);
  return dist * (1.5 - 0.5 * dot);
}

struct UnionFind {
  std::vector<std::uint32_t> parent;
  std::vector<std::uint32_t> size;

  explicit UnionFind(std::size_t n) : parent(n), size(n, 1) {
    std::iota(parent.begin(), parent.end(), 0u);
  }

  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }

  std::uint32_t unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return a;
    if (size[a] < size[b]) std::swap(a, b);
    parent[b] = a;
    size[a] += size[b];
    return a;
  }
};

}  // namespace

std::vector<PointEdge> build_knn_graph(const PointCloud& cloud, int k) {
  const std::size_t n = cloud.size();
  if (n < 2) throw std::invalid_argument("build_knn_graph: degenerate cloud");
  if (k < 1 || static_cast<std::size_t>(k) >= n)
    throw std::invalid_argument("build_knn_graph: k must satisfy 1 <= k < point count");

  KdTree tree(cloud.positions);
  std::vector<std::vector<std::uint32_t>> neighbors(n);
  parallel_for(n, [&](std::size_t i) {
    std::vector<std::pair<double, std::uint32_t>> found;
    tree.knn(static_cast<std::uint32_t>(i), k, found);
    neighbors[i].reserve(found.size());
    for (const auto& [d2, j] : found) neighbors[i].push_back(j);
  });

  // Symmetric closure + dedup: keep each unordered pair once.
  std::vector<PointEdge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint32_t j : neighbors[i]) {
      const std::uint32_t a = std::min<std::uint32_t>(i, j);
      const std::uint32_t b = std::max<std::uint32_t>(i, j);
      edges.push_back({a, b, 0.0});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const PointEdge& x, const PointEdge& y) {
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](const PointEdge& x, const PointEdge& y) {
                            return x.a == y.a && x.b == y.b;
                          }),
              edges.end());
  parallel_for(edges.size(),
               [&](std::size_t e) { edges[e].weight = edge_dissimilarity(cloud, edges[e].a, edges[e].b); });
  return edges;
}

std::vector<Superpoint> felzenszwalb_segment(const PointCloud& cloud,
                                             const std::vector<PointEdge>& edges,
                                             double weight_scale, int min_size) {
  const std::size_t n = cloud.size();
  std::vector<PointEdge> sorted = edges;
  std::sort(sorted.begin(), sorted.end(), [](const PointEdge& x, const PointEdge& y) {
    if (x.weight != y.weight) return x.weight < y.weight;
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });

  UnionFind uf(n);
  std::vector<double> internal(n, 0.0);  // max merged edge weight per component root
  for (const PointEdge& e : sorted) {
    const std::uint32_t ra = uf.find(e.a);
    const std::uint32_t rb = uf.find(e.b);
    if (ra == rb) continue;
    const double ta = internal[ra] + weight_scale / uf.size[ra];
    const double tb = internal[rb] + weight_scale / uf.size[rb];
    if (e.weight <= ta && e.weight <= tb) {
      const std::uint32_t r = uf.unite(ra, rb);
      internal[r] = std::max({internal[ra], internal[rb], e.weight});
    }
  }

  // Absorb small components into their lowest-weight neighbor.
  for (const PointEdge& e : sorted) {
    const std::uint32_t ra = uf.find(e.a);
    const std::uint32_t rb = uf.find(e.b);
    if (ra == rb) continue;
    if (uf.size[ra] < static_cast<std::uint32_t>(min_size) ||
        uf.size[rb] < static_cast<std::uint32_t>(min_size))
      uf.unite(ra, rb);
  }

  // Collect components; ids ordered by smallest member point index.
  std::vector<int> comp_id(n, -1);
  std::vector<Superpoint> superpoints;
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t r = uf.find(i);
    if (comp_id[r] < 0) {
      comp_id[r] = static_cast<int>(superpoints.size());
      superpoints.push_back({comp_id[r], {}, Eigen::Vector3d::Zero()});
    }
    superpoints[comp_id[r]].point_indices.push_back(i);
  }
  for (Superpoint& sp : superpoints) {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (std::uint32_t i : sp.point_indices) sum += cloud.positions[i];
    sp.centroid = sum / static_cast<double>(sp.point_indices.size());
  }
  return superpoints;
}

std::vector<int> superpoint_of_points(const std::vector<Superpoint>& superpoints,
                                      std::size_t point_count) {
  std::vector<int> owner(point_count, -1);
  for (const Superpoint& sp : superpoints)
    for (std::uint32_t i : sp.point_indices) owner[i] = sp.superpoint_id;
  return owner;
}

SuperpointAdjacency compute_adjacency(const std::vector<Superpoint>& superpoints,
                                      const std::vector<PointEdge>& point_edges,
                                      std::size_t point_count) {
  const std::vector<int> owner = superpoint_of_points(superpoints, point_count);
  SuperpointAdjacency adj;
  adj.neighbors.resize(superpoints.size());
  for (const PointEdge& e : point_edges) {
    const int sa = owner[e.a];
    const int sb = owner[e.b];
    if (sa == sb || sa < 0 || sb < 0) continue;
    adj.neighbors[sa].push_back(sb);
    adj.neighbors[sb].push_back(sa);
  }
  for (auto& list : adj.neighbors) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return adj;
}

}  // namespace mv3dis
