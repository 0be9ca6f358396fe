#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <vector>

#include "mapfuse/types.hpp"

namespace mapfuse {

/// Static 3-d tree over a point set (median split, leaf buckets).
class KdTree {
 public:
  KdTree() = default;
  explicit KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0);
    if (!points_.empty()) root_ = build(0, int(points_.size()));
  }

  size_t size() const { return points_.size(); }
  const Vec3& point(int i) const { return points_[i]; }

  /// Index of the closest point, -1 when empty. dist2 receives the squared
  /// distance when non-null.
  int nearest(const Vec3& q, double* dist2 = nullptr) const {
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    if (root_ >= 0) search(root_, q, best, best_d2);
    if (dist2) *dist2 = best_d2;
    return best;
  }

  double nearest_dist(const Vec3& q) const {
    double d2 = std::numeric_limits<double>::infinity();
    nearest(q, &d2);
    return std::sqrt(d2);
  }

  /// Indices of the k closest points, nearest first.
  std::vector<int> knearest(const Vec3& q, int k) const {
    Heap heap;
    if (root_ >= 0 && k > 0) search_k(root_, q, k, heap);
    std::vector<int> out(heap.size());
    for (int i = int(heap.size()) - 1; i >= 0; --i) {
      out[i] = heap.top().second;
      heap.pop();
    }
    return out;
  }

 private:
  struct Node {
    double split = 0.0;
    int axis = -1;  // -1 marks a leaf
    int left = -1, right = -1;
    int begin = 0, end = 0;  // leaf range in order_
  };
  using Heap = std::priority_queue<std::pair<double, int>>;
  static constexpr int kLeafSize = 8;

  int build(int begin, int end) {
    Node node;
    if (end - begin <= kLeafSize) {
      node.begin = begin;
      node.end = end;
      nodes_.push_back(node);
      return int(nodes_.size()) - 1;
    }
    Aabb box;
    for (int i = begin; i < end; ++i) box.expand(points_[order_[i]]);
    int axis = 0;
    const Vec3 ext = box.extent();
    if (ext.y() > ext.x()) axis = 1;
    if (ext.z() > ext[axis]) axis = 2;
    const int mid = (begin + end) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid,
                     order_.begin() + end, [&](int a, int b) {
                       return points_[a][axis] < points_[b][axis];
                     });
    node.axis = axis;
    node.split = points_[order_[mid]][axis];
    const int self = int(nodes_.size());
    nodes_.push_back(node);
    const int l = build(begin, mid);
    const int r = build(mid, end);
    nodes_[self].left = l;
    nodes_[self].right = r;
    return self;
  }

  void search(int ni, const Vec3& q, int& best, double& best_d2) const {
    const Node& n = nodes_[ni];
    if (n.axis < 0) {
      for (int i = n.begin; i < n.end; ++i) {
        const int idx = order_[i];
        const double d2 = (points_[idx] - q).squaredNorm();
        if (d2 < best_d2) {
          best_d2 = d2;
          best = idx;
        }
      }
      return;
    }
    const double diff = q[n.axis] - n.split;
    const int first = diff < 0.0 ? n.left : n.right;
    const int second = diff < 0.0 ? n.right : n.left;
    search(first, q, best, best_d2);
    if (diff * diff < best_d2) search(second, q, best, best_d2);
  }

  void search_k(int ni, const Vec3& q, int k, Heap& heap) const {
    const Node& n = nodes_[ni];
    if (n.axis < 0) {
      for (int i = n.begin; i < n.end; ++i) {
        const int idx = order_[i];
        const double d2 = (points_[idx] - q).squaredNorm();
        if (int(heap.size()) < k)
          heap.emplace(d2, idx);
        else if (d2 < heap.top().first) {
          heap.pop();
          heap.emplace(d2, idx);
        }
      }
      return;
    }
    const double diff = q[n.axis] - n.split;
    const int first = diff < 0.0 ? n.left : n.right;
    const int second = diff < 0.0 ? n.right : n.left;
    search_k(first, q, k, heap);
    if (int(heap.size()) < k || diff * diff < heap.top().first)
      search_k(second, q, k, heap);
  }

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace mapfuse
