#pragma once

#include <array>
#include <span>
#include <vector>

#include "h2mg/geometry.hpp"

namespace h2mg {

/// Axis-aligned box in up to three dimensions; unused axes are [0, 0].
struct Box {
  std::array<double, 3> lo{0.0, 0.0, 0.0};
  std::array<double, 3> hi{0.0, 0.0, 0.0};

  double diameter() const;
  /// Euclidean gap between the boxes; 0 when they touch or overlap.
  double distance(const Box& other) const;
  bool contains(const Box& other) const;
  Box merged(const Box& other) const;
};

/// A contiguous range [begin, end) of tree-ordered indices. For levels above
/// the leaves, [child_begin, child_end) indexes the previous level.
struct ClusterNode {
  Index begin = 0;
  Index end = 0;
  Index child_begin = 0;
  Index child_end = 0;
  Box box;

  Index size() const { return end - begin; }
};

/// Balanced spatial partition. Level 0 holds the leaves (the finest block
/// partition), each further level merges `patch_factor` consecutive nodes of
/// the level below, the trailing group absorbing any remainder, until one
/// node remains.
class ClusterTree {
 public:
  /// Recursive median bisection along the longest extent of each cluster,
  /// applied uniformly until every leaf holds at most `leaf_size` points.
  /// Throws std::invalid_argument when N < leaf_size, leaf_size < 4 or
  /// patch_factor < 2.
  static ClusterTree build(const PointSet& points, Index leaf_size, Index patch_factor);

  Index num_points() const { return static_cast<Index>(tree_to_original_.size()); }
  int num_levels() const { return static_cast<int>(levels_.size()); }
  const std::vector<ClusterNode>& level(int k) const { return levels_.at(k); }
  Index leaf_size() const { return leaf_size_; }
  Index patch_factor() const { return patch_factor_; }

  /// tree_to_original()[t] is the original index stored at tree position t.
  std::span<const Index> tree_to_original() const { return tree_to_original_; }
  std::span<const Index> original_to_tree() const { return original_to_tree_; }

  /// Original ordering -> tree ordering, and back.
  Vector to_tree_order(const Vector& x) const;
  Vector to_original_order(const Vector& x) const;

 private:
  Index leaf_size_ = 0;
  Index patch_factor_ = 0;
  std::vector<std::vector<ClusterNode>> levels_;
  std::vector<Index> tree_to_original_;
  std::vector<Index> original_to_tree_;
};

/// Strong admissibility: true iff dist(a, b) > eta * min(diam(a), diam(b)).
/// With eta = 0 two boxes are far exactly when they do not touch.
bool admissible(const Box& a, const Box& b, double eta);

/// Same rule applied to two nodes of one tree level.
bool admissible(const ClusterTree& tree, int level, Index node_a, Index node_b, double eta);

}  // namespace h2mg
