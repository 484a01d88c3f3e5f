#include "h2mg/cluster_tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace h2mg {

double Box::diameter() const {
  double s = 0.0;
  for (int a = 0; a < 3; ++a) s += (hi[a] - lo[a]) * (hi[a] - lo[a]);
  return std::sqrt(s);
}

double Box::distance(const Box& o) const {
  double s = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double gap = std::max({0.0, o.lo[a] - hi[a], lo[a] - o.hi[a]});
    s += gap * gap;
  }
  return std::sqrt(s);
}

bool Box::contains(const Box& o) const {
  for (int a = 0; a < 3; ++a)
    if (o.lo[a] < lo[a] || o.hi[a] > hi[a]) return false;
  return true;
}

Box Box::merged(const Box& o) const {
  Box m;
  for (int a = 0; a < 3; ++a) {
    m.lo[a] = std::min(lo[a], o.lo[a]);
    m.hi[a] = std::max(hi[a], o.hi[a]);
  }
  return m;
}

bool admissible(const Box& a, const Box& b, double eta) {
  return a.distance(b) > eta * std::min(a.diameter(), b.diameter());
}

bool admissible(const ClusterTree& tree, int level, Index node_a, Index node_b, double eta) {
  const auto& nodes = tree.level(level);
  return admissible(nodes.at(node_a).box, nodes.at(node_b).box, eta);
}

namespace {

struct Bisector {
  const PointSet& pts;
  std::vector<Index>& perm;
  int depth;
  std::vector<ClusterNode>& leaves;

  Box tight_box(Index begin, Index end) const {
    Box b;
    for (int a = 0; a < pts.dim(); ++a) {
      b.lo[a] = b.hi[a] = pts(perm[begin], a);
      for (Index i = begin + 1; i < end; ++i) {
        b.lo[a] = std::min(b.lo[a], pts(perm[i], a));
        b.hi[a] = std::max(b.hi[a], pts(perm[i], a));
      }
    }
    return b;
  }

  void split(Index begin, Index end, const Box& cell, int level) {
    if (level == depth) {
      leaves.push_back(ClusterNode{begin, end, 0, 0, cell});
      return;
    }
    const Box tight = tight_box(begin, end);
    int axis = 0;
    for (int a = 1; a < pts.dim(); ++a)
      if (tight.hi[a] - tight.lo[a] > tight.hi[axis] - tight.lo[axis]) axis = a;

    std::sort(perm.begin() + begin, perm.begin() + end, [&](Index i, Index j) {
      const double ci = pts(i, axis), cj = pts(j, axis);
      return ci < cj || (ci == cj && i < j);
    });
    const Index mid = begin + (end - begin + 1) / 2;
    const double cut = 0.5 * (pts(perm[mid - 1], axis) + pts(perm[mid], axis));
    Box left = cell, right = cell;
    left.hi[axis] = cut;
    right.lo[axis] = cut;
    split(begin, mid, left, level + 1);
    split(mid, end, right, level + 1);
  }
};

}  // namespace

ClusterTree ClusterTree::build(const PointSet& points, Index leaf_size, Index patch_factor) {
  if (leaf_size < 4) throw std::invalid_argument("ClusterTree: leaf_size must be >= 4");
  if (patch_factor < 2) throw std::invalid_argument("ClusterTree: patch_factor must be >= 2");
  const Index n = points.size();
  if (n < leaf_size)
    throw std::invalid_argument("ClusterTree: fewer points than leaf_size; use a dense matrix");

  ClusterTree tree;
  tree.leaf_size_ = leaf_size;
  tree.patch_factor_ = patch_factor;
  tree.tree_to_original_.resize(n);
  std::iota(tree.tree_to_original_.begin(), tree.tree_to_original_.end(), Index{0});

  // Every leaf sits at the same depth: the smallest d with ceil(n / 2^d) <= leaf_size.
  int depth = 0;
  for (Index largest = n; largest > leaf_size; largest = (largest + 1) / 2) ++depth;

  std::vector<ClusterNode> leaves;
  Bisector bisector{points, tree.tree_to_original_, depth, leaves};
  bisector.split(0, n, bisector.tight_box(0, n), 0);
  tree.levels_.push_back(std::move(leaves));

  while (tree.levels_.back().size() > 1) {
    const auto& below = tree.levels_.back();
    const Index m = static_cast<Index>(below.size());
    const Index groups = std::max<Index>(1, m / patch_factor);
    std::vector<ClusterNode> above;
    above.reserve(groups);
    for (Index g = 0; g < groups; ++g) {
      const Index first = g * patch_factor;
      const Index last = (g + 1 == groups) ? m : first + patch_factor;
      ClusterNode node{below[first].begin, below[last - 1].end, first, last, below[first].box};
      for (Index c = first + 1; c < last; ++c) node.box = node.box.merged(below[c].box);
      above.push_back(node);
    }
    tree.levels_.push_back(std::move(above));
  }

  tree.original_to_tree_.resize(n);
  for (Index t = 0; t < n; ++t) tree.original_to_tree_[tree.tree_to_original_[t]] = t;
  return tree;
}

Vector ClusterTree::to_tree_order(const Vector& x) const {
  if (x.size() != num_points()) throw std::invalid_argument("to_tree_order: size mismatch");
  Vector y(x.size());
  for (Index t = 0; t < y.size(); ++t) y[t] = x[tree_to_original_[t]];
  return y;
}

Vector ClusterTree::to_original_order(const Vector& x) const {
  if (x.size() != num_points()) throw std::invalid_argument("to_original_order: size mismatch");
  Vector y(x.size());
  for (Index t = 0; t < y.size(); ++t) y[tree_to_original_[t]] = x[t];
  return y;
}

}  // namespace h2mg
