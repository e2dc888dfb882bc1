#pragma once

#include <vector>

#include "dcop/instance.hpp"

namespace dcop {

/// DFS spanning forest of (a masked part of) the constraint graph in which every
/// non-tree constraint joins a variable to one of its ancestors.
///
/// Per-variable vectors are indexed by the full instance's variable ids; variables
/// outside the forest have depth -1.
struct PseudoTree {
  std::vector<Var> roots;
  std::vector<Var> parent;
  std::vector<std::vector<Var>> pseudo_parents;
  std::vector<std::vector<Var>> children;
  std::vector<std::vector<Var>> pseudo_children;
  std::vector<int> depth;
  /// Preorder over the whole forest; subtree(v) is a contiguous slice.
  std::vector<Var> dfs_order;
  std::vector<int> preorder_index;
  std::vector<int> subtree_end;

  Var root() const { return roots.front(); }
  bool contains(Var v) const { return depth[v] >= 0; }
  int num_vars() const { return static_cast<int>(dfs_order.size()); }
  bool is_ancestor(Var a, Var v) const;
  /// v followed by its descendants, in preorder.
  std::vector<Var> subtree(Var v) const;
  int tree_edge_count() const;
  int back_edge_count() const;
};

/// Pseudo tree of root's connected component within `mask` (whole graph when empty).
/// Unvisited neighbors are explored in ascending index order.
PseudoTree build_pseudo_tree(const ProblemInstance& p, Var root, const std::vector<char>& mask = {});

/// One pseudo tree per connected component; each rooted at its maximum-degree
/// variable (degree within the mask), ties to the lowest index.
PseudoTree build_pseudo_forest(const ProblemInstance& p, const std::vector<char>& mask = {});

/// Ancestors of i constrained with i or any descendant of i, ascending.
std::vector<Var> separator(const PseudoTree& pt, Var i);

/// Orientation of the unassigned-variable subgraph toward a target.
///
/// Successors are a variable's parent and pseudo-parents in a pseudo tree rooted at
/// the target; precursors are children and pseudo-children. Only the target's
/// connected component within the unassigned set is covered.
struct DagOrientation {
  Var target = 0;
  std::vector<Var> variables;
  std::vector<std::vector<Var>> precursors;
  std::vector<std::vector<Var>> successors;
  std::vector<char> member;

  bool contains(Var v) const { return v >= 0 && v < static_cast<int>(member.size()) && member[v]; }
};

DagOrientation orient_dag(const ProblemInstance& p, const std::vector<Var>& unassigned, Var target);

}  // namespace dcop
