#include "dcop/pseudo_tree.hpp"

#include <algorithm>

#include "dcop/errors.hpp"

namespace dcop {
namespace {

void init(PseudoTree& pt, int n) {
  pt.parent.assign(n, -1);
  pt.pseudo_parents.assign(n, {});
  pt.children.assign(n, {});
  pt.pseudo_children.assign(n, {});
  pt.depth.assign(n, -1);
  pt.preorder_index.assign(n, -1);
  pt.subtree_end.assign(n, -1);
}

void grow(const ProblemInstance& p, Var root, const std::vector<char>& mask, PseudoTree& pt) {
  auto allowed = [&](Var v) { return mask.empty() || mask[v]; };
  std::vector<char> on_stack(p.num_agents(), 0);
  struct Frame {
    Var v;
    std::size_t next;
  };
  std::vector<Frame> stack;
  auto enter = [&](Var v, int depth) {
    pt.depth[v] = depth;
    pt.preorder_index[v] = static_cast<int>(pt.dfs_order.size());
    pt.dfs_order.push_back(v);
    on_stack[v] = 1;
    stack.push_back({v, 0});
  };
  pt.roots.push_back(root);
  enter(root, 0);
  while (!stack.empty()) {
    auto& top = stack.back();
    const Var v = top.v;
    const auto nbrs = p.neighbors(v);
    if (top.next == nbrs.size()) {
      pt.subtree_end[v] = static_cast<int>(pt.dfs_order.size());
      on_stack[v] = 0;
      stack.pop_back();
      continue;
    }
    const Var u = nbrs[top.next++];
    if (!allowed(u)) continue;
    if (pt.depth[u] < 0) {
      pt.parent[u] = v;
      pt.children[v].push_back(u);
      enter(u, pt.depth[v] + 1);
    } else if (on_stack[u] && u != pt.parent[v]) {
      pt.pseudo_parents[v].push_back(u);
      pt.pseudo_children[u].push_back(v);
    }
  }
}

void finish(PseudoTree& pt) {
  for (auto& s : pt.pseudo_parents) std::sort(s.begin(), s.end());
  for (auto& s : pt.pseudo_children) std::sort(s.begin(), s.end());
}

}  // namespace

bool PseudoTree::is_ancestor(Var a, Var v) const {
  if (!contains(a) || !contains(v) || a == v) return false;
  return preorder_index[a] < preorder_index[v] && preorder_index[v] < subtree_end[a];
}

std::vector<Var> PseudoTree::subtree(Var v) const {
  return {dfs_order.begin() + preorder_index[v], dfs_order.begin() + subtree_end[v]};
}

int PseudoTree::tree_edge_count() const {
  int count = 0;
  for (Var v : dfs_order) count += parent[v] >= 0 ? 1 : 0;
  return count;
}

int PseudoTree::back_edge_count() const {
  int count = 0;
  for (Var v : dfs_order) count += static_cast<int>(pseudo_parents[v].size());
  return count;
}

PseudoTree build_pseudo_tree(const ProblemInstance& p, Var root, const std::vector<char>& mask) {
  if (!p.contains(root)) throw InputError("root out of range");
  if (!mask.empty() && !mask[root]) throw InputError("root excluded by mask");
  PseudoTree pt;
  init(pt, p.num_agents());
  grow(p, root, mask, pt);
  finish(pt);
  return pt;
}

PseudoTree build_pseudo_forest(const ProblemInstance& p, const std::vector<char>& mask) {
  PseudoTree pt;
  init(pt, p.num_agents());
  auto allowed = [&](Var v) { return mask.empty() || mask[v]; };
  for (const auto& comp : connected_components(p, mask)) {
    Var best = comp.front();
    int best_degree = -1;
    for (Var v : comp) {
      int deg = 0;
      for (Var u : p.neighbors(v)) deg += allowed(u) ? 1 : 0;
      if (deg > best_degree) {
        best = v;
        best_degree = deg;
      }
    }
    grow(p, best, mask, pt);
  }
  finish(pt);
  return pt;
}

std::vector<Var> separator(const PseudoTree& pt, Var i) {
  if (!pt.contains(i)) throw InputError("variable not in pseudo tree");
  std::vector<Var> sep;
  for (Var u : pt.subtree(i)) {
    if (u == i && pt.parent[u] >= 0) sep.push_back(pt.parent[u]);
    for (Var a : pt.pseudo_parents[u]) {
      if (pt.is_ancestor(a, i)) sep.push_back(a);
    }
  }
  std::sort(sep.begin(), sep.end());
  sep.erase(std::unique(sep.begin(), sep.end()), sep.end());
  return sep;
}

DagOrientation orient_dag(const ProblemInstance& p, const std::vector<Var>& unassigned, Var target) {
  if (std::find(unassigned.begin(), unassigned.end(), target) == unassigned.end()) {
    throw InputError("target must be unassigned");
  }
  std::vector<char> mask(p.num_agents(), 0);
  for (Var v : unassigned) {
    if (!p.contains(v)) throw InputError("unassigned variable out of range");
    mask[v] = 1;
  }
  const PseudoTree pt = build_pseudo_tree(p, target, mask);
  DagOrientation dag;
  dag.target = target;
  dag.precursors.assign(p.num_agents(), {});
  dag.successors.assign(p.num_agents(), {});
  dag.member.assign(p.num_agents(), 0);
  for (Var v : pt.dfs_order) {
    dag.member[v] = 1;
    dag.variables.push_back(v);
    auto& succ = dag.successors[v];
    if (pt.parent[v] >= 0) succ.push_back(pt.parent[v]);
    succ.insert(succ.end(), pt.pseudo_parents[v].begin(), pt.pseudo_parents[v].end());
    std::sort(succ.begin(), succ.end());
    auto& prec = dag.precursors[v];
    prec = pt.children[v];
    prec.insert(prec.end(), pt.pseudo_children[v].begin(), pt.pseudo_children[v].end());
    std::sort(prec.begin(), prec.end());
  }
  std::sort(dag.variables.begin(), dag.variables.end());
  return dag;
}

}  // namespace dcop
