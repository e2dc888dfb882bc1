#include <algorithm>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "dcop/errors.hpp"
#include "dcop/generators.hpp"
#include "dcop/pseudo_tree.hpp"
#include "support/helpers.hpp"

namespace dcop {
namespace {

TEST(PseudoTree, Chain) {
  const auto pt = build_pseudo_tree(testing::chain3(), 0);
  EXPECT_EQ(pt.parent[1], 0);
  EXPECT_EQ(pt.parent[2], 1);
  EXPECT_EQ(pt.back_edge_count(), 0);
  EXPECT_EQ(pt.dfs_order, (std::vector<Var>{0, 1, 2}));
}

TEST(PseudoTree, Triangle) {
  const auto pt = build_pseudo_tree(testing::triangle(), 0);
  EXPECT_EQ(pt.parent[1], 0);
  EXPECT_EQ(pt.parent[2], 1);
  EXPECT_EQ(pt.pseudo_parents[2], (std::vector<Var>{0}));
  EXPECT_EQ(pt.pseudo_children[0], (std::vector<Var>{2}));
}

TEST(PseudoTree, EdgesCoverComponentAndBackEdgesGoToAncestors) {
  for (int s = 0; s < 40; ++s) {
    const auto p = gen_random(15, 2, 0.25, s);
    const auto pt = build_pseudo_tree(p, s % 15);
    int component_edges = 0;
    for (const auto& t : p.constraints()) component_edges += pt.contains(t.i) && pt.contains(t.j) ? 1 : 0;
    EXPECT_EQ(pt.tree_edge_count() + pt.back_edge_count(), component_edges);
    for (Var v : pt.dfs_order) {
      for (Var a : pt.pseudo_parents[v]) EXPECT_TRUE(pt.is_ancestor(a, v));
      // Every constraint of v inside the tree joins an ancestor or a descendant.
      for (Var u : p.neighbors(v)) EXPECT_TRUE(pt.is_ancestor(u, v) || pt.is_ancestor(v, u));
    }
  }
}

TEST(PseudoTree, ForestRootsAtMaxDegree) {
  ProblemInstance p({2, 2, 2, 2, 2, 2});
  const std::vector<Cost> t(4, 1);
  p.add_constraint(0, 1, t);
  p.add_constraint(1, 2, t);
  p.add_constraint(1, 3, t);
  p.add_constraint(4, 5, t);
  const auto pt = build_pseudo_forest(p);
  EXPECT_EQ(pt.roots, (std::vector<Var>{1, 4}));
  EXPECT_EQ(pt.num_vars(), 6);
}

TEST(Separator, Examples) {
  const auto chain = build_pseudo_tree(testing::chain3(), 0);
  EXPECT_TRUE(separator(chain, 0).empty());
  EXPECT_EQ(separator(chain, 2), (std::vector<Var>{1}));
  const auto tri = build_pseudo_tree(testing::triangle(), 0);
  EXPECT_EQ(separator(tri, 2), (std::vector<Var>{0, 1}));
  EXPECT_EQ(separator(tri, 1), (std::vector<Var>{0}));
}

TEST(Separator, MatchesDefinitionByEnumeration) {
  for (int s = 0; s < 30; ++s) {
    const auto p = gen_random(12, 2, 0.3, 1000 + s);
    const auto pt = build_pseudo_forest(p);
    for (Var i : pt.dfs_order) {
      std::vector<Var> expected;
      for (Var a = 0; a < p.num_agents(); ++a) {
        if (!pt.is_ancestor(a, i)) continue;
        bool linked = false;
        for (Var u : pt.subtree(i)) linked = linked || p.find(a, u) >= 0;
        if (linked) expected.push_back(a);
      }
      EXPECT_EQ(separator(pt, i), expected);
    }
  }
}

TEST(OrientDag, SingletonScope) {
  const auto p = testing::chain3();
  const auto dag = orient_dag(p, {2}, 2);
  EXPECT_TRUE(dag.precursors[2].empty());
  EXPECT_TRUE(dag.successors[2].empty());
  EXPECT_EQ(dag.variables, (std::vector<Var>{2}));
}

TEST(OrientDag, ChainTowardTarget) {
  const auto dag = orient_dag(testing::chain3(), {0, 1, 2}, 2);
  EXPECT_EQ(dag.successors[0], (std::vector<Var>{1}));
  EXPECT_EQ(dag.successors[1], (std::vector<Var>{2}));
  EXPECT_TRUE(dag.successors[2].empty());
  EXPECT_EQ(dag.precursors[2], (std::vector<Var>{1}));
}

TEST(OrientDag, TargetMustBeUnassigned) {
  EXPECT_THROW(orient_dag(testing::chain3(), {0, 1}, 2), InputError);
}

// Kahn's algorithm over the variable-level DAG.
bool target_is_unique_sink(const DagOrientation& dag) {
  std::map<Var, int> indeg;
  for (Var v : dag.variables) indeg[v] = static_cast<int>(dag.precursors[v].size());
  std::vector<Var> ready;
  for (auto [v, d] : indeg)
    if (d == 0) ready.push_back(v);
  std::size_t seen = 0;
  while (!ready.empty()) {
    const Var v = ready.back();
    ready.pop_back();
    ++seen;
    for (Var s : dag.successors[v])
      if (--indeg[s] == 0) ready.push_back(s);
  }
  if (seen != dag.variables.size()) return false;
  for (Var v : dag.variables)
    if (dag.successors[v].empty() != (v == dag.target)) return false;
  return true;
}

TEST(OrientDag, AcyclicWithUniqueSinkAndEdgeSplit) {
  std::mt19937_64 rng(4);
  for (int s = 0; s < 60; ++s) {
    const auto p = gen_random(14, 2, 0.3, 2000 + s);
    std::vector<Var> unassigned;
    for (Var v = 0; v < 14; ++v)
      if (std::bernoulli_distribution(0.7)(rng)) unassigned.push_back(v);
    if (unassigned.empty()) continue;
    const Var target = unassigned[rng() % unassigned.size()];
    const auto dag = orient_dag(p, unassigned, target);
    EXPECT_TRUE(target_is_unique_sink(dag));
    for (const auto& t : p.constraints()) {
      if (!dag.contains(t.i) || !dag.contains(t.j)) continue;
      const bool ij = std::count(dag.successors[t.i].begin(), dag.successors[t.i].end(), t.j) == 1;
      const bool ji = std::count(dag.successors[t.j].begin(), dag.successors[t.j].end(), t.i) == 1;
      EXPECT_NE(ij, ji);
    }
    for (Var v : dag.variables)
      for (Var s2 : dag.successors[v]) EXPECT_EQ(std::count(dag.precursors[s2].begin(), dag.precursors[s2].end(), v), 1);
  }
}

}  // namespace
}  // namespace dcop
