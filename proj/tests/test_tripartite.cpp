#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "dcop/errors.hpp"
#include "dcop/generators.hpp"
#include "dcop/tripartite.hpp"
#include "support/helpers.hpp"

namespace dcop {
namespace {

std::vector<int> out_degree(const TripartiteGraph& g) {
  std::vector<int> deg(g.num_nodes(), 0);
  for (const auto& [s, d] : g.edges) ++deg[s];
  return deg;
}

TEST(Compile, SmallestGraph) {
  ProblemInstance p({3, 3});
  p.add_constraint(0, 1, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  const auto g = compile_query(p, {0}, {{1, 2}}, 0, 1);
  EXPECT_EQ(g.count(NodeKind::Assignment), 1);
  EXPECT_EQ(g.count(NodeKind::Cost), 1);
  EXPECT_EQ(g.count(NodeKind::Function), 1);
  EXPECT_EQ(g.edges.size(), 2U);
  EXPECT_EQ(g.nodes[g.target_node].value, 1);
  // f_01(1, 2) = 6
  for (const auto& n : g.nodes)
    if (n.kind == NodeKind::Cost) {
      EXPECT_EQ(n.cost, 6);
    }
}

// Counting oracle: enumerate all value pairs per constraint, keeping only the target value
// for the target variable.
SizeBounds count_by_enumeration(const ProblemInstance& p, Var target) {
  SizeBounds b;
  for (Var v = 0; v < p.num_agents(); ++v) b.assignment_nodes += v == target ? 1 : p.domain_size(v);
  for (const auto& t : p.constraints()) {
    ++b.function_nodes;
    for (Value x = 0; x < t.rows; ++x)
      for (Value y = 0; y < t.cols; ++y)
        if ((t.i != target || x == 0) && (t.j != target || y == 0)) ++b.cost_nodes;
  }
  return b;
}

TEST(Compile, CompleteGraphCounts) {
  const auto p = gen_random(4, 2, 1.0, 3);
  const auto g = compile_query(p, {0, 1, 2, 3}, {}, 2, 0);
  const auto oracle = count_by_enumeration(p, 2);
  EXPECT_EQ(oracle.assignment_nodes, 7);
  EXPECT_EQ(oracle.function_nodes, 6);
  EXPECT_EQ(oracle.cost_nodes, 18);
  EXPECT_EQ(g.count(NodeKind::Assignment), 7);
  EXPECT_EQ(g.count(NodeKind::Function), 6);
  EXPECT_EQ(g.count(NodeKind::Cost), 18);
  const auto bounds = size_bounds(4, 2);
  EXPECT_EQ(bounds.assignment_nodes, 7);
  EXPECT_EQ(bounds.function_nodes, 6);
  EXPECT_EQ(bounds.cost_nodes, 18);
}

TEST(SizeBounds, SmallAndMonotone) {
  const auto one = size_bounds(1, 5);
  EXPECT_EQ(one.assignment_nodes, 1);
  EXPECT_EQ(one.function_nodes, 0);
  EXPECT_EQ(one.cost_nodes, 0);
  for (int n = 1; n < 20; ++n)
    for (int d = 1; d < 8; ++d) {
      const auto a = size_bounds(n, d);
      const auto bn = size_bounds(n + 1, d);
      const auto bd = size_bounds(n, d + 1);
      EXPECT_LE(a.assignment_nodes, bn.assignment_nodes);
      EXPECT_LE(a.cost_nodes, bn.cost_nodes);
      EXPECT_LE(a.function_nodes, bn.function_nodes);
      EXPECT_LE(a.assignment_nodes, bd.assignment_nodes);
      EXPECT_LE(a.cost_nodes, bd.cost_nodes);
    }
}

TEST(Compile, FullTargetTablesOption) {
  const auto p = gen_random(4, 2, 1.0, 3);
  const auto g = compile_query(p, {0, 1, 2, 3}, {}, 2, 0, {.full_target_tables = true});
  EXPECT_EQ(g.count(NodeKind::Cost), 24);
  EXPECT_TRUE(topological_order(g).has_value());
}

TEST(Compile, StructuralInvariantsOnRandomQueries) {
  std::mt19937_64 rng(5);
  for (int s = 0; s < 80; ++s) {
    const auto p = s % 2 ? gen_random(12, 3, 0.3, s) : gen_scale_free(12, 3, 3, 2, s);
    Assignment partial(p.num_agents(), kUnassigned);
    for (Var v = 0; v < p.num_agents(); ++v)
      if (std::bernoulli_distribution(0.35)(rng)) partial[v] = static_cast<Value>(rng() % 3);
    Var target = static_cast<Var>(rng() % 12);
    partial[target] = kUnassigned;
    const auto q = query_scope(p, partial, target);
    const auto g = compile_query(p, q.scope, q.gamma, target, 1);

    ASSERT_TRUE(topological_order(g).has_value());
    const auto out = out_degree(g);
    EXPECT_EQ(out[g.target_node], 0);
    for (int f : g.function_nodes) EXPECT_EQ(out[f], 0);
    // Cost nodes: one edge to the function node, at most one to an assignment node.
    std::vector<int> to_function(g.num_nodes(), 0), to_assignment(g.num_nodes(), 0);
    for (const auto& [a, b] : g.edges) {
      if (g.nodes[a].kind != NodeKind::Cost) continue;
      (g.nodes[b].kind == NodeKind::Function ? to_function : to_assignment)[a]++;
    }
    for (int v = 0; v < g.num_nodes(); ++v) {
      if (g.nodes[v].kind != NodeKind::Cost) continue;
      EXPECT_EQ(to_function[v], 1);
      EXPECT_LE(to_assignment[v], 1);
    }
    // Reachability to the target for assignment and binary cost nodes.
    std::vector<std::vector<int>> rev(g.num_nodes());
    for (const auto& [a, b] : g.edges) rev[b].push_back(a);
    std::vector<char> reach(g.num_nodes(), 0);
    std::vector<int> stack{g.target_node};
    reach[g.target_node] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int u : rev[v])
        if (!reach[u]) reach[u] = 1, stack.push_back(u);
    }
    for (int v = 0; v < g.num_nodes(); ++v) {
      const auto& n = g.nodes[v];
      if (n.kind == NodeKind::Assignment || (n.kind == NodeKind::Cost && !n.unary && n.partner_value >= 0)) {
        if (n.kind == NodeKind::Cost && n.partner == target && n.partner_value != 1) continue;
        EXPECT_TRUE(reach[v]) << "node " << v;
      }
    }
    // Owners: an agent owns binary cost nodes only toward its successors.
    const auto dag = orient_dag(p, q.scope, target);
    for (const auto& n : g.nodes) {
      EXPECT_TRUE(dag.contains(n.owner));
      if (n.kind == NodeKind::Cost && !n.unary) {
        EXPECT_EQ(std::count(dag.successors[n.owner].begin(), dag.successors[n.owner].end(), n.partner), 1);
      }
    }
    // Node ids grouped by ascending owner.
    for (int v = 1; v < g.num_nodes(); ++v) EXPECT_LE(g.nodes[v - 1].owner, g.nodes[v].owner);
  }
}

TEST(Compile, RelabelingGivesIsomorphicCounts) {
  const auto p = gen_random(8, 3, 0.5, 21);
  std::vector<Var> perm{3, 7, 0, 5, 1, 6, 2, 4};
  ProblemInstance q(std::vector<int>(8, 3));
  for (const auto& t : p.constraints()) q.add_constraint(perm[t.i], perm[t.j], t.costs);
  const Assignment none(8, kUnassigned);
  const auto s1 = query_scope(p, none, 0);
  const auto s2 = query_scope(q, none, perm[0]);
  const auto g1 = compile_query(p, s1.scope, s1.gamma, 0, 2);
  const auto g2 = compile_query(q, s2.scope, s2.gamma, perm[0], 2);
  EXPECT_EQ(g1.num_nodes(), g2.num_nodes());
  EXPECT_EQ(g1.edges.size(), g2.edges.size());
  auto costs = [](const TripartiteGraph& g) {
    std::vector<Cost> c;
    for (const auto& n : g.nodes)
      if (n.kind == NodeKind::Cost) c.push_back(n.cost);
    std::sort(c.begin(), c.end());
    return c;
  };
  EXPECT_EQ(costs(g1), costs(g2));
}

TEST(Compile, RejectsMismatchedOrientation) {
  const auto p = testing::chain3();
  const auto dag = orient_dag(p, {0, 1, 2}, 2);
  EXPECT_THROW(compile(p, {0, 1}, {{2, 0}}, 1, 0, dag), InputError);
  EXPECT_THROW(compile(p, {0, 1, 2}, {}, 0, 0, dag), InputError);
  EXPECT_THROW(compile_query(p, {0, 1}, {}, 1, 0), InputError);  // x2 neither in scope nor assigned
}

TEST(Features, OneHotAndCost) {
  ProblemInstance p({2, 2});
  p.add_constraint(0, 1, {57, 57, 57, 57});
  const auto g = compile_query(p, {0, 1}, {}, 1, 0);
  const auto h = initial_features<double>(g);
  ASSERT_EQ(h.rows(), g.num_nodes());
  for (int v = 0; v < g.num_nodes(); ++v) {
    EXPECT_DOUBLE_EQ(h.row(v).head(3).sum(), 1.0);
    switch (g.nodes[v].kind) {
      case NodeKind::Function: EXPECT_EQ(h.row(v), (Eigen::RowVector4d(0, 0, 1, 0))); break;
      case NodeKind::Cost: EXPECT_EQ(h.row(v), (Eigen::RowVector4d(0, 1, 0, 57))); break;
      case NodeKind::Assignment: EXPECT_EQ(h.row(v), (Eigen::RowVector4d(1, 0, 0, 0))); break;
    }
  }
  const auto hn = initial_features<double>(g, true);
  for (int v = 0; v < g.num_nodes(); ++v)
    if (g.nodes[v].kind == NodeKind::Cost) {
      EXPECT_DOUBLE_EQ(hn(v, 3), 0.57);
    }
}

TEST(Export, GoldenChain) {
  const auto p = testing::chain3();
  const auto g = compile_query(p, {1, 2}, {{0, 1}}, 2, 0);
  const std::string expected =
      "node 0 assignment x1=0\n"
      "node 1 assignment x1=1\n"
      "node 2 cost f1,0(0,1)=3 unary\n"
      "node 3 cost f1,0(1,1)=4 unary\n"
      "node 4 function f1,0 unary\n"
      "node 5 cost f1,2(0,0)=5\n"
      "node 6 cost f1,2(1,0)=7\n"
      "node 7 function f1,2\n"
      "node 8 assignment x2=0 target\n"
      "edge 2 0\n"
      "edge 2 4\n"
      "edge 3 1\n"
      "edge 3 4\n"
      "edge 0 5\n"
      "edge 5 7\n"
      "edge 1 6\n"
      "edge 6 7\n"
      "edge 5 8\n"
      "edge 6 8\n";
  EXPECT_EQ(export_text(g), expected);
}

}  // namespace
}  // namespace dcop
