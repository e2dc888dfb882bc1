#include <random>

#include <gtest/gtest.h>

#include "dcop/errors.hpp"
#include "dcop/exact.hpp"
#include "dcop/generators.hpp"
#include "support/helpers.hpp"

namespace dcop {
namespace {

PartialAssignment random_context(const ProblemInstance& p, const std::vector<Var>& vars, std::mt19937_64& rng) {
  PartialAssignment g;
  for (Var v : vars) g[v] = std::uniform_int_distribution<int>(0, p.domain_size(v) - 1)(rng);
  return g;
}

TEST(Reduce, LeafCostIsSumOfSeparatorTables) {
  const auto p = testing::triangle();
  const auto pt = build_pseudo_tree(p, 0);
  const PartialAssignment gamma{{0, 1}, {1, 0}};
  const auto sp = reduce(p, pt, gamma, 2, 1);
  EXPECT_EQ(sp.variables, (std::vector<Var>{2}));
  EXPECT_TRUE(sp.tables.empty());
  const Cost expected = p.cost(2, 1, 0, 1) + p.cost(2, 1, 1, 0);
  EXPECT_EQ(dpop(sp).cost, expected);
  EXPECT_EQ(brute_force(sp).cost, expected);
}

TEST(Reduce, RootWithEmptyContextCoversComponent) {
  const auto p = gen_random(8, 3, 0.5, 3);
  const auto pt = build_pseudo_tree(p, 0);
  const auto sp = reduce(p, pt, {}, 0, 2);
  EXPECT_EQ(static_cast<int>(sp.variables.size()), pt.num_vars());
  EXPECT_EQ(sp.clamps.at(0), 2);
  for (const auto& u : sp.unaries)
    for (Cost c : u) EXPECT_EQ(c, 0);
}

TEST(Reduce, InducedUnariesEqualTableLookups) {
  std::mt19937_64 rng(12);
  for (int s = 0; s < 30; ++s) {
    const auto p = gen_random(10, 3, 0.4, 300 + s);
    const auto pt = build_pseudo_forest(p);
    for (Var i : pt.dfs_order) {
      const auto sep = separator(pt, i);
      const auto gamma = random_context(p, sep, rng);
      const auto sp = reduce(p, pt, gamma, i, 0);
      for (std::size_t k = 0; k < sp.variables.size(); ++k) {
        const Var j = sp.variables[k];
        for (Value d = 0; d < p.domain_size(j); ++d) {
          Cost expected = 0;
          for (const auto& [a, va] : gamma)
            if (p.find(j, a) >= 0) expected += p.cost(j, d, a, va);
          EXPECT_EQ(sp.unaries[k][d], expected);
        }
      }
    }
  }
}

TEST(Reduce, RejectsIncompleteContext) {
  const auto p = testing::triangle();
  const auto pt = build_pseudo_tree(p, 0);
  EXPECT_THROW(reduce(p, pt, {{0, 1}}, 2, 0), InputError);
  EXPECT_THROW(reduce(p, pt, {{0, 1}, {1, 1}}, 2, 5), InputError);
}

TEST(BruteForce, ZeroAndOneFreeVariable) {
  ProblemInstance p({3, 3});
  p.add_constraint(0, 1, {5, 1, 9, 2, 8, 3, 7, 7, 0});
  auto clamped = make_subproblem(p, {0, 1}, {}, {{0, 1}, {1, 2}});
  EXPECT_EQ(brute_force(clamped).cost, 3);
  auto one_free = make_subproblem(p, {0, 1}, {}, {{0, 2}});
  EXPECT_EQ(brute_force(one_free).cost, 0);
  EXPECT_EQ(brute_force(one_free).assignment.at(1), 2);
}

TEST(BruteForce, CapRaisesResourceError) {
  const auto p = gen_random(10, 5, 0.3, 1);
  const auto sp = make_subproblem(p, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, {});
  EXPECT_THROW(brute_force(sp, {.max_enumeration = 1000}), ResourceError);
  EXPECT_THROW(dpop(make_subproblem(gen_random(10, 5, 1.0, 1), {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, {}),
                    {.max_table = 100}),
               ResourceError);
}

TEST(Dpop, SingleAndPair) {
  ProblemInstance p({3, 2});
  p.add_constraint(0, 1, {4, 9, 6, 1, 8, 5});
  auto single = make_subproblem(p, {0}, {kUnassigned, 1});
  EXPECT_EQ(dpop(single).cost, 1);
  auto pair = make_subproblem(p, {0, 1}, {});
  EXPECT_EQ(dpop(pair).cost, 1);
  EXPECT_EQ(dpop(pair).assignment, (PartialAssignment{{0, 1}, {1, 1}}));
}

TEST(Dpop, AgreesWithBruteForceAndReevaluates) {
  std::mt19937_64 rng(77);
  int checked = 0;
  for (int s = 0; s < 200; ++s) {
    const int n = 2 + s % 7;
    const int d = 2 + s % 3;
    const auto p = s % 3 == 0 ? gen_scale_free(n, d, std::min(n, 3), 1, s) : gen_random(n, d, 0.3 + 0.1 * (s % 7), s);
    const auto pt = build_pseudo_forest(p);
    const Var i = pt.dfs_order[rng() % pt.dfs_order.size()];
    const auto gamma = random_context(p, separator(pt, i), rng);
    const auto sp = reduce(p, pt, gamma, i, static_cast<Value>(rng() % d));
    const auto a = dpop(sp);
    const auto b = brute_force(sp);
    EXPECT_EQ(a.cost, b.cost);
    EXPECT_EQ(evaluate(sp, a.assignment), a.cost);
    ++checked;
  }
  EXPECT_EQ(checked, 200);
}

TEST(Dpop, HandlesDisconnectedVariableSets) {
  const auto p = gen_random(8, 3, 0.2, 5);
  const auto sp = make_subproblem(p, {0, 1, 2, 3, 4, 5, 6, 7}, {});
  EXPECT_EQ(dpop(sp).cost, brute_force(sp).cost);
}

TEST(Dpop, RespectsTableSubset) {
  const auto p = gen_random(6, 3, 1.0, 9);
  const std::vector<int> tables{0, 3};
  const auto sp = make_subproblem(p, {0, 1, 2, 3, 4, 5}, {}, {}, &tables);
  EXPECT_EQ(sp.tables, tables);
  EXPECT_EQ(dpop(sp).cost, brute_force(sp).cost);
}

}  // namespace
}  // namespace dcop

namespace dcop {
namespace {

bool bipartite(const ProblemInstance& p) {
  std::vector<int> side(p.num_agents(), -1);
  for (Var s = 0; s < p.num_agents(); ++s) {
    if (side[s] >= 0) continue;
    side[s] = 0;
    std::vector<Var> stack{s};
    while (!stack.empty()) {
      const Var v = stack.back();
      stack.pop_back();
      for (Var u : p.neighbors(v)) {
        if (side[u] < 0) {
          side[u] = 1 - side[v];
          stack.push_back(u);
        } else if (side[u] == side[v]) {
          return false;
        }
      }
    }
  }
  return true;
}

TEST(BruteForce, TwoColorableWeightedColoringIsFree) {
  int found = 0;
  for (int s = 0; found < 10 && s < 500; ++s) {
    const auto p = gen_wgc(7, 2, 0.35, s);
    if (!bipartite(p) || p.num_constraints() == 0) continue;
    ++found;
    const auto sp = make_subproblem(p, {0, 1, 2, 3, 4, 5, 6}, {});
    EXPECT_EQ(brute_force(sp).cost, 0);
  }
  EXPECT_EQ(found, 10);
}

}  // namespace
}  // namespace dcop
