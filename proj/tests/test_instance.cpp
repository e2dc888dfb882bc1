#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "dcop/errors.hpp"
#include "dcop/generators.hpp"
#include "dcop/instance_io.hpp"
#include "support/helpers.hpp"

namespace dcop {
namespace {

TEST(TotalCost, EmptyInstanceCostsNothing) {
  ProblemInstance p({3, 3, 3});
  EXPECT_EQ(total_cost(p, {0, 2, 1}), 0);
}

TEST(TotalCost, SingleTable) {
  ProblemInstance p({2, 2});
  p.add_constraint(0, 1, {0, 7, 0, 0});
  EXPECT_EQ(total_cost(p, {0, 1}), 7);
}

TEST(TotalCost, MatchesIndependentResummation) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = gen_random(12, 4, 0.4, 100 + trial);
    const auto a = testing::random_assignment(p, rng);
    Cost expected = 0;
    for (Var i = 0; i < p.num_agents(); ++i)
      for (Var j = i + 1; j < p.num_agents(); ++j)
        if (p.find(i, j) >= 0) expected += p.cost(j, a[j], i, a[i]);
    EXPECT_EQ(total_cost(p, a), expected);
  }
}

TEST(TotalCost, RejectsUnassignedAndOutOfRange) {
  const auto p = testing::chain3();
  EXPECT_THROW(total_cost(p, {0, kUnassigned, 1}), InputError);
  EXPECT_THROW(total_cost(p, {0, 2, 1}), InputError);
  EXPECT_THROW(total_cost(p, {0, 1}), InputError);
}

TEST(TotalCost, PermutationCovariant) {
  std::mt19937_64 rng(9);
  const auto p = gen_random(9, 3, 0.5, 5);
  std::vector<Var> perm(p.num_agents());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  ProblemInstance q(std::vector<int>(p.num_agents(), 3));
  for (const auto& t : p.constraints()) q.add_constraint(perm[t.i], perm[t.j], t.costs);
  const auto a = testing::random_assignment(p, rng);
  Assignment b(a.size());
  for (Var v = 0; v < p.num_agents(); ++v) b[perm[v]] = a[v];
  EXPECT_EQ(total_cost(p, a), total_cost(q, b));
}

TEST(Instance, SymmetricAccessor) {
  const auto p = gen_random(8, 3, 0.6, 11);
  for (const auto& t : p.constraints())
    for (Value a = 0; a < 3; ++a)
      for (Value b = 0; b < 3; ++b) EXPECT_EQ(p.cost(t.i, a, t.j, b), p.cost(t.j, b, t.i, a));
}

TEST(Instance, StoresReversedPairTransposed) {
  ProblemInstance p({2, 3});
  p.add_constraint(1, 0, {1, 2, 3, 4, 5, 6});  // rows over D_1 (3), cols over D_0 (2)
  EXPECT_EQ(p.constraint(0).i, 0);
  EXPECT_EQ(p.cost(1, 2, 0, 1), 6);
  EXPECT_EQ(p.cost(0, 1, 1, 2), 6);
}

TEST(Instance, RejectsInvalidTables) {
  ProblemInstance p({2, 2});
  EXPECT_THROW(p.add_constraint(0, 0, {1, 2, 3, 4}), InputError);
  EXPECT_THROW(p.add_constraint(0, 1, {1, 2, 3}), InputError);
  EXPECT_THROW(p.add_constraint(0, 1, {1, 2, 3, -4}), InputError);
  p.add_constraint(0, 1, {1, 2, 3, 4});
  EXPECT_THROW(p.add_constraint(1, 0, {1, 2, 3, 4}), InputError);
}

TEST(LocalCost, IsolatedVariable) {
  ProblemInstance p({3});
  EXPECT_EQ(local_cost(p, 0, 2, PartialAssignment{}), 0);
}

TEST(LocalCost, OneNeighbor) {
  ProblemInstance p({4, 4});
  std::vector<Cost> t(16, 0);
  t[2 * 4 + 3] = 40;
  p.add_constraint(0, 1, t);
  EXPECT_EQ(local_cost(p, 0, 2, PartialAssignment{{1, 3}}), 40);
  EXPECT_THROW(local_cost(p, 0, 2, PartialAssignment{}), InputError);
}

TEST(LocalCost, StarSumsAreColumnSums) {
  // Center 0 with leaves 1..4; summing local_cost over the center's values gives the
  // column sums of each table at the leaves' values.
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<Cost> cost(0, 100);
  ProblemInstance p({3, 3, 3, 3, 3});
  for (Var leaf = 1; leaf <= 4; ++leaf) {
    std::vector<Cost> t(9);
    for (auto& c : t) c = cost(rng);
    p.add_constraint(0, leaf, t);
  }
  const Assignment a{0, 2, 0, 1, 2};
  Cost via_local = 0;
  for (Value d = 0; d < 3; ++d) via_local += local_cost(p, 0, d, a);
  Cost column_sums = 0;
  for (const auto& t : p.constraints())
    for (Value d = 0; d < 3; ++d) column_sums += t.costs[d * 3 + a[t.j]];
  EXPECT_EQ(via_local, column_sums);
}

TEST(Generators, CompleteRandomGraph) {
  EXPECT_EQ(gen_random(4, 3, 1.0, 1).num_constraints(), 6);
}

TEST(Generators, Deterministic) {
  EXPECT_TRUE(gen_random(20, 5, 0.3, 42).same_problem(gen_random(20, 5, 0.3, 42)));
  EXPECT_TRUE(gen_scale_free(30, 3, 5, 2, 42).same_problem(gen_scale_free(30, 3, 5, 2, 42)));
  EXPECT_TRUE(gen_grid(4, 5, 3, 42).same_problem(gen_grid(4, 5, 3, 42)));
  EXPECT_TRUE(gen_wgc(20, 3, 0.3, 42).same_problem(gen_wgc(20, 3, 0.3, 42)));
  EXPECT_FALSE(gen_random(20, 5, 0.3, 42).same_problem(gen_random(20, 5, 0.3, 43)));
}

TEST(Generators, CostsInRange) {
  for (const auto& p : {gen_random(15, 4, 0.5, 2), gen_scale_free(15, 4, 4, 2, 2), gen_grid(3, 5, 4, 2)})
    for (const auto& t : p.constraints())
      for (Cost c : t.costs) {
        EXPECT_GE(c, 0);
        EXPECT_LE(c, kMaxCost);
      }
}

TEST(Generators, RandomDensityBinomial) {
  // 1000 seeds, n=30, p1=0.2: mean edge count within 3 sigma of the binomial mean.
  const int pairs = 30 * 29 / 2;
  const double mean_expected = 0.2 * pairs;
  const double sigma_of_mean = std::sqrt(pairs * 0.2 * 0.8 / 1000.0);
  double total = 0;
  for (int s = 0; s < 1000; ++s) total += gen_random(30, 1, 0.2, s).num_constraints();
  EXPECT_NEAR(total / 1000.0, mean_expected, 3 * sigma_of_mean);
}

TEST(Generators, ScaleFreeCounts) {
  EXPECT_EQ(gen_scale_free(5, 3, 5, 2, 1).num_constraints(), 10);
  EXPECT_EQ(gen_scale_free(10, 3, 5, 3, 1).num_constraints(), 25);
  EXPECT_THROW(gen_scale_free(4, 3, 5, 2, 1), InputError);
  EXPECT_EQ(gen_scale_free(6, 2, 1, 1, 1).num_constraints(), 5);
}

TEST(Generators, ScaleFreeDegreeRightSkewed) {
  int skewed = 0;
  for (int s = 0; s < 100; ++s) {
    const auto p = gen_scale_free(100, 2, 3, 2, s);
    int max_degree = 0;
    for (Var v = 0; v < 100; ++v) max_degree = std::max(max_degree, p.degree(v));
    const double mean_degree = 2.0 * p.num_constraints() / 100.0;
    skewed += max_degree > 2 * mean_degree ? 1 : 0;
  }
  EXPECT_EQ(skewed, 100);
}

TEST(Generators, GridCounts) {
  EXPECT_EQ(gen_grid(3, 3, 2, 1).num_constraints(), 12);
  EXPECT_EQ(gen_grid(1, 1, 2, 1).num_constraints(), 0);
  EXPECT_EQ(gen_grid(4, 4, 2, 1).num_constraints(), 24);
}

TEST(Generators, WeightedColoringTables) {
  const auto p = gen_wgc(15, 3, 0.5, 8);
  for (const auto& t : p.constraints())
    for (Value a = 0; a < 3; ++a)
      for (Value b = 0; b < 3; ++b)
        if (a != b) {
          EXPECT_EQ(t.at(a, b), 0);
        }
  const auto q = gen_wgc(10, 1, 0.5, 8);
  Cost weights = 0;
  for (const auto& t : q.constraints()) weights += t.at(0, 0);
  EXPECT_EQ(total_cost(q, Assignment(10, 0)), weights);
}

TEST(Generators, RejectsBadParameters) {
  EXPECT_THROW(gen_random(0, 3, 0.5, 1), InputError);
  EXPECT_THROW(gen_random(5, 3, 0.0, 1), InputError);
  EXPECT_THROW(gen_random(5, 0, 0.5, 1), InputError);
  EXPECT_THROW(gen_grid(0, 3, 2, 1), InputError);
}

TEST(InstanceIo, RoundTripProperty) {
  for (int s = 0; s < 20; ++s) {
    const auto p = s % 2 ? gen_scale_free(12, 1 + s % 4, 3, 2, s) : gen_random(9, 1 + s % 5, 0.4, s);
    const auto q = parse_instance(serialize(p));
    EXPECT_TRUE(p.same_problem(q));
    EXPECT_EQ(p.meta(), q.meta());
  }
}

TEST(InstanceIo, HandWrittenDocument) {
  const auto p = parse_instance(R"({"version": 1, "num_agents": 2, "domains": [2, 3],
      "constraints": [{"i": 0, "j": 1, "costs": [1, 2, 3, 4, 5, 6]}], "meta": {"name": "tiny"}})");
  ASSERT_EQ(p.num_constraints(), 1);
  EXPECT_EQ(p.cost(0, 1, 1, 0), 4);
  EXPECT_EQ(p.cost(1, 2, 0, 0), 3);
  EXPECT_EQ(p.meta()["name"], "tiny");
}

TEST(InstanceIo, ReportsLocation) {
  try {
    parse_instance(R"({"version": 1, "num_agents": 2, "domains": [2, 2],
        "constraints": [{"i": 0, "j": 1, "costs": [1, 2, 3]}]})");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("$.constraints[0].costs"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_instance(R"({"version": 1, "num_agents": 2, "domains": [2, 2],
      "constraints": [{"i": 1, "j": 0, "costs": [1, 2, 3, 4]}]})"), ParseError);
  EXPECT_THROW(parse_instance(R"({"version": 2, "num_agents": 0, "domains": [], "constraints": []})"), ParseError);
  EXPECT_THROW(parse_instance("{not json"), ParseError);
}

}  // namespace
}  // namespace dcop
