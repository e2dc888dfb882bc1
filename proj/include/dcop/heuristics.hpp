#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dcop/cost_model.hpp"
#include "dcop/exact.hpp"
#include "dcop/instance.hpp"

namespace dcop {

struct AnytimePoint {
  int iteration = 0;
  double elapsed_ms = 0;
  Cost best = 0;
};

struct AnytimeTrace {
  std::string algorithm;
  std::vector<AnytimePoint> points;  // points[0] is the initial assignment
  Assignment best_assignment;
  std::size_t skipped = 0;           // DLNS iterations whose repair hit a resource cap

  Cost best() const { return points.back().best; }
};

Assignment random_assignment(const ProblemInstance& p, std::uint64_t seed);

/// Synchronous DSA: each agent best-responds to its neighbors' previous values and moves
/// with probability `prob` when that strictly lowers its local cost.
AnytimeTrace dsa(const ProblemInstance& p, double prob, int iterations, std::uint64_t seed);

/// GDBA with multiplicative per-entry modifiers, the non-minimum violation test and,
/// at quasi-local minima, increases over the whole table of each violated constraint. Agents move when their
/// improvement in effective cost is positive and the largest in their neighborhood
/// (lower index wins ties). The trace records unmodified costs.
AnytimeTrace gdba(const ProblemInstance& p, int iterations, std::uint64_t seed);

/// Repair operator: new values for every destroyed variable given the frozen rest.
using Repair = std::function<Assignment(const ProblemInstance&, const std::vector<Var>& destroyed, const Assignment&)>;

/// Constraint indices of a BFS spanning forest of the subgraph induced by `vars`
/// (roots and neighbor order ascending).
std::vector<int> spanning_tree_tables(const ProblemInstance& p, const std::vector<Var>& vars);

/// Solves the spanning-tree relaxation of each destroyed component exactly.
Assignment repair_tree_dpop(const ProblemInstance& p, const std::vector<Var>& destroyed, const Assignment& current);

/// Assigns destroyed variables one by one in pseudo-tree preorder of their component,
/// each to the value whose predicted completion cost is smallest (lowest value on ties).
Assignment repair_greedy_model(const ProblemInstance& p, const std::vector<Var>& destroyed, const Assignment& current,
                               CostModel& model);

/// Each iteration destroys every variable independently with `destroy_prob`, repairs,
/// and keeps the candidate only if the global cost strictly drops.
AnytimeTrace dlns(const ProblemInstance& p, double destroy_prob, int iterations, const Repair& repair,
                  std::uint64_t seed, const std::string& name = "dlns");

enum class ValueOrdering { Alphabetic, Model };

struct BnbResult {
  Cost cost = 0;
  Assignment assignment;
  std::size_t nodes = 0;  // value assignments tried
};

/// Depth-first branch and bound over the pseudo-forest preorder; a branch is pruned when
/// the cost of its fully instantiated constraints reaches the incumbent. With
/// ValueOrdering::Model, variables at pseudo-tree depth < `model_depth` try values in
/// ascending predicted cost. Throws ResourceError after `max_nodes` nodes.
BnbResult branch_and_bound(const ProblemInstance& p, ValueOrdering ordering, CostModel* model = nullptr,
                           int model_depth = 3, std::size_t max_nodes = 50'000'000);

std::vector<double> normalized_anytime_cost(const AnytimeTrace& trace, int constraints);

/// Rows: algorithm,instance_id,seed,iteration,elapsed_ms,best_cost,normalized_cost
std::string anytime_csv_header();
std::string anytime_csv(const AnytimeTrace& trace, const std::string& instance_id, std::uint64_t seed, int constraints);

}  // namespace dcop
