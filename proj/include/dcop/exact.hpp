#pragma once

#include <vector>

#include "dcop/instance.hpp"
#include "dcop/pseudo_tree.hpp"

namespace dcop {

/// A set of free variables of a base instance, with some variables clamped and the
/// constraints toward fixed outside variables folded into unary cost vectors.
///
/// Constraints with both endpoints outside `variables` are not part of the subproblem.
struct Subproblem {
  const ProblemInstance* base = nullptr;
  std::vector<Var> variables;               // ascending
  PartialAssignment clamps;                 // subset of variables
  std::vector<std::vector<Cost>> unaries;   // parallel to variables
  std::vector<int> tables;                  // base constraint indices inside `variables`

  int local_index(Var v) const;
};

struct Solution {
  Cost cost = 0;
  PartialAssignment assignment;
};

/// Caps on the work an exact solve may do; exceeding one raises ResourceError.
struct ExactLimits {
  double max_enumeration = 1e7;  // brute force: product of free domain sizes
  double max_table = 1e7;        // DPOP: entries of the largest utility table
};

/// Subproblem rooted at x_i of `pt`: x_i and its descendants, with x_i clamped to d_i
/// and every constraint to a separator variable lifted into a unary through `gamma`.
/// `gamma` must assign exactly separator(pt, i).
Subproblem reduce(const ProblemInstance& p, const PseudoTree& pt, const PartialAssignment& gamma, Var i, Value d_i);

/// General construction used by the repair operators. Outside variables with a value in
/// `context` contribute unaries; unassigned outside neighbors are ignored. When
/// `tables` is null, all constraints among `variables` are kept.
Subproblem make_subproblem(const ProblemInstance& p, std::vector<Var> variables, const Assignment& context,
                           PartialAssignment clamps = {}, const std::vector<int>* tables = nullptr);

/// Objective of the subproblem under an assignment of all its variables.
Cost evaluate(const Subproblem& sp, const PartialAssignment& a);

Solution brute_force(const Subproblem& sp, const ExactLimits& limits = {});

/// Utility propagation up a pseudo forest of the subproblem's constraint graph, then
/// value propagation down. Ties resolve to the lowest value index.
Solution dpop(const Subproblem& sp, const ExactLimits& limits = {});

}  // namespace dcop
