#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace dcop {

using Var = int;
using Value = int;
using Cost = std::int64_t;

/// Sparse assignment: variable -> value index.
using PartialAssignment = std::map<Var, Value>;
/// Dense assignment indexed by variable; kUnassigned marks holes.
using Assignment = std::vector<Value>;

inline constexpr Value kUnassigned = -1;

/// Binary cost table stored once per unordered pair, keyed i < j, row-major |D_i| x |D_j|.
struct CostTable {
  Var i = 0;
  Var j = 0;
  int rows = 0;
  int cols = 0;
  std::vector<Cost> costs;

  Cost at(Value a, Value b) const { return costs[static_cast<std::size_t>(a) * cols + b]; }
  Cost min_entry() const;

  /// Cost with `var` taking `own` and the other endpoint taking `other`.
  Cost oriented(Var var, Value own, Value other) const { return var == i ? at(own, other) : at(other, own); }
  Var other(Var var) const { return var == i ? j : i; }

  bool operator==(const CostTable&) const = default;
};

/// A DCOP with one variable per agent and binary constraints.
///
/// Built incrementally through add_constraint, then shared read-only.
class ProblemInstance {
 public:
  ProblemInstance() = default;
  explicit ProblemInstance(std::vector<int> domains, nlohmann::json meta = nlohmann::json::object());

  /// Adds f_ij. `costs` is row-major |D_i| x |D_j| in the given orientation; stored transposed when i > j.
  void add_constraint(Var i, Var j, std::vector<Cost> costs);

  int num_agents() const { return static_cast<int>(domains_.size()); }
  int num_constraints() const { return static_cast<int>(tables_.size()); }
  int domain_size(Var v) const { return domains_[v]; }
  std::span<const int> domains() const { return domains_; }
  std::span<const CostTable> constraints() const { return tables_; }
  const CostTable& constraint(int index) const { return tables_[index]; }

  /// Neighbors in ascending order.
  std::span<const Var> neighbors(Var v) const { return adj_[v]; }
  /// Constraint indices parallel to neighbors(v).
  std::span<const int> incident(Var v) const { return adj_tables_[v]; }
  int degree(Var v) const { return static_cast<int>(adj_[v].size()); }

  /// Index of the table on {i, j}, or -1.
  int find(Var i, Var j) const;
  /// f_ij(a, b) regardless of storage orientation. Throws InputError if unconstrained.
  Cost cost(Var i, Value a, Var j, Value b) const;

  const nlohmann::json& meta() const { return meta_; }
  nlohmann::json& meta() { return meta_; }

  bool contains(Var v) const { return v >= 0 && v < num_agents(); }

  /// Structural equality: domains and tables; metadata ignored.
  bool same_problem(const ProblemInstance& other) const {
    return domains_ == other.domains_ && tables_ == other.tables_;
  }

 private:
  std::vector<int> domains_;
  std::vector<CostTable> tables_;
  std::vector<std::vector<Var>> adj_;
  std::vector<std::vector<int>> adj_tables_;
  nlohmann::json meta_ = nlohmann::json::object();
};

/// Sum of all constraint costs under a complete assignment.
Cost total_cost(const ProblemInstance& p, const Assignment& a);

/// Sum of x_i's constraint costs with x_i = value and neighbors read from `a`.
Cost local_cost(const ProblemInstance& p, Var i, Value value, const Assignment& a);
Cost local_cost(const ProblemInstance& p, Var i, Value value, const PartialAssignment& neighbor_values);

/// Variables grouped by connected component of the subgraph induced by `mask` (all when empty).
/// Components are ordered by their lowest member; members ascend.
std::vector<std::vector<Var>> connected_components(const ProblemInstance& p, const std::vector<char>& mask = {});

}  // namespace dcop
