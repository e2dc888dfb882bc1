#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dcop/instance.hpp"
#include "dcop/pseudo_tree.hpp"

namespace dcop {

enum class NodeKind : std::uint8_t { Assignment = 0, Cost = 1, Function = 2 };

const char* to_string(NodeKind kind);

struct GraphNode {
  NodeKind kind = NodeKind::Assignment;
  Var owner = -1;
  // Assignment: <var, value>. Cost: var/value are the owner's side, partner/partner_value the other end.
  Var var = -1;
  Value value = -1;
  Var partner = -1;
  Value partner_value = -1;
  int constraint = -1;  // base table index (cost and function nodes)
  Cost cost = 0;
  bool unary = false;   // lifted from a constraint toward an assigned variable
};

/// Directed acyclic tripartite graph of a partially assigned instance with a single
/// target variable-assignment node.
///
/// Nodes are laid out agent by agent in ascending agent id: the agent's assignment
/// nodes, then per assigned neighbor its unary cost nodes and function node, then per
/// successor its binary cost nodes and function node. Node id order therefore equals
/// the order an agent can reproduce from its own local view.
struct TripartiteGraph {
  std::vector<GraphNode> nodes;
  std::vector<std::pair<int, int>> edges;
  int target_node = -1;
  std::vector<int> function_nodes;
  /// In-neighbors of each node, self included, ascending (CSR).
  std::vector<int> in_offsets;
  std::vector<int> in_sources;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int count(NodeKind kind) const;
  std::span<const int> in_neighbors(int node) const {
    return {in_sources.data() + in_offsets[node], in_sources.data() + in_offsets[node + 1]};
  }
  /// Node ids of <var, value>, -1 if absent.
  int assignment_node(Var var, Value value) const;
};

struct CompileOptions {
  /// Instantiate the whole table for constraints touching the target instead of only
  /// entries consistent with the target value.
  bool full_target_tables = false;
};

/// Compiles the unassigned scope (containing the target) under `gamma` into the
/// tripartite graph. `dag` must be orient_dag over exactly `scope` toward target_var.
TripartiteGraph compile(const ProblemInstance& p, const std::vector<Var>& scope, const PartialAssignment& gamma,
                        Var target_var, Value target_value, const DagOrientation& dag, const CompileOptions& options = {});

/// Convenience: orients the scope toward the target and compiles.
TripartiteGraph compile_query(const ProblemInstance& p, const std::vector<Var>& scope, const PartialAssignment& gamma,
                              Var target_var, Value target_value, const CompileOptions& options = {});

/// Component of unassigned variables containing `target` and all assigned neighbors of
/// that component, read from a dense assignment (kUnassigned marks free variables).
struct QueryScope {
  std::vector<Var> scope;
  PartialAssignment gamma;
};
QueryScope query_scope(const ProblemInstance& p, const Assignment& partial, Var target);

template <typename Scalar>
using FeatureMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, 4, Eigen::RowMajor>;

/// One-hot kind (assignment, cost, function) followed by the raw cost for cost nodes.
template <typename Scalar>
FeatureMatrix<Scalar> initial_features(const TripartiteGraph& g, bool normalize_costs = false) {
  FeatureMatrix<Scalar> h = FeatureMatrix<Scalar>::Zero(g.num_nodes(), 4);
  for (int v = 0; v < g.num_nodes(); ++v) {
    const auto& node = g.nodes[v];
    h(v, static_cast<int>(node.kind)) = Scalar(1);
    if (node.kind == NodeKind::Cost) {
      h(v, 3) = normalize_costs ? Scalar(node.cost) / Scalar(100) : Scalar(node.cost);
    }
  }
  return h;
}

struct SizeBounds {
  long long assignment_nodes = 0;
  long long function_nodes = 0;
  long long cost_nodes = 0;
};

/// Exact node counts for a complete constraint graph on n variables with domain size d,
/// no assigned variables and a clamped target.
SizeBounds size_bounds(long long n, long long d);

/// Topological order of all nodes, or nullopt if a directed cycle exists.
std::optional<std::vector<int>> topological_order(const TripartiteGraph& g);

/// Line-oriented dump: `node <id> <kind> <payload>` then `edge <src> <dst>`.
std::string export_text(const TripartiteGraph& g);

}  // namespace dcop
