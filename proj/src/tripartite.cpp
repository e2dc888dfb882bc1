#include "dcop/tripartite.hpp"

#include <algorithm>
#include <sstream>

#include "dcop/errors.hpp"

namespace dcop {

const char* to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Assignment: return "assignment";
    case NodeKind::Cost: return "cost";
    case NodeKind::Function: return "function";
  }
  return "?";
}

int TripartiteGraph::count(NodeKind kind) const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [&](const GraphNode& n) { return n.kind == kind; }));
}

int TripartiteGraph::assignment_node(Var var, Value value) const {
  for (int v = 0; v < num_nodes(); ++v) {
    const auto& n = nodes[v];
    if (n.kind == NodeKind::Assignment && n.var == var && n.value == value) return v;
  }
  return -1;
}

TripartiteGraph compile(const ProblemInstance& p, const std::vector<Var>& scope, const PartialAssignment& gamma,
                        Var target_var, Value target_value, const DagOrientation& dag, const CompileOptions& options) {
  std::vector<Var> sorted_scope = scope;
  std::sort(sorted_scope.begin(), sorted_scope.end());
  if (sorted_scope != dag.variables || dag.target != target_var) {
    throw InputError("orientation does not match scope and target");
  }
  if (target_value < 0 || target_value >= p.domain_size(target_var)) throw InputError("target value out of domain");
  for (const auto& [v, d] : gamma) {
    if (dag.contains(v)) throw InputError("assigned variable inside the scope");
    if (!p.contains(v) || d < 0 || d >= p.domain_size(v)) throw InputError("assigned value out of domain");
  }

  // Values with an assignment node, per scope variable.
  auto in_graph = [&](Var v, Value d) { return v != target_var || d == target_value; };
  auto tabled = [&](Var v, Value d) { return in_graph(v, d) || options.full_target_tables; };

  TripartiteGraph g;
  std::vector<std::vector<int>> assign_id(p.num_agents());
  auto add = [&](GraphNode n) {
    g.nodes.push_back(n);
    return static_cast<int>(g.nodes.size()) - 1;
  };

  for (Var a : sorted_scope) {
    assign_id[a].assign(p.domain_size(a), -1);
    for (Value d = 0; d < p.domain_size(a); ++d) {
      if (!in_graph(a, d)) continue;
      GraphNode n;
      n.kind = NodeKind::Assignment;
      n.owner = a;
      n.var = a;
      n.value = d;
      assign_id[a][d] = add(n);
    }
    const auto nbrs = p.neighbors(a);
    const auto tabs = p.incident(a);
    for (std::size_t e = 0; e < nbrs.size(); ++e) {
      const Var b = nbrs[e];
      if (dag.contains(b)) continue;
      auto it = gamma.find(b);
      if (it == gamma.end()) throw InputError("neighbor outside the scope without an assigned value");
      const auto& t = p.constraint(tabs[e]);
      std::vector<int> cost_ids;
      for (Value d = 0; d < p.domain_size(a); ++d) {
        if (!tabled(a, d)) continue;
        GraphNode n;
        n.kind = NodeKind::Cost;
        n.owner = a;
        n.var = a;
        n.value = d;
        n.partner = b;
        n.partner_value = it->second;
        n.constraint = tabs[e];
        n.cost = t.oriented(a, d, it->second);
        n.unary = true;
        cost_ids.push_back(add(n));
      }
      GraphNode f;
      f.kind = NodeKind::Function;
      f.owner = a;
      f.var = a;
      f.partner = b;
      f.constraint = tabs[e];
      f.unary = true;
      const int fid = add(f);
      g.function_nodes.push_back(fid);
      for (int c : cost_ids) {
        const Value d = g.nodes[c].value;
        if (in_graph(a, d)) g.edges.emplace_back(c, assign_id[a][d]);
        g.edges.emplace_back(c, fid);
      }
    }
    for (Var j : dag.successors[a]) {
      const int index = p.find(a, j);
      const auto& t = p.constraint(index);
      std::vector<int> cost_ids;
      for (Value da = 0; da < p.domain_size(a); ++da) {
        if (!tabled(a, da)) continue;
        for (Value dj = 0; dj < p.domain_size(j); ++dj) {
          if (!tabled(j, dj)) continue;
          GraphNode n;
          n.kind = NodeKind::Cost;
          n.owner = a;
          n.var = a;
          n.value = da;
          n.partner = j;
          n.partner_value = dj;
          n.constraint = index;
          n.cost = t.oriented(a, da, dj);
          cost_ids.push_back(add(n));
        }
      }
      GraphNode f;
      f.kind = NodeKind::Function;
      f.owner = a;
      f.var = a;
      f.partner = j;
      f.constraint = index;
      const int fid = add(f);
      g.function_nodes.push_back(fid);
      for (int c : cost_ids) {
        const auto& n = g.nodes[c];
        if (in_graph(a, n.value)) g.edges.emplace_back(assign_id[a][n.value], c);
        g.edges.emplace_back(c, fid);
      }
      // Edges into the successor's assignment nodes are added once those nodes exist.
    }
  }
  // Binary cost -> successor assignment edges.
  for (int c = 0; c < g.num_nodes(); ++c) {
    const auto& n = g.nodes[c];
    if (n.kind != NodeKind::Cost || n.unary) continue;
    if (in_graph(n.partner, n.partner_value)) g.edges.emplace_back(c, assign_id[n.partner][n.partner_value]);
  }
  g.target_node = assign_id[target_var][target_value];

  std::vector<std::vector<int>> in(g.num_nodes());
  for (int v = 0; v < g.num_nodes(); ++v) in[v].push_back(v);
  for (const auto& [s, d] : g.edges) in[d].push_back(s);
  g.in_offsets.assign(1, 0);
  for (auto& list : in) {
    std::sort(list.begin(), list.end());
    g.in_sources.insert(g.in_sources.end(), list.begin(), list.end());
    g.in_offsets.push_back(static_cast<int>(g.in_sources.size()));
  }
  return g;
}

TripartiteGraph compile_query(const ProblemInstance& p, const std::vector<Var>& scope, const PartialAssignment& gamma,
                              Var target_var, Value target_value, const CompileOptions& options) {
  const DagOrientation dag = orient_dag(p, scope, target_var);
  return compile(p, scope, gamma, target_var, target_value, dag, options);
}

QueryScope query_scope(const ProblemInstance& p, const Assignment& partial, Var target) {
  if (!p.contains(target) || partial[target] != kUnassigned) throw InputError("query target must be unassigned");
  QueryScope q;
  std::vector<char> seen(p.num_agents(), 0);
  std::vector<Var> stack{target};
  seen[target] = 1;
  while (!stack.empty()) {
    const Var v = stack.back();
    stack.pop_back();
    q.scope.push_back(v);
    for (Var u : p.neighbors(v)) {
      if (partial[u] != kUnassigned) {
        q.gamma[u] = partial[u];
      } else if (!seen[u]) {
        seen[u] = 1;
        stack.push_back(u);
      }
    }
  }
  std::sort(q.scope.begin(), q.scope.end());
  return q;
}

SizeBounds size_bounds(long long n, long long d) {
  if (n <= 0) return {};
  const long long others = n - 1;
  return {1 + others * d, n * (n - 1) / 2, others * (others - 1) / 2 * d * d + others * d};
}

std::optional<std::vector<int>> topological_order(const TripartiteGraph& g) {
  const int n = g.num_nodes();
  std::vector<int> indeg(n, 0);
  std::vector<std::vector<int>> out(n);
  for (const auto& [s, d] : g.edges) {
    out[s].push_back(d);
    ++indeg[d];
  }
  std::vector<int> order;
  std::vector<int> ready;
  for (int v = 0; v < n; ++v)
    if (indeg[v] == 0) ready.push_back(v);
  while (!ready.empty()) {
    const int v = ready.back();
    ready.pop_back();
    order.push_back(v);
    for (int w : out[v])
      if (--indeg[w] == 0) ready.push_back(w);
  }
  if (static_cast<int>(order.size()) != n) return std::nullopt;
  return order;
}

std::string export_text(const TripartiteGraph& g) {
  std::ostringstream os;
  for (int v = 0; v < g.num_nodes(); ++v) {
    const auto& n = g.nodes[v];
    os << "node " << v << ' ' << to_string(n.kind) << ' ';
    switch (n.kind) {
      case NodeKind::Assignment: os << 'x' << n.var << '=' << n.value; break;
      case NodeKind::Cost:
        os << 'f' << n.var << ',' << n.partner << '(' << n.value << ',' << n.partner_value << ")=" << n.cost
           << (n.unary ? " unary" : "");
        break;
      case NodeKind::Function: os << 'f' << n.var << ',' << n.partner << (n.unary ? " unary" : ""); break;
    }
    if (v == g.target_node) os << " target";
    os << '\n';
  }
  for (const auto& [s, d] : g.edges) os << "edge " << s << ' ' << d << '\n';
  return os.str();
}

}  // namespace dcop
