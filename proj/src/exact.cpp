#include "dcop/exact.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "dcop/errors.hpp"

namespace dcop {
namespace {

/// Subproblem re-expressed as a standalone instance over local ids, clamped
/// variables reduced to a single-value domain.
struct LocalProblem {
  ProblemInstance inst;
  std::vector<std::vector<Cost>> unary;
  std::vector<std::vector<Value>> values;  // local value -> base value
};

LocalProblem localize(const Subproblem& sp) {
  const auto& p = *sp.base;
  const int m = static_cast<int>(sp.variables.size());
  LocalProblem lp;
  std::vector<int> domains(m);
  lp.values.resize(m);
  lp.unary.resize(m);
  for (int k = 0; k < m; ++k) {
    const Var v = sp.variables[k];
    auto clamp = sp.clamps.find(v);
    if (clamp != sp.clamps.end()) {
      lp.values[k] = {clamp->second};
    } else {
      lp.values[k].resize(p.domain_size(v));
      for (Value a = 0; a < p.domain_size(v); ++a) lp.values[k][a] = a;
    }
    domains[k] = static_cast<int>(lp.values[k].size());
    for (Value a : lp.values[k]) lp.unary[k].push_back(sp.unaries[k][a]);
  }
  lp.inst = ProblemInstance(std::move(domains));
  for (int index : sp.tables) {
    const auto& t = p.constraint(index);
    const int li = sp.local_index(t.i);
    const int lj = sp.local_index(t.j);
    std::vector<Cost> costs;
    for (Value a : lp.values[li])
      for (Value b : lp.values[lj]) costs.push_back(t.at(a, b));
    lp.inst.add_constraint(li, lj, std::move(costs));
  }
  return lp;
}

Solution to_solution(const Subproblem& sp, const LocalProblem& lp, const Assignment& local, Cost cost) {
  Solution s;
  s.cost = cost;
  for (std::size_t k = 0; k < sp.variables.size(); ++k) s.assignment[sp.variables[k]] = lp.values[k][local[k]];
  return s;
}

void validate(const Subproblem& sp) {
  if (sp.base == nullptr) throw InputError("subproblem has no base instance");
  if (sp.unaries.size() != sp.variables.size()) throw InputError("unaries not parallel to variables");
  for (const auto& [v, d] : sp.clamps) {
    const int k = sp.local_index(v);
    if (k < 0) throw InputError("clamped variable outside the subproblem");
    if (d < 0 || d >= sp.base->domain_size(v)) throw InputError("clamp value out of domain");
  }
}

}  // namespace

int Subproblem::local_index(Var v) const {
  auto it = std::lower_bound(variables.begin(), variables.end(), v);
  return it != variables.end() && *it == v ? static_cast<int>(it - variables.begin()) : -1;
}

Subproblem make_subproblem(const ProblemInstance& p, std::vector<Var> variables, const Assignment& context,
                           PartialAssignment clamps, const std::vector<int>* tables) {
  std::sort(variables.begin(), variables.end());
  variables.erase(std::unique(variables.begin(), variables.end()), variables.end());
  Subproblem sp;
  sp.base = &p;
  sp.variables = std::move(variables);
  sp.clamps = std::move(clamps);
  std::vector<char> inside(p.num_agents(), 0);
  for (Var v : sp.variables) {
    if (!p.contains(v)) throw InputError("subproblem variable out of range");
    inside[v] = 1;
  }
  sp.unaries.resize(sp.variables.size());
  for (std::size_t k = 0; k < sp.variables.size(); ++k) {
    const Var v = sp.variables[k];
    auto& u = sp.unaries[k];
    u.assign(p.domain_size(v), 0);
    const auto nbrs = p.neighbors(v);
    const auto tabs = p.incident(v);
    for (std::size_t e = 0; e < nbrs.size(); ++e) {
      const Var a = nbrs[e];
      if (inside[a]) {
        if (tables == nullptr && v < a) sp.tables.push_back(tabs[e]);
        continue;
      }
      if (a >= static_cast<int>(context.size()) || context[a] < 0) continue;
      const auto& t = p.constraint(tabs[e]);
      for (Value d = 0; d < p.domain_size(v); ++d) u[d] += t.oriented(v, d, context[a]);
    }
  }
  if (tables != nullptr) {
    for (int index : *tables) {
      const auto& t = p.constraint(index);
      if (!inside[t.i] || !inside[t.j]) throw InputError("subproblem table leaves the variable set");
      sp.tables.push_back(index);
    }
  }
  std::sort(sp.tables.begin(), sp.tables.end());
  validate(sp);
  return sp;
}

Subproblem reduce(const ProblemInstance& p, const PseudoTree& pt, const PartialAssignment& gamma, Var i, Value d_i) {
  if (!pt.contains(i)) throw InputError("target not in pseudo tree");
  if (d_i < 0 || d_i >= p.domain_size(i)) throw InputError("target value out of domain");
  const auto sep = separator(pt, i);
  if (gamma.size() != sep.size()) throw InputError("context must assign exactly the separator");
  Assignment context(p.num_agents(), kUnassigned);
  for (Var s : sep) {
    auto it = gamma.find(s);
    if (it == gamma.end()) throw InputError("context misses separator variable " + std::to_string(s));
    if (it->second < 0 || it->second >= p.domain_size(s)) throw InputError("context value out of domain");
    context[s] = it->second;
  }
  return make_subproblem(p, pt.subtree(i), context, {{i, d_i}});
}

Cost evaluate(const Subproblem& sp, const PartialAssignment& a) {
  Cost total = 0;
  for (std::size_t k = 0; k < sp.variables.size(); ++k) total += sp.unaries[k][a.at(sp.variables[k])];
  for (int index : sp.tables) {
    const auto& t = sp.base->constraint(index);
    total += t.at(a.at(t.i), a.at(t.j));
  }
  return total;
}

Solution brute_force(const Subproblem& sp, const ExactLimits& limits) {
  validate(sp);
  const LocalProblem lp = localize(sp);
  const int m = lp.inst.num_agents();
  double space = 1.0;
  for (int k = 0; k < m; ++k) space *= lp.inst.domain_size(k);
  if (space > limits.max_enumeration) throw ResourceError("brute force enumeration exceeds cap");
  Assignment cur(m, 0);
  Assignment best = cur;
  Cost best_cost = std::numeric_limits<Cost>::max();
  while (true) {
    Cost c = 0;
    for (int k = 0; k < m; ++k) c += lp.unary[k][cur[k]];
    for (const auto& t : lp.inst.constraints()) c += t.at(cur[t.i], cur[t.j]);
    if (c < best_cost) {
      best_cost = c;
      best = cur;
    }
    int k = m - 1;
    while (k >= 0 && ++cur[k] == lp.inst.domain_size(k)) cur[k--] = 0;
    if (k < 0) break;
  }
  return to_solution(sp, lp, best, m == 0 ? 0 : best_cost);
}

Solution dpop(const Subproblem& sp, const ExactLimits& limits) {
  validate(sp);
  const LocalProblem lp = localize(sp);
  const auto& inst = lp.inst;
  const int m = inst.num_agents();
  if (m == 0) return {};
  const PseudoTree pt = build_pseudo_forest(inst);

  struct Util {
    std::vector<Var> sep;
    std::vector<std::size_t> stride;
    std::vector<Cost> table;
  };
  std::vector<Util> util(m);
  Assignment val(m, 0);

  // Cost of x_v = a given val[] on v's parent, pseudo-parents and children's separators.
  auto local = [&](Var v, Value a) {
    Cost c = lp.unary[v][a];
    auto add_edge = [&](Var u) { c += inst.cost(v, a, u, val[u]); };
    if (pt.parent[v] >= 0) add_edge(pt.parent[v]);
    for (Var u : pt.pseudo_parents[v]) add_edge(u);
    val[v] = a;
    for (Var ch : pt.children[v]) {
      const auto& u = util[ch];
      std::size_t idx = 0;
      for (std::size_t k = 0; k < u.sep.size(); ++k) idx += static_cast<std::size_t>(val[u.sep[k]]) * u.stride[k];
      c += u.table[idx];
    }
    return c;
  };

  for (auto it = pt.dfs_order.rbegin(); it != pt.dfs_order.rend(); ++it) {
    const Var v = *it;
    auto& u = util[v];
    u.sep = separator(pt, v);
    double size = 1.0;
    for (Var s : u.sep) size *= inst.domain_size(s);
    if (size > limits.max_table) throw ResourceError("DPOP utility table exceeds cap");
    u.stride.assign(u.sep.size(), 1);
    for (int k = static_cast<int>(u.sep.size()) - 2; k >= 0; --k) {
      u.stride[k] = u.stride[k + 1] * static_cast<std::size_t>(inst.domain_size(u.sep[k + 1]));
    }
    u.table.assign(static_cast<std::size_t>(size), 0);
    for (Var s : u.sep) val[s] = 0;
    for (std::size_t idx = 0; idx < u.table.size(); ++idx) {
      Cost best = std::numeric_limits<Cost>::max();
      for (Value a = 0; a < inst.domain_size(v); ++a) best = std::min(best, local(v, a));
      u.table[idx] = best;
      for (int k = static_cast<int>(u.sep.size()) - 1; k >= 0; --k) {
        if (++val[u.sep[k]] < inst.domain_size(u.sep[k])) break;
        val[u.sep[k]] = 0;
      }
    }
  }

  Cost total = 0;
  for (Var r : pt.roots) total += util[r].table[0];
  for (Var v : pt.dfs_order) {
    Value best_a = 0;
    Cost best = std::numeric_limits<Cost>::max();
    for (Value a = 0; a < inst.domain_size(v); ++a) {
      const Cost c = local(v, a);
      if (c < best) {
        best = c;
        best_a = a;
      }
    }
    val[v] = best_a;
  }
  return to_solution(sp, lp, val, total);
}

}  // namespace dcop
