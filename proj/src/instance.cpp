#include "dcop/instance.hpp"

#include <algorithm>
#include <string>

#include "dcop/errors.hpp"

namespace dcop {

Cost CostTable::min_entry() const { return costs.empty() ? 0 : *std::min_element(costs.begin(), costs.end()); }

ProblemInstance::ProblemInstance(std::vector<int> domains, nlohmann::json meta)
    : domains_(std::move(domains)), adj_(domains_.size()), adj_tables_(domains_.size()), meta_(std::move(meta)) {
  for (int d : domains_) {
    if (d < 1) throw InputError("domain sizes must be positive");
  }
}

void ProblemInstance::add_constraint(Var i, Var j, std::vector<Cost> costs) {
  if (!contains(i) || !contains(j)) throw InputError("constraint endpoint out of range");
  if (i == j) throw InputError("self-constraint on variable " + std::to_string(i));
  if (find(i, j) >= 0) {
    throw InputError("duplicate constraint {" + std::to_string(i) + "," + std::to_string(j) + "}");
  }
  const auto di = static_cast<std::size_t>(domains_[i]);
  const auto dj = static_cast<std::size_t>(domains_[j]);
  if (costs.size() != di * dj) throw InputError("cost table has wrong size");
  if (std::any_of(costs.begin(), costs.end(), [](Cost c) { return c < 0; })) {
    throw InputError("costs must be non-negative");
  }
  CostTable t;
  if (i < j) {
    t = {i, j, domains_[i], domains_[j], std::move(costs)};
  } else {
    std::vector<Cost> transposed(costs.size());
    for (std::size_t a = 0; a < di; ++a)
      for (std::size_t b = 0; b < dj; ++b) transposed[b * di + a] = costs[a * dj + b];
    t = {j, i, domains_[j], domains_[i], std::move(transposed)};
  }
  const int index = static_cast<int>(tables_.size());
  auto link = [&](Var u, Var w) {
    auto pos = std::lower_bound(adj_[u].begin(), adj_[u].end(), w);
    const auto offset = pos - adj_[u].begin();
    adj_[u].insert(pos, w);
    adj_tables_[u].insert(adj_tables_[u].begin() + offset, index);
  };
  link(t.i, t.j);
  link(t.j, t.i);
  tables_.push_back(std::move(t));
}

int ProblemInstance::find(Var i, Var j) const {
  if (!contains(i) || !contains(j)) return -1;
  const auto& row = adj_[i];
  auto pos = std::lower_bound(row.begin(), row.end(), j);
  if (pos == row.end() || *pos != j) return -1;
  return adj_tables_[i][pos - row.begin()];
}

Cost ProblemInstance::cost(Var i, Value a, Var j, Value b) const {
  const int index = find(i, j);
  if (index < 0) throw InputError("no constraint between the given variables");
  return tables_[index].oriented(i, a, b);
}

Cost total_cost(const ProblemInstance& p, const Assignment& a) {
  if (static_cast<int>(a.size()) != p.num_agents()) throw InputError("assignment size does not match instance");
  for (Var v = 0; v < p.num_agents(); ++v) {
    if (a[v] < 0 || a[v] >= p.domain_size(v)) {
      throw InputError("variable " + std::to_string(v) + " unassigned or out of domain");
    }
  }
  Cost total = 0;
  for (const auto& t : p.constraints()) total += t.at(a[t.i], a[t.j]);
  return total;
}

Cost local_cost(const ProblemInstance& p, Var i, Value value, const Assignment& a) {
  const auto nbrs = p.neighbors(i);
  const auto tabs = p.incident(i);
  Cost sum = 0;
  for (std::size_t k = 0; k < nbrs.size(); ++k) {
    const Value other = a[nbrs[k]];
    if (other < 0) throw InputError("neighbor " + std::to_string(nbrs[k]) + " has no value");
    sum += p.constraint(tabs[k]).oriented(i, value, other);
  }
  return sum;
}

Cost local_cost(const ProblemInstance& p, Var i, Value value, const PartialAssignment& neighbor_values) {
  const auto nbrs = p.neighbors(i);
  const auto tabs = p.incident(i);
  Cost sum = 0;
  for (std::size_t k = 0; k < nbrs.size(); ++k) {
    auto it = neighbor_values.find(nbrs[k]);
    if (it == neighbor_values.end()) throw InputError("neighbor " + std::to_string(nbrs[k]) + " has no value");
    sum += p.constraint(tabs[k]).oriented(i, value, it->second);
  }
  return sum;
}

std::vector<std::vector<Var>> connected_components(const ProblemInstance& p, const std::vector<char>& mask) {
  const int n = p.num_agents();
  auto allowed = [&](Var v) { return mask.empty() || mask[v]; };
  std::vector<char> seen(n, 0);
  std::vector<std::vector<Var>> comps;
  std::vector<Var> stack;
  for (Var s = 0; s < n; ++s) {
    if (seen[s] || !allowed(s)) continue;
    std::vector<Var> comp;
    stack.push_back(s);
    seen[s] = 1;
    while (!stack.empty()) {
      const Var v = stack.back();
      stack.pop_back();
      comp.push_back(v);
      for (Var u : p.neighbors(v)) {
        if (!seen[u] && allowed(u)) {
          seen[u] = 1;
          stack.push_back(u);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

}  // namespace dcop
