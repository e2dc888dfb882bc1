#include "dcop/heuristics.hpp"

#include <algorithm>
#include <chrono>
#include <deque>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "dcop/errors.hpp"
#include "dcop/pseudo_tree.hpp"

namespace dcop {

namespace {

using Clock = std::chrono::steady_clock;

double since_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

class Recorder {
 public:
  Recorder(std::string name, const ProblemInstance& p, const Assignment& initial) : start_(Clock::now()) {
    trace_.algorithm = std::move(name);
    trace_.best_assignment = initial;
    trace_.points.push_back({0, since_ms(start_), total_cost(p, initial)});
  }
  void record(int iteration, const Assignment& a, Cost cost) {
    Cost best = trace_.points.back().best;
    if (cost < best) {
      best = cost;
      trace_.best_assignment = a;
    }
    trace_.points.push_back({iteration, since_ms(start_), best});
  }
  AnytimeTrace& trace() { return trace_; }

 private:
  Clock::time_point start_;
  AnytimeTrace trace_;
};

// Value minimizing `cost(value)`, lowest index on ties.
template <typename F>
std::pair<Value, Cost> argmin_value(int domain, F&& cost) {
  Value best = 0;
  Cost best_cost = cost(0);
  for (Value a = 1; a < domain; ++a) {
    const Cost c = cost(a);
    if (c < best_cost) {
      best = a;
      best_cost = c;
    }
  }
  return {best, best_cost};
}

std::vector<char> mask_of(const ProblemInstance& p, const std::vector<Var>& vars) {
  std::vector<char> mask(p.num_agents(), 0);
  for (Var v : vars) {
    if (!p.contains(v)) throw InputError("variable out of range");
    mask[v] = 1;
  }
  return mask;
}

void check_assignment(const ProblemInstance& p, const Assignment& a) {
  if (static_cast<int>(a.size()) != p.num_agents()) throw InputError("assignment has the wrong length");
}

}  // namespace

Assignment random_assignment(const ProblemInstance& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Assignment a(p.num_agents());
  for (Var v = 0; v < p.num_agents(); ++v) a[v] = std::uniform_int_distribution<Value>(0, p.domain_size(v) - 1)(rng);
  return a;
}

AnytimeTrace dsa(const ProblemInstance& p, double prob, int iterations, std::uint64_t seed) {
  if (prob < 0 || prob > 1) throw InputError("activation probability must be in [0, 1]");
  std::mt19937_64 rng(seed);
  Assignment cur = random_assignment(p, rng());
  Recorder rec("dsa", p, cur);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int it = 1; it <= iterations; ++it) {
    Assignment next = cur;
    for (Var i = 0; i < p.num_agents(); ++i) {
      const Cost now = local_cost(p, i, cur[i], cur);
      const auto [best, best_cost] = argmin_value(p.domain_size(i), [&](Value a) { return local_cost(p, i, a, cur); });
      if (best_cost < now && coin(rng) < prob) next[i] = best;
    }
    cur = std::move(next);
    rec.record(it, cur, total_cost(p, cur));
  }
  return std::move(rec.trace());
}

AnytimeTrace gdba(const ProblemInstance& p, int iterations, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Assignment cur = random_assignment(p, rng());
  Recorder rec("gdba", p, cur);
  const int n = p.num_agents();
  std::vector<std::vector<Cost>> modifier;
  for (const auto& t : p.constraints()) modifier.emplace_back(t.costs.size(), 1);

  auto entry = [&](int c, Var i, Value a, Value b) {
    const auto& t = p.constraint(c);
    return t.i == i ? a * t.cols + b : b * t.cols + a;
  };
  auto effective = [&](Var i, Value a) {
    Cost sum = 0;
    const auto nbrs = p.neighbors(i);
    const auto inc = p.incident(i);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      const int c = inc[k];
      const int e = entry(c, i, a, cur[nbrs[k]]);
      sum += p.constraint(c).costs[e] * modifier[c][e];
    }
    return sum;
  };

  std::vector<Cost> improve(n);
  std::vector<Value> proposal(n);
  for (int it = 1; it <= iterations; ++it) {
    for (Var i = 0; i < n; ++i) {
      const Cost now = effective(i, cur[i]);
      const auto [best, best_cost] = argmin_value(p.domain_size(i), [&](Value a) { return effective(i, a); });
      proposal[i] = best;
      improve[i] = now - best_cost;
    }
    Assignment next = cur;
    std::set<int> raised;
    for (Var i = 0; i < n; ++i) {
      bool wins = improve[i] > 0;
      bool quasi_local_minimum = improve[i] == 0;
      for (Var j : p.neighbors(i)) {
        if (improve[j] > improve[i] || (improve[j] == improve[i] && j < i)) wins = false;
        if (improve[j] > 0) quasi_local_minimum = false;
      }
      if (wins) {
        next[i] = proposal[i];
      } else if (quasi_local_minimum) {
        const auto nbrs = p.neighbors(i);
        const auto inc = p.incident(i);
        for (std::size_t k = 0; k < nbrs.size(); ++k) {
          const int c = inc[k];
          const int e = entry(c, i, cur[i], cur[nbrs[k]]);
          if (p.constraint(c).costs[e] > p.constraint(c).min_entry()) raised.insert(c);
        }
      }
    }
    for (int c : raised) {
      for (auto& m : modifier[c]) ++m;
    }
    cur = std::move(next);
    rec.record(it, cur, total_cost(p, cur));
  }
  return std::move(rec.trace());
}

std::vector<int> spanning_tree_tables(const ProblemInstance& p, const std::vector<Var>& vars) {
  const auto mask = mask_of(p, vars);
  std::vector<char> seen(p.num_agents(), 0);
  std::vector<Var> order(vars);
  std::sort(order.begin(), order.end());
  std::vector<int> tables;
  for (Var root : order) {
    if (seen[root]) continue;
    seen[root] = 1;
    std::deque<Var> queue{root};
    while (!queue.empty()) {
      const Var v = queue.front();
      queue.pop_front();
      const auto nbrs = p.neighbors(v);
      const auto inc = p.incident(v);
      for (std::size_t k = 0; k < nbrs.size(); ++k) {
        const Var u = nbrs[k];
        if (!mask[u] || seen[u]) continue;
        seen[u] = 1;
        tables.push_back(inc[k]);
        queue.push_back(u);
      }
    }
  }
  std::sort(tables.begin(), tables.end());
  return tables;
}

Assignment repair_tree_dpop(const ProblemInstance& p, const std::vector<Var>& destroyed, const Assignment& current) {
  check_assignment(p, current);
  if (destroyed.empty()) throw InputError("nothing to repair");
  Assignment partial = current;
  for (Var v : destroyed) partial[v] = kUnassigned;
  const auto tables = spanning_tree_tables(p, destroyed);
  const auto sol = dpop(make_subproblem(p, destroyed, partial, {}, &tables));
  for (const auto& [v, a] : sol.assignment) partial[v] = a;
  return partial;
}

Assignment repair_greedy_model(const ProblemInstance& p, const std::vector<Var>& destroyed, const Assignment& current,
                               CostModel& model) {
  check_assignment(p, current);
  if (destroyed.empty()) throw InputError("nothing to repair");
  Assignment partial = current;
  for (Var v : destroyed) partial[v] = kUnassigned;
  const auto mask = mask_of(p, destroyed);
  const auto forest = build_pseudo_forest(p, mask);
  for (Var v : forest.dfs_order) {
    Value best = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    for (Value a = 0; a < p.domain_size(v); ++a) {
      const double c = model.predict(p, partial, v, a);
      if (c < best_cost) {
        best = a;
        best_cost = c;
      }
    }
    partial[v] = best;
  }
  return partial;
}

AnytimeTrace dlns(const ProblemInstance& p, double destroy_prob, int iterations, const Repair& repair,
                  std::uint64_t seed, const std::string& name) {
  if (destroy_prob < 0 || destroy_prob > 1) throw InputError("destroy probability must be in [0, 1]");
  std::mt19937_64 rng(seed);
  Assignment cur = random_assignment(p, rng());
  Cost cur_cost = total_cost(p, cur);
  Recorder rec(name, p, cur);
  std::bernoulli_distribution destroy(destroy_prob);
  for (int it = 1; it <= iterations; ++it) {
    std::vector<Var> destroyed;
    for (Var v = 0; v < p.num_agents(); ++v) {
      if (destroy(rng)) destroyed.push_back(v);
    }
    if (!destroyed.empty()) {
      try {
        Assignment cand = repair(p, destroyed, cur);
        const Cost c = total_cost(p, cand);
        if (c < cur_cost) {
          cur = std::move(cand);
          cur_cost = c;
        }
      } catch (const ResourceError&) {
        ++rec.trace().skipped;
      }
    }
    rec.record(it, cur, cur_cost);
  }
  return std::move(rec.trace());
}

BnbResult branch_and_bound(const ProblemInstance& p, ValueOrdering ordering, CostModel* model, int model_depth,
                           std::size_t max_nodes) {
  if (ordering == ValueOrdering::Model && model == nullptr) throw InputError("model ordering needs a cost model");
  const auto pt = build_pseudo_forest(p);
  const auto& order = pt.dfs_order;
  const int n = p.num_agents();
  BnbResult result;
  result.cost = std::numeric_limits<Cost>::max();
  Assignment partial(n, kUnassigned);

  auto values_for = [&](Var v) {
    std::vector<Value> values(p.domain_size(v));
    std::iota(values.begin(), values.end(), 0);
    if (ordering == ValueOrdering::Model && pt.depth[v] < model_depth) {
      std::vector<double> score(values.size());
      for (Value a : values) score[a] = model->predict(p, partial, v, a);
      std::stable_sort(values.begin(), values.end(), [&](Value a, Value b) { return score[a] < score[b]; });
    }
    return values;
  };

  auto search = [&](auto&& self, int k, Cost acc) -> void {
    if (k == n) {
      result.cost = acc;
      result.assignment = partial;
      return;
    }
    const Var v = order[k];
    for (Value a : values_for(v)) {
      if (++result.nodes > max_nodes) throw ResourceError("branch and bound node cap exceeded");
      Cost inc = 0;
      const auto nbrs = p.neighbors(v);
      for (Var u : nbrs) {
        if (partial[u] != kUnassigned) inc += p.cost(v, a, u, partial[u]);
      }
      if (acc + inc >= result.cost) continue;
      partial[v] = a;
      self(self, k + 1, acc + inc);
      partial[v] = kUnassigned;
    }
  };
  if (n == 0) {
    result.cost = 0;
    return result;
  }
  search(search, 0, 0);
  return result;
}

std::vector<double> normalized_anytime_cost(const AnytimeTrace& trace, int constraints) {
  if (constraints <= 0) throw InputError("normalization needs at least one constraint");
  std::vector<double> out;
  for (const auto& pt : trace.points) out.push_back(static_cast<double>(pt.best) / constraints);
  return out;
}

std::string anytime_csv_header() { return "algorithm,instance_id,seed,iteration,elapsed_ms,best_cost,normalized_cost\n"; }

std::string anytime_csv(const AnytimeTrace& trace, const std::string& instance_id, std::uint64_t seed,
                        int constraints) {
  std::ostringstream out;
  for (const auto& pt : trace.points) {
    out << trace.algorithm << ',' << instance_id << ',' << seed << ',' << pt.iteration << ',' << pt.elapsed_ms << ','
        << pt.best << ',';
    if (constraints > 0) {
      out << static_cast<double>(pt.best) / constraints;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace dcop
