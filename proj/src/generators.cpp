#include "dcop/generators.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "dcop/errors.hpp"

namespace dcop {
namespace {

std::vector<Cost> random_table(int di, int dj, std::mt19937_64& rng) {
  std::uniform_int_distribution<Cost> cost(0, kMaxCost);
  std::vector<Cost> t(static_cast<std::size_t>(di) * dj);
  for (auto& c : t) c = cost(rng);
  return t;
}

void check_density(int n, int d, double p1) {
  if (n < 1) throw InputError("n must be >= 1");
  if (d < 1) throw InputError("d must be >= 1");
  if (!(p1 > 0.0 && p1 <= 1.0)) throw InputError("p1 must lie in (0, 1]");
}

}  // namespace

ProblemInstance gen_random(int n, int d, double p1, std::uint64_t seed) {
  check_density(n, d, p1);
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution edge(p1);
  ProblemInstance p(std::vector<int>(n, d),
                    {{"generator", "random"}, {"n", n}, {"d", d}, {"p1", p1}, {"seed", seed}});
  for (Var i = 0; i < n; ++i)
    for (Var j = i + 1; j < n; ++j)
      if (edge(rng)) p.add_constraint(i, j, random_table(d, d, rng));
  return p;
}

ProblemInstance gen_scale_free(int n, int d, int m0, int m1, std::uint64_t seed) {
  if (d < 1) throw InputError("d must be >= 1");
  if (!(n >= m0 && m0 >= m1 && m1 >= 1)) throw InputError("scale-free generator needs n >= m0 >= m1 >= 1");
  std::mt19937_64 rng(seed);
  ProblemInstance p(std::vector<int>(n, d), {{"generator", "scale-free"},
                                             {"n", n},
                                             {"d", d},
                                             {"m0", m0},
                                             {"m1", m1},
                                             {"seed", seed}});
  std::vector<double> degree(n, 0.0);
  for (Var i = 0; i < m0; ++i) {
    for (Var j = i + 1; j < m0; ++j) {
      p.add_constraint(i, j, random_table(d, d, rng));
      degree[i] += 1;
      degree[j] += 1;
    }
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Var v = m0; v < n; ++v) {
    std::vector<double> weight(degree.begin(), degree.begin() + v);
    std::vector<Var> targets;
    for (int k = 0; k < m1; ++k) {
      double total = std::accumulate(weight.begin(), weight.end(), 0.0);
      Var pick = -1;
      if (total <= 0.0) {
        // Seed graph with no edges (m0 == 1): fall back to uniform over remaining vertices.
        std::vector<Var> free;
        for (Var u = 0; u < v; ++u)
          if (std::find(targets.begin(), targets.end(), u) == targets.end()) free.push_back(u);
        pick = free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)];
      } else {
        double r = unit(rng) * total;
        for (Var u = 0; u < v; ++u) {
          if (weight[u] <= 0.0) continue;
          pick = u;
          r -= weight[u];
          if (r < 0.0) break;
        }
      }
      targets.push_back(pick);
      weight[pick] = 0.0;
    }
    std::sort(targets.begin(), targets.end());
    for (Var u : targets) {
      p.add_constraint(u, v, random_table(d, d, rng));
      degree[u] += 1;
      degree[v] += 1;
    }
  }
  return p;
}

ProblemInstance gen_grid(int rows, int cols, int d, std::uint64_t seed) {
  if (rows < 1 || cols < 1) throw InputError("grid dimensions must be >= 1");
  if (d < 1) throw InputError("d must be >= 1");
  std::mt19937_64 rng(seed);
  ProblemInstance p(std::vector<int>(static_cast<std::size_t>(rows) * cols, d),
                    {{"generator", "grid"}, {"rows", rows}, {"cols", cols}, {"d", d}, {"seed", seed}});
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const Var v = r * cols + c;
      if (c + 1 < cols) p.add_constraint(v, v + 1, random_table(d, d, rng));
      if (r + 1 < rows) p.add_constraint(v, v + cols, random_table(d, d, rng));
    }
  }
  return p;
}

ProblemInstance gen_wgc(int n, int d, double p1, std::uint64_t seed) {
  check_density(n, d, p1);
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution edge(p1);
  std::uniform_int_distribution<Cost> weight(0, kMaxCost);
  ProblemInstance p(std::vector<int>(n, d), {{"generator", "wgc"}, {"n", n}, {"d", d}, {"p1", p1}, {"seed", seed}});
  for (Var i = 0; i < n; ++i) {
    for (Var j = i + 1; j < n; ++j) {
      if (!edge(rng)) continue;
      const Cost w = weight(rng);
      std::vector<Cost> t(static_cast<std::size_t>(d) * d, 0);
      for (int a = 0; a < d; ++a) t[static_cast<std::size_t>(a) * d + a] = w;
      p.add_constraint(i, j, std::move(t));
    }
  }
  return p;
}

}  // namespace dcop
