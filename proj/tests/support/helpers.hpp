#pragma once

#include <random>
#include <vector>

#include "dcop/instance.hpp"

namespace dcop::testing {

inline ProblemInstance chain3() {
  ProblemInstance p({2, 2, 2});
  p.add_constraint(0, 1, {1, 2, 3, 4});
  p.add_constraint(1, 2, {5, 6, 7, 8});
  return p;
}

inline ProblemInstance triangle() {
  ProblemInstance p({2, 2, 2});
  p.add_constraint(0, 1, {1, 2, 3, 4});
  p.add_constraint(1, 2, {5, 6, 7, 8});
  p.add_constraint(0, 2, {9, 10, 11, 12});
  return p;
}

inline Assignment random_assignment(const ProblemInstance& p, std::mt19937_64& rng) {
  Assignment a(p.num_agents());
  for (Var v = 0; v < p.num_agents(); ++v) {
    a[v] = std::uniform_int_distribution<int>(0, p.domain_size(v) - 1)(rng);
  }
  return a;
}

}  // namespace dcop::testing
