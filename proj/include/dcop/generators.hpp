#pragma once

#include <cstdint>

#include "dcop/instance.hpp"

namespace dcop {

/// Largest sampled cost; entries are uniform integers in [0, kMaxCost].
inline constexpr Cost kMaxCost = 100;

/// Erdos-Renyi constraint graph: each unordered pair constrained with probability p1.
ProblemInstance gen_random(int n, int d, double p1, std::uint64_t seed);

/// Barabasi-Albert graph grown from a complete seed graph on m0 vertices;
/// each new vertex attaches to m1 distinct vertices chosen proportionally to degree.
ProblemInstance gen_scale_free(int n, int d, int m0, int m1, std::uint64_t seed);

/// rows x cols lattice with 4-neighborhood constraints; variable index r * cols + c.
ProblemInstance gen_grid(int rows, int cols, int d, std::uint64_t seed);

/// Weighted graph coloring: f(a, b) = w_ij * [a == b].
ProblemInstance gen_wgc(int n, int d, double p1, std::uint64_t seed);

}  // namespace dcop
