#pragma once

#include <vector>

namespace sphercomp {

/// Gauss-Hermite rule for the weight e^{-t^2}; for W ~ N(0,1),
/// E[g(W)] = sum_j weights[j] * g(sqrt(2) * nodes[j]) / sqrt(pi).
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Rule of the given order, memoized; computed by Golub-Welsch.
const GaussHermite& gauss_hermite(int order);

}  // namespace sphercomp
