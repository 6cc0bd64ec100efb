#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "dpo/costs.hpp"
#include "dpo/diffusion.hpp"
#include "dpo/linalg.hpp"
#include "dpo/network.hpp"
#include "dpo/rng.hpp"

namespace dpo::test {

inline CombinationMatrix left(DenseMatrix m) {
  return {std::move(m), Stochasticity::left, WeightRule::identity};
}

inline QuadraticCost scalar_cost(double target) {
  return QuadraticCost(DenseMatrix{{1.0}}, DenseVector{target});
}

// Costs (w-1)^2 and (w-3)^2.
inline CostEnsemble two_scalar_costs() {
  return CostEnsemble({scalar_cost(1.0), scalar_cost(3.0)});
}

// Two-node network with A1 = [[0.7,0.4],[0.3,0.6]], A2 = C = I.
inline DiffusionConfig two_node_config(double mu) {
  CombinationPair pair{left({{0.7, 0.4}, {0.3, 0.6}}),
                       CombinationMatrix::identity(2), Strategy::general};
  return make_config(pair, CombinationMatrix::identity(2),
                     DenseVector{mu, mu});
}


inline Topology path_topology() { return Topology(3, {{0, 1}, {1, 2}}); }

// Random valid configuration on a generated graph; every node's step size is
// a fixed fraction of its own bound.
struct RandomCase {
  Topology topology;
  CostEnsemble ensemble;
  DiffusionConfig config;
};

inline RandomCase random_case(std::size_t n, std::size_t m, std::uint64_t seed,
                              double fraction = 0.2) {
  SplitMix64 pick(seed);
  // Sparse enough never to be complete: on a complete graph the averaging
  // rule makes every node identical and the bias vanishes.
  Topology topo = generate_topology(n, std::min(4.0, 0.5 * double(n - 1)), seed);
  CostEnsemble ens = sample_ensemble(n, m, m + 2, seed + 100);
  const WeightRule a_rules[] = {WeightRule::averaging,
                                WeightRule::relative_degree,
                                WeightRule::metropolis};
  const WeightRule c_rules[] = {WeightRule::averaging,
                                WeightRule::relative_degree,
                                WeightRule::identity};
  CombinationMatrix a = build_A(topo, a_rules[pick.below(3)]);
  CombinationMatrix c = build_C(topo, c_rules[pick.below(3)]);
  CombinationPair pair = pick.below(2) == 0 ? preset_atc(a) : preset_cta(a);
  DenseVector mu(n);
  for (std::size_t k = 0; k < n; ++k)
    mu[k] = fraction * pick.uniform(0.5, 1.0) * max_step_size(k, c, ens);
  return {topo, ens, make_config(pair, c, mu)};
}

}  // namespace dpo::test
