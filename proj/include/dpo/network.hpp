#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dpo/matrix.hpp"

namespace dpo {

/// Undirected connected graph. Every node belongs to its own closed
/// neighborhood, so the adjacency diagonal is always true.
class Topology {
 public:
  /// Builds from an undirected edge list over nodes 0..n-1. Self-loops and
  /// duplicates are ignored. Throws ValidationError when the graph is not
  /// connected or an index is out of range.
  Topology(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
           std::uint64_t seed = 0);

  std::size_t size() const noexcept { return n_; }
  std::uint64_t seed() const noexcept { return seed_; }

  bool linked(std::size_t l, std::size_t k) const noexcept {
    return adjacency_[l * n_ + k] != 0;
  }
  /// Closed neighborhood of k, ascending.
  const std::vector<std::size_t>& neighborhood(std::size_t k) const {
    return neighborhoods_[k];
  }
  /// Size of the closed neighborhood (degree plus one).
  std::size_t closed_degree(std::size_t k) const {
    return neighborhoods_[k].size();
  }
  /// Undirected edges (u < v), lexicographically sorted.
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;
  std::size_t edge_count() const noexcept { return edge_count_; }
  /// Mean number of neighbors, excluding the node itself.
  double average_degree() const noexcept;

  bool operator==(const Topology& other) const {
    return n_ == other.n_ && adjacency_ == other.adjacency_;
  }

 private:
  std::size_t n_;
  std::uint64_t seed_;
  std::size_t edge_count_ = 0;
  std::vector<unsigned char> adjacency_;
  std::vector<std::vector<std::size_t>> neighborhoods_;
};

/// Random connected graph: a uniformly random labelled spanning tree (decoded
/// from a random Pruefer sequence) plus distinct random extra edges until the
/// mean open degree reaches `target_avg_degree`. Deterministic in its inputs.
Topology generate_topology(std::size_t n, double target_avg_degree,
                           std::uint64_t seed);

/// Edge-list text: "N <count>" then one "u v" line per undirected edge.
void write_edge_list(std::ostream& os, const Topology& topology);
std::string to_edge_list(const Topology& topology);
Topology read_edge_list(std::istream& is);

enum class Stochasticity { left, right, doubly };
enum class WeightRule { averaging, relative_degree, metropolis, identity };

std::string_view to_string(Stochasticity kind);
std::string_view to_string(WeightRule rule);
/// Parses "averaging", "relative_degree", "metropolis" or "identity".
WeightRule parse_weight_rule(std::string_view name);

struct CombinationMatrix {
  DenseMatrix matrix;
  Stochasticity kind = Stochasticity::left;
  WeightRule rule = WeightRule::identity;

  std::size_t size() const noexcept { return matrix.rows(); }
  double operator()(std::size_t l, std::size_t k) const noexcept {
    return matrix(l, k);
  }
  static CombinationMatrix identity(std::size_t n);
};

/// Checks nonnegativity, the declared stochasticity (tolerance 1e-12), and,
/// when `topology` is given, that weights vanish outside neighborhoods.
/// Throws ValidationError naming the first violation.
void validate(const CombinationMatrix& c, const Topology* topology = nullptr);

/// Left-stochastic combination matrix by one of the averaging,
/// relative-degree or Metropolis rules. Metropolis is symmetric and therefore
/// declared doubly stochastic.
CombinationMatrix build_A(const Topology& topology, WeightRule rule);

/// Right-stochastic matrix: the transpose of the left-stochastic matrix of
/// `rule`, or the identity for WeightRule::identity.
CombinationMatrix build_C(const Topology& topology, WeightRule rule);

/// True iff the nonnegative square matrix is primitive: its (N^2-2N+2)-th
/// power is entrywise positive. Works on the zero pattern only.
bool check_primitive(const DenseMatrix& p);

struct PerronData {
  DenseVector theta;
  DenseMatrix composite;
};

/// Perron vector of A1*A2, normalized to sum to one. Throws AssumptionError
/// when the composite is not left-stochastic and primitive.
PerronData perron_theta(const CombinationMatrix& a1,
                        const CombinationMatrix& a2);

struct Assumption3Report {
  bool satisfied = false;
  double c0_estimate = 0.0;
  double max_deviation = 0.0;
};

inline constexpr double kAssumption3Tolerance = 1e-8;

/// Evaluates v = C * diag(omega0) * A2 * theta, i.e. the row vector
/// theta' A2' Omega0 C' written as a column, and tests it for constancy.
Assumption3Report check_assumption3(const DenseVector& theta,
                                    const CombinationMatrix& a2,
                                    const DenseVector& omega0,
                                    const CombinationMatrix& c,
                                    double tol = kAssumption3Tolerance);

/// Step sizes mu_k proportional to 1/(A2 theta)_k with maximum `mu_max`.
/// With C = I the resulting configuration meets the constancy condition
/// exactly.
DenseVector design_step_sizes_for_assumption3(const CombinationMatrix& a1,
                                              const CombinationMatrix& a2,
                                              double mu_max);

}  // namespace dpo
