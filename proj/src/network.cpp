#include "dpo/network.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <istream>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>

#include "dpo/error.hpp"
#include "dpo/linalg.hpp"
#include "dpo/rng.hpp"

namespace dpo {

namespace {

constexpr double kStochasticTol = 1e-12;

using Edge = std::pair<std::size_t, std::size_t>;

// Decodes a Pruefer sequence into the edges of the labelled tree it encodes.
std::vector<Edge> decode_pruefer(const std::vector<std::size_t>& code,
                                 std::size_t n) {
  std::vector<std::size_t> degree(n, 1);
  for (std::size_t x : code) ++degree[x];
  std::priority_queue<std::size_t, std::vector<std::size_t>,
                      std::greater<std::size_t>>
      leaves;
  for (std::size_t i = 0; i < n; ++i)
    if (degree[i] == 1) leaves.push(i);

  std::vector<Edge> edges;
  edges.reserve(n - 1);
  for (std::size_t x : code) {
    const std::size_t leaf = leaves.top();
    leaves.pop();
    edges.emplace_back(std::min(leaf, x), std::max(leaf, x));
    if (--degree[x] == 1) leaves.push(x);
  }
  const std::size_t u = leaves.top();
  leaves.pop();
  const std::size_t v = leaves.top();
  edges.emplace_back(std::min(u, v), std::max(u, v));
  return edges;
}

bool is_connected(std::size_t n, const std::vector<std::vector<std::size_t>>& nbrs) {
  if (n == 0) return false;
  std::vector<bool> seen(n, false);
  std::vector<std::size_t> queue{0};
  seen[0] = true;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    for (std::size_t v : nbrs[queue[head]]) {
      if (!seen[v]) {
        seen[v] = true;
        queue.push_back(v);
      }
    }
  }
  return queue.size() == n;
}

}  // namespace

Topology::Topology(std::size_t n, const std::vector<Edge>& edges,
                   std::uint64_t seed)
    : n_(n), seed_(seed), adjacency_(n * n, 0), neighborhoods_(n) {
  if (n == 0) throw ValidationError("topology: need at least one node");
  for (std::size_t k = 0; k < n; ++k) adjacency_[k * n + k] = 1;
  for (const auto& [u, v] : edges) {
    if (u >= n || v >= n) {
      throw ValidationError("topology: edge (" + std::to_string(u) + ", " +
                            std::to_string(v) + ") out of range for " +
                            std::to_string(n) + " nodes");
    }
    if (u == v || adjacency_[u * n + v]) continue;
    adjacency_[u * n + v] = 1;
    adjacency_[v * n + u] = 1;
    ++edge_count_;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l)
      if (adjacency_[l * n + k]) neighborhoods_[k].push_back(l);

  std::vector<std::vector<std::size_t>> open(n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l : neighborhoods_[k])
      if (l != k) open[k].push_back(l);
  if (!is_connected(n, open)) {
    throw ValidationError("topology: graph with " + std::to_string(n) +
                          " nodes is not connected");
  }
}

std::vector<Edge> Topology::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count_);
  for (std::size_t u = 0; u < n_; ++u)
    for (std::size_t v = u + 1; v < n_; ++v)
      if (adjacency_[u * n_ + v]) out.emplace_back(u, v);
  return out;
}

double Topology::average_degree() const noexcept {
  return 2.0 * static_cast<double>(edge_count_) / static_cast<double>(n_);
}

Topology generate_topology(std::size_t n, double target_avg_degree,
                           std::uint64_t seed) {
  if (n < 2) throw ValidationError("generate_topology: need n >= 2");
  if (!(target_avg_degree >= 1.0) ||
      !(target_avg_degree < static_cast<double>(n))) {
    throw ValidationError("generate_topology: average degree " +
                          std::to_string(target_avg_degree) +
                          " outside [1, n)");
  }
  const std::size_t max_edges = n * (n - 1) / 2;
  const std::size_t wanted = std::max<std::size_t>(
      n - 1, static_cast<std::size_t>(
                 std::ceil(target_avg_degree * static_cast<double>(n) / 2.0)));
  const double achieved =
      2.0 * static_cast<double>(wanted) / static_cast<double>(n);
  if (wanted > max_edges || std::abs(achieved - target_avg_degree) > 0.5) {
    throw ValidationError(
        "generate_topology: a connected graph on " + std::to_string(n) +
        " nodes cannot have average degree " +
        std::to_string(target_avg_degree) + " (+/- 0.5)");
  }

  SplitMix64 rng(seed);
  std::vector<std::size_t> code(n - 2);
  for (auto& x : code) x = rng.below(n);
  std::vector<Edge> edges = decode_pruefer(code, n);

  std::vector<unsigned char> present(n * n, 0);
  for (const auto& [u, v] : edges) present[u * n + v] = 1;
  std::vector<Edge> candidates;
  candidates.reserve(max_edges - edges.size());
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (!present[u * n + v]) candidates.emplace_back(u, v);

  // Partial Fisher-Yates: the first `extra` candidates become edges.
  const std::size_t extra = wanted - edges.size();
  for (std::size_t i = 0; i < extra; ++i) {
    const std::size_t j = i + rng.below(candidates.size() - i);
    std::swap(candidates[i], candidates[j]);
    edges.push_back(candidates[i]);
  }
  return Topology(n, edges, seed);
}

void write_edge_list(std::ostream& os, const Topology& topology) {
  os << "N " << topology.size() << '\n';
  for (const auto& [u, v] : topology.edges()) os << u << ' ' << v << '\n';
}

std::string to_edge_list(const Topology& topology) {
  std::ostringstream os;
  write_edge_list(os, topology);
  return os.str();
}

Topology read_edge_list(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(is, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line()) throw ValidationError("edge list: empty input");
  std::istringstream header(line);
  std::string tag;
  long long n = -1;
  if (!(header >> tag >> n) || tag != "N" || n < 1) {
    throw ValidationError("edge list: expected \"N <count>\" on line " +
                          std::to_string(lineno));
  }
  std::vector<Edge> edges;
  while (next_line()) {
    std::istringstream row(line);
    long long u = -1;
    long long v = -1;
    std::string rest;
    if (!(row >> u >> v) || (row >> rest) || u < 0 || v < 0) {
      throw ValidationError("edge list: malformed edge on line " +
                            std::to_string(lineno));
    }
    edges.emplace_back(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
  }
  return Topology(static_cast<std::size_t>(n), edges);
}

std::string_view to_string(Stochasticity kind) {
  switch (kind) {
    case Stochasticity::left: return "left_stochastic";
    case Stochasticity::right: return "right_stochastic";
    case Stochasticity::doubly: return "doubly_stochastic";
  }
  return "unknown";
}

std::string_view to_string(WeightRule rule) {
  switch (rule) {
    case WeightRule::averaging: return "averaging";
    case WeightRule::relative_degree: return "relative_degree";
    case WeightRule::metropolis: return "metropolis";
    case WeightRule::identity: return "identity";
  }
  return "unknown";
}

WeightRule parse_weight_rule(std::string_view name) {
  for (auto r : {WeightRule::averaging, WeightRule::relative_degree,
                 WeightRule::metropolis, WeightRule::identity}) {
    if (to_string(r) == name) return r;
  }
  throw ValidationError("unknown combination rule \"" + std::string(name) +
                        "\"");
}

CombinationMatrix CombinationMatrix::identity(std::size_t n) {
  return {DenseMatrix::identity(n), Stochasticity::doubly,
          WeightRule::identity};
}

void validate(const CombinationMatrix& c, const Topology* topology) {
  const DenseMatrix& m = c.matrix;
  if (!m.is_square()) throw DimensionError("combination matrix is not square");
  const std::size_t n = m.rows();
  if (topology && topology->size() != n) {
    throw DimensionError("combination matrix size " + std::to_string(n) +
                         " does not match topology size " +
                         std::to_string(topology->size()));
  }
  for (std::size_t l = 0; l < n; ++l)
    for (std::size_t k = 0; k < n; ++k) {
      if (m(l, k) < 0.0) {
        throw ValidationError("combination matrix has negative entry at (" +
                              std::to_string(l) + ", " + std::to_string(k) +
                              ")");
      }
      if (topology && m(l, k) != 0.0 && !topology->linked(l, k)) {
        throw ValidationError("combination weight (" + std::to_string(l) +
                              ", " + std::to_string(k) +
                              ") links nodes that are not neighbors");
      }
    }
  const bool need_cols = c.kind != Stochasticity::right;
  const bool need_rows = c.kind != Stochasticity::left;
  for (std::size_t i = 0; i < n; ++i) {
    double col = 0.0;
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      col += m(j, i);
      row += m(i, j);
    }
    if (need_cols && std::abs(col - 1.0) > kStochasticTol) {
      throw ValidationError("column " + std::to_string(i) + " sums to " +
                            std::to_string(col) + ", expected 1 for a " +
                            std::string(to_string(c.kind)) + " matrix");
    }
    if (need_rows && std::abs(row - 1.0) > kStochasticTol) {
      throw ValidationError("row " + std::to_string(i) + " sums to " +
                            std::to_string(row) + ", expected 1 for a " +
                            std::string(to_string(c.kind)) + " matrix");
    }
  }
}

CombinationMatrix build_A(const Topology& topology, WeightRule rule) {
  const std::size_t n = topology.size();
  if (rule == WeightRule::identity) return CombinationMatrix::identity(n);

  DenseMatrix a(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& nbrs = topology.neighborhood(k);
    const double nk = static_cast<double>(topology.closed_degree(k));
    switch (rule) {
      case WeightRule::averaging: {
        double off = 0.0;
        for (std::size_t l : nbrs) {
          if (l == k) continue;
          a(l, k) = 1.0 / nk;
          off += a(l, k);
        }
        a(k, k) = 1.0 - off;
        break;
      }
      case WeightRule::relative_degree: {
        double denom = 0.0;
        for (std::size_t m : nbrs)
          denom += static_cast<double>(topology.closed_degree(m));
        for (std::size_t l : nbrs)
          a(l, k) = static_cast<double>(topology.closed_degree(l)) / denom;
        break;
      }
      case WeightRule::metropolis: {
        double off = 0.0;
        for (std::size_t l : nbrs) {
          if (l == k) continue;
          const double nl = static_cast<double>(topology.closed_degree(l));
          a(l, k) = 1.0 / std::max(nl, nk);
          off += a(l, k);
        }
        a(k, k) = 1.0 - off;
        break;
      }
      case WeightRule::identity:
        break;
    }
  }
  const Stochasticity kind = rule == WeightRule::metropolis
                                 ? Stochasticity::doubly
                                 : Stochasticity::left;
  return {std::move(a), kind, rule};
}

CombinationMatrix build_C(const Topology& topology, WeightRule rule) {
  if (rule == WeightRule::identity)
    return CombinationMatrix::identity(topology.size());
  CombinationMatrix a = build_A(topology, rule);
  const Stochasticity kind = a.kind == Stochasticity::doubly
                                 ? Stochasticity::doubly
                                 : Stochasticity::right;
  return {transpose(a.matrix), kind, rule};
}

bool check_primitive(const DenseMatrix& p) {
  if (!p.is_square()) throw DimensionError("check_primitive: not square");
  const std::size_t n = p.rows();
  if (n == 0) return false;
  using Pattern = std::vector<unsigned char>;
  Pattern base(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (p(i, j) < 0.0) {
        throw ValidationError("check_primitive: negative entry at (" +
                              std::to_string(i) + ", " + std::to_string(j) +
                              ")");
      }
      base[i * n + j] = p(i, j) > 0.0;
    }

  auto multiply = [n](const Pattern& a, const Pattern& b) {
    Pattern c(n * n, 0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) {
        if (!a[i * n + k]) continue;
        for (std::size_t j = 0; j < n; ++j) c[i * n + j] |= b[k * n + j];
      }
    return c;
  };

  // Wielandt: a primitive matrix has a positive power at (n-1)^2 + 1.
  std::size_t exponent = (n - 1) * (n - 1) + 1;
  Pattern result;
  bool have_result = false;
  Pattern square = base;
  while (exponent > 0) {
    if (exponent & 1u) {
      result = have_result ? multiply(result, square) : square;
      have_result = true;
    }
    exponent >>= 1u;
    if (exponent > 0) square = multiply(square, square);
  }
  return std::all_of(result.begin(), result.end(),
                     [](unsigned char x) { return x != 0; });
}

PerronData perron_theta(const CombinationMatrix& a1,
                        const CombinationMatrix& a2) {
  if (a1.size() != a2.size()) {
    throw DimensionError("perron_theta: A1 is " + std::to_string(a1.size()) +
                         " nodes, A2 is " + std::to_string(a2.size()));
  }
  DenseMatrix composite = mat_mul(a1.matrix, a2.matrix);
  const std::size_t n = composite.rows();
  for (std::size_t k = 0; k < n; ++k) {
    double col = 0.0;
    for (std::size_t l = 0; l < n; ++l) col += composite(l, k);
    if (std::abs(col - 1.0) > 1e-10) {
      throw AssumptionError(
          "composite combination matrix A1*A2 is not left-stochastic (column " +
          std::to_string(k) + " sums to " + std::to_string(col) + ")");
    }
  }
  if (!check_primitive(composite)) {
    throw AssumptionError(
        "composite combination matrix A1*A2 is not primitive, so its Perron "
        "vector is not unique");
  }
  EigenPair ep = dominant_eigpair(composite);
  return {std::move(ep.vector), std::move(composite)};
}

Assumption3Report check_assumption3(const DenseVector& theta,
                                    const CombinationMatrix& a2,
                                    const DenseVector& omega0,
                                    const CombinationMatrix& c, double tol) {
  const std::size_t n = theta.size();
  if (a2.size() != n || c.size() != n || omega0.size() != n) {
    throw DimensionError("check_assumption3: theta has " + std::to_string(n) +
                         " entries but A2, C, omega0 have " +
                         std::to_string(a2.size()) + ", " +
                         std::to_string(c.size()) + ", " +
                         std::to_string(omega0.size()));
  }
  double top = 0.0;
  for (double w : omega0) {
    if (!(w > 0.0) || w > 1.0 + 1e-12) {
      throw ValidationError(
          "check_assumption3: normalized step sizes must lie in (0, 1]");
    }
    top = std::max(top, w);
  }
  if (std::abs(top - 1.0) > 1e-12) {
    throw ValidationError(
        "check_assumption3: normalized step sizes must have maximum 1");
  }
  DenseVector z = mat_vec(a2.matrix, theta);
  for (std::size_t k = 0; k < n; ++k) z[k] *= omega0[k];
  const DenseVector v = mat_vec(c.matrix, z);

  Assumption3Report report;
  report.c0_estimate =
      std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(n);
  for (double x : v)
    report.max_deviation =
        std::max(report.max_deviation, std::abs(x - report.c0_estimate));
  report.satisfied = report.max_deviation <= tol;
  return report;
}

DenseVector design_step_sizes_for_assumption3(const CombinationMatrix& a1,
                                              const CombinationMatrix& a2,
                                              double mu_max) {
  if (!(mu_max > 0.0)) {
    throw ValidationError("design_step_sizes_for_assumption3: mu_max must be "
                          "positive");
  }
  const PerronData perron = perron_theta(a1, a2);
  const DenseVector u = mat_vec(a2.matrix, perron.theta);
  double smallest = u[0];
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (!(u[k] > 0.0)) {
      throw ValidationError("design_step_sizes_for_assumption3: (A2 theta)_" +
                            std::to_string(k) +
                            " is zero; no step size can compensate");
    }
    smallest = std::min(smallest, u[k]);
  }
  DenseVector mu(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) mu[k] = mu_max * smallest / u[k];
  return mu;
}

}  // namespace dpo
