#include <doctest.h>

#include <queue>
#include <sstream>

#include "dpo/error.hpp"
#include "dpo/linalg.hpp"
#include "dpo/network.hpp"
#include "helpers.hpp"

using namespace dpo;
using dpo::test::left;
using dpo::test::path_topology;

namespace {

// Columns written out as rows, then transposed back.
DenseMatrix from_columns(DenseMatrix cols) { return transpose(cols); }

bool connected_by_bfs(const Topology& t) {
  std::vector<bool> seen(t.size(), false);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = true;
  std::size_t count = 1;
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop();
    for (std::size_t v = 0; v < t.size(); ++v)
      if (!seen[v] && t.linked(u, v)) {
        seen[v] = true;
        ++count;
        q.push(v);
      }
  }
  return count == t.size();
}

}  // namespace

TEST_SUITE("network") {

TEST_CASE("topology construction") {
  Topology t = path_topology();
  CHECK(t.linked(0, 0));
  CHECK(t.linked(0, 1));
  CHECK_FALSE(t.linked(0, 2));
  CHECK(t.neighborhood(1) == std::vector<std::size_t>{0, 1, 2});
  CHECK(t.closed_degree(0) == 2);
  CHECK(t.edge_count() == 2);
  CHECK(t.average_degree() == doctest::Approx(4.0 / 3));
  CHECK_THROWS_AS(Topology(3, {{0, 1}}), ValidationError);
  CHECK_THROWS_AS(Topology(2, {{0, 5}}), ValidationError);
}

TEST_CASE("generate_topology") {
  Topology two = generate_topology(2, 1.0, 99);
  CHECK(two.edges() == std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}});

  Topology t = generate_topology(50, 4.0, 7);
  CHECK(connected_by_bfs(t));
  CHECK(t.edge_count() >= 87);
  CHECK(t.edge_count() <= 113);
  CHECK(std::abs(t.average_degree() - 4.0) <= 0.5);
  for (std::size_t k = 0; k < 50; ++k) CHECK(t.closed_degree(k) >= 2);
  CHECK(generate_topology(50, 4.0, 7) == t);
  CHECK_FALSE(generate_topology(50, 4.0, 8) == t);

  CHECK_THROWS_AS(generate_topology(5, 5.0, 1), ValidationError);
  CHECK_THROWS_AS(generate_topology(5, 0.5, 1), ValidationError);
}

TEST_CASE("generated graphs are connected across seeds and sizes") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Topology t = generate_topology(3 + seed * 3, 2.5, seed);
    CHECK(connected_by_bfs(t));
    CHECK(std::abs(t.average_degree() - 2.5) <= 0.5);
  }
}

TEST_CASE("edge list round trip") {
  Topology t = generate_topology(20, 3.0, 4);
  std::istringstream in(to_edge_list(t));
  CHECK(read_edge_list(in) == t);
  std::istringstream bad("N 3\n0 x\n");
  CHECK_THROWS_AS(read_edge_list(bad), ValidationError);
}

TEST_CASE("build_A on the 3-node path") {
  Topology t = path_topology();
  CombinationMatrix avg = build_A(t, WeightRule::averaging);
  CHECK(max_abs_diff(avg.matrix, from_columns({{0.5, 0.5, 0},
                                               {1.0 / 3, 1.0 / 3, 1.0 / 3},
                                               {0, 0.5, 0.5}})) < 1e-15);
  CHECK(avg.kind == Stochasticity::left);

  CombinationMatrix rel = build_A(t, WeightRule::relative_degree);
  CHECK(max_abs_diff(rel.matrix, from_columns({{0.4, 0.6, 0},
                                               {2.0 / 7, 3.0 / 7, 2.0 / 7},
                                               {0, 0.6, 0.4}})) < 1e-15);

  CombinationMatrix met = build_A(t, WeightRule::metropolis);
  DenseMatrix expected{{2.0 / 3, 1.0 / 3, 0},
                       {1.0 / 3, 1.0 / 3, 1.0 / 3},
                       {0, 1.0 / 3, 2.0 / 3}};
  CHECK(max_abs_diff(met.matrix, expected) < 1e-15);
  CHECK(met.matrix == transpose(met.matrix));
  CHECK(met.kind == Stochasticity::doubly);
  CHECK_NOTHROW(validate(met, &t));
}

TEST_CASE("build_C is the transpose and right-stochastic") {
  Topology t = path_topology();
  CHECK(build_C(t, WeightRule::identity).matrix == DenseMatrix::identity(3));
  for (WeightRule r : {WeightRule::averaging, WeightRule::relative_degree}) {
    CombinationMatrix c = build_C(t, r);
    CHECK(c.matrix == transpose(build_A(t, r).matrix));
    CHECK(c.kind == Stochasticity::right);
    CHECK_NOTHROW(validate(c, &t));
  }
}

TEST_CASE("validate rejects bad matrices") {
  Topology t = path_topology();
  CombinationMatrix a = build_A(t, WeightRule::averaging);
  a.kind = Stochasticity::right;
  CHECK_THROWS_AS(validate(a), ValidationError);

  CombinationMatrix neg = left({{1.5, 0}, {-0.5, 1}});
  CHECK_THROWS_AS(validate(neg), ValidationError);

  CombinationMatrix off = left({{0.5, 0, 0}, {0, 0.5, 0}, {0.5, 0.5, 1}});
  CHECK_NOTHROW(validate(off));
  CHECK_THROWS_AS(validate(off, &t), ValidationError);
}

TEST_CASE("rule matrices on random graphs are stochastic and local") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Topology t = generate_topology(30, 4.0, seed);
    for (WeightRule r : {WeightRule::averaging, WeightRule::relative_degree,
                         WeightRule::metropolis}) {
      CHECK_NOTHROW(validate(build_A(t, r), &t));
      CHECK_NOTHROW(validate(build_C(t, r), &t));
    }
  }
}

TEST_CASE("primitivity") {
  CHECK_FALSE(check_primitive(DenseMatrix::identity(3)));
  CHECK(check_primitive(DenseMatrix{{0.7, 0.4}, {0.3, 0.6}}));
  CHECK_FALSE(check_primitive(DenseMatrix{{0, 1}, {1, 0}}));
  // Directed 3-cycle with one self-loop is primitive.
  DenseMatrix cyc{{0.5, 0, 1}, {0.5, 0, 0}, {0, 1, 0}};
  CHECK(check_primitive(cyc));
  CHECK(check_primitive(transpose(cyc)));
  CHECK_THROWS_AS(check_primitive(DenseMatrix{{1, -1}, {0, 1}}), ValidationError);

  Topology t = generate_topology(25, 3.0, 3);
  DenseMatrix a = build_A(t, WeightRule::relative_degree).matrix;
  CHECK(check_primitive(a) == check_primitive(transpose(a)));
  CHECK(check_primitive(a));
}

TEST_CASE("perron vector") {
  Topology t = generate_topology(10, 3.0, 2);
  PerronData p = perron_theta(CombinationMatrix::identity(10),
                              build_A(t, WeightRule::metropolis));
  for (double x : p.theta) CHECK(x == doctest::Approx(0.1).epsilon(1e-9));

  PerronData q = perron_theta(left({{0.7, 0.4}, {0.3, 0.6}}),
                              CombinationMatrix::identity(2));
  CHECK(q.theta[0] == doctest::Approx(4.0 / 7).epsilon(1e-11));
  CHECK(q.theta[1] == doctest::Approx(3.0 / 7).epsilon(1e-11));

  CHECK_THROWS_AS(perron_theta(CombinationMatrix::identity(3),
                               CombinationMatrix::identity(3)),
                  AssumptionError);
}

TEST_CASE("constancy check on the weighted step sizes") {
  Topology t = generate_topology(20, 4.0, 6);
  CombinationMatrix a = build_A(t, WeightRule::metropolis);
  PerronData p = perron_theta(CombinationMatrix::identity(20), a);
  for (WeightRule r : {WeightRule::averaging, WeightRule::relative_degree,
                       WeightRule::identity}) {
    Assumption3Report rep =
        check_assumption3(p.theta, a, DenseVector::ones(20), build_C(t, r));
    CHECK(rep.satisfied);
    CHECK(rep.c0_estimate == doctest::Approx(1.0 / 20).epsilon(1e-10));
  }

  CombinationMatrix a1 = left({{0.7, 0.4}, {0.3, 0.6}});
  CombinationMatrix eye = CombinationMatrix::identity(2);
  DenseVector theta = perron_theta(a1, eye).theta;
  Assumption3Report rep =
      check_assumption3(theta, eye, DenseVector::ones(2), eye);
  CHECK_FALSE(rep.satisfied);
  CHECK(rep.max_deviation == doctest::Approx(1.0 / 14).epsilon(1e-9));

  DenseVector mu = design_step_sizes_for_assumption3(a1, eye, 0.01);
  CHECK(mu[0] == doctest::Approx(0.0075).epsilon(1e-10));
  CHECK(mu[1] == doctest::Approx(0.01).epsilon(1e-10));
  CHECK(check_assumption3(theta, eye, (1.0 / 0.01) * mu, eye).satisfied);
}

TEST_CASE("design steps with a doubly-stochastic composite are uniform") {
  Topology t = generate_topology(12, 3.0, 8);
  DenseVector mu = design_step_sizes_for_assumption3(
      build_A(t, WeightRule::metropolis), CombinationMatrix::identity(12), 0.05);
  for (double m : mu) CHECK(m == doctest::Approx(0.05).epsilon(1e-9));
}

TEST_CASE("design steps satisfy the check with C = I on random graphs") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Topology t = generate_topology(30, 4.0, seed);
    CombinationMatrix a = build_A(t, WeightRule::averaging);
    CombinationMatrix eye = CombinationMatrix::identity(30);
    for (CombinationPair pair : {preset_atc(a), preset_cta(a)}) {
      DenseVector mu = design_step_sizes_for_assumption3(pair.a1, pair.a2, 1.0);
      DenseVector theta = perron_theta(pair.a1, pair.a2).theta;
      CHECK(check_assumption3(theta, pair.a2, mu, eye).satisfied);
    }
  }
}

TEST_CASE("rule names round trip") {
  for (WeightRule r : {WeightRule::averaging, WeightRule::relative_degree,
                       WeightRule::metropolis, WeightRule::identity})
    CHECK(parse_weight_rule(to_string(r)) == r);
  CHECK_THROWS_AS(parse_weight_rule("uniform"), ValidationError);
}

}
