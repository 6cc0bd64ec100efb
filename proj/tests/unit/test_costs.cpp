#include <doctest.h>

#include <sstream>

#include "dpo/costs.hpp"
#include "dpo/error.hpp"
#include "dpo/linalg.hpp"
#include "dpo/rng.hpp"
#include "helpers.hpp"

using namespace dpo;
using dpo::test::scalar_cost;
using dpo::test::two_scalar_costs;

namespace {

DenseVector central_difference(const CostModel& cost, DenseVector w, double h) {
  DenseVector g(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double w0 = w[i];
    w[i] = w0 + h;
    const double up = cost.value(w.span());
    w[i] = w0 - h;
    const double down = cost.value(w.span());
    w[i] = w0;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

QuadraticCost doubled_rows(const QuadraticCost& c) {
  DenseMatrix x(2 * c.x().rows(), c.x().cols());
  DenseVector y(2 * c.y().size());
  for (std::size_t r = 0; r < c.x().rows(); ++r)
    for (std::size_t copy = 0; copy < 2; ++copy) {
      for (std::size_t j = 0; j < x.cols(); ++j)
        x(2 * r + copy, j) = c.x()(r, j);
      y[2 * r + copy] = c.y()[r];
    }
  return QuadraticCost(x, y);
}

}  // namespace

TEST_SUITE("costs") {

TEST_CASE("sampling") {
  CostEnsemble e = sample_ensemble(50, 4, 6, 11);
  CHECK(e.size() == 50);
  CHECK(e.dim() == 4);
  CHECK(e[7].x().rows() == 6);
  CHECK(e[7].x().cols() == 4);
  CHECK(sample_ensemble(50, 4, 6, 11) == e);
  CHECK_FALSE(sample_ensemble(50, 4, 6, 12) == e);

  CostEnsemble big = sample_ensemble(1000, 4, 6, 3);
  double sum = 0;
  for (const auto& c : big.costs())
    for (double x : c.x().entries()) sum += x;
  CHECK(std::abs(sum / (1000.0 * 24)) < 0.02);

  CostEnsemble same = sample_identical_ensemble(5, 3, 4, 8);
  for (std::size_t k = 1; k < 5; ++k) CHECK(same[k] == same[0]);
  CHECK(same[0] == sample_ensemble(5, 3, 4, 8)[0]);
}

TEST_CASE("gradient examples") {
  QuadraticCost c = scalar_cost(1.0);
  CHECK(gradient(c, DenseVector{0.0})[0] == doctest::Approx(-2.0));

  CostEnsemble e = sample_ensemble(3, 3, 5, 1);
  for (const auto& cost : e.costs()) {
    // Own least-squares minimizer.
    CostEnsemble single({cost});
    DenseVector w = global_optimum(single);
    CHECK(norm_inf(gradient(cost, w)) < 1e-10);
  }
}

TEST_CASE("gradient against central differences") {
  SplitMix64 u(5);
  for (std::uint64_t trial = 0; trial < 25; ++trial) {
    CostEnsemble e = sample_ensemble(1, 3, 5, trial + 1);
    DenseVector w(3);
    for (double& x : w) x = u.uniform(-2, 2);
    DenseVector fd = central_difference(e[0], w, 1e-5);
    DenseVector g = gradient(e[0], w);
    CHECK(norm2(fd - g) <= 1e-5 * std::max(1.0, norm2(g)));
  }
}

TEST_CASE("accumulate_gradient adds a weighted gradient") {
  CostEnsemble e = sample_ensemble(1, 2, 3, 4);
  DenseVector w{0.3, -0.1};
  DenseVector out{1.0, 1.0};
  e[0].accumulate_gradient(w.span(), 0.5, out.span());
  DenseVector expect = DenseVector{1.0, 1.0} + 0.5 * gradient(e[0], w);
  CHECK(max_abs_diff(out, expect) < 1e-15);
}

TEST_CASE("hessian and bounds") {
  CHECK(hessian(scalar_cost(1.0)) == DenseMatrix{{2.0}});
  QuadraticCost id(DenseMatrix::identity(2), DenseVector{0, 0});
  CHECK(hessian(id) == 2.0 * DenseMatrix::identity(2));
  HessianBounds b = hessian_bounds(id);
  CHECK(b.lambda_min == doctest::Approx(2.0));
  CHECK(b.lambda_max == doctest::Approx(2.0));

  QuadraticCost d(DenseMatrix{{1, 0}, {0, 2}}, DenseVector{0, 0});
  b = hessian_bounds(d);
  CHECK(b.lambda_min == doctest::Approx(2.0));
  CHECK(b.lambda_max == doctest::Approx(8.0));

  QuadraticCost zero(DenseMatrix(2, 2), DenseVector{0, 0});
  b = hessian_bounds(zero);
  CHECK(b.lambda_min == 0.0);
  CHECK(b.lambda_max == 0.0);

  // Fewer rows than columns: rank-deficient Hessian.
  CostEnsemble wide = sample_ensemble(1, 4, 2, 9);
  CHECK(std::abs(wide.bounds()[0].lambda_min) < 1e-8);
  CostEnsemble tall = sample_ensemble(10, 4, 6, 9);
  for (const auto& hb : tall.bounds()) CHECK(hb.lambda_min > 0);
}

TEST_CASE("global optimum") {
  DenseVector w = global_optimum(two_scalar_costs());
  CHECK(w[0] == doctest::Approx(2.0));

  QuadraticCost sq(DenseMatrix{{2, 1}, {1, 3}}, DenseVector{1, 2});
  DenseVector x = global_optimum(CostEnsemble({sq}));
  CHECK(max_abs_diff(x, solve_linear(sq.x(), sq.y())) < 1e-12);

  CostEnsemble e = sample_ensemble(20, 4, 6, 3);
  DenseVector opt = global_optimum(e);
  DenseVector total(4);
  for (const auto& c : e.costs()) total = total + gradient(c, opt);
  CHECK(norm_inf(total) < 1e-9);

  CostEnsemble degenerate({QuadraticCost(DenseMatrix(1, 2), DenseVector{1})});
  CHECK_THROWS_AS(global_optimum(degenerate), AssumptionError);
}

TEST_CASE("stacked gradient") {
  DenseVector g = stacked_gradient(two_scalar_costs(), DenseVector{2.0});
  CHECK(g == DenseVector{2.0, -2.0});

  CostEnsemble e = sample_ensemble(8, 3, 5, 6);
  DenseVector s = stacked_gradient(e, global_optimum(e));
  for (std::size_t j = 0; j < 3; ++j) {
    double sum = 0;
    for (std::size_t k = 0; k < 8; ++k) sum += s[k * 3 + j];
    CHECK(std::abs(sum) < 1e-9);
  }
}

TEST_CASE("step-size bound") {
  CombinationMatrix eye1 = CombinationMatrix::identity(1);
  CHECK(max_step_size(0, eye1, CostEnsemble({scalar_cost(1.0)})) ==
        doctest::Approx(1.0));
  QuadraticCost id(DenseMatrix::identity(2), DenseVector{0, 0});
  CHECK(max_step_size(0, eye1, CostEnsemble({id})) == doctest::Approx(1.0));

  CostEnsemble e = sample_ensemble(6, 3, 5, 2);
  std::vector<QuadraticCost> doubled;
  for (const auto& c : e.costs()) doubled.push_back(doubled_rows(c));
  CostEnsemble e2(doubled);
  Topology t = generate_topology(6, 2.0, 1);
  CombinationMatrix c = build_C(t, WeightRule::averaging);
  for (std::size_t k = 0; k < 6; ++k)
    CHECK(max_step_size(k, c, e2) ==
          doctest::Approx(0.5 * max_step_size(k, c, e)).epsilon(1e-10));

  CostEnsemble with_zero({scalar_cost(1.0), QuadraticCost(DenseMatrix{{0.0}},
                                                          DenseVector{0.0})});
  CHECK_THROWS_AS(max_step_size(1, CombinationMatrix::identity(2), with_zero),
                  AssumptionError);
}

TEST_CASE("hessian lower-bound condition") {
  CostEnsemble e = sample_ensemble(6, 3, 5, 2);
  CHECK(check_assumption1(CombinationMatrix::identity(6), e).satisfied);
  Topology t = generate_topology(6, 2.0, 1);
  CHECK(check_assumption1(build_C(t, WeightRule::averaging), e).satisfied);

  std::vector<QuadraticCost> costs = e.costs();
  costs[2] = QuadraticCost(DenseMatrix(5, 3), DenseVector(5));
  CostEnsemble z(costs);
  Assumption1Report rep = check_assumption1(CombinationMatrix::identity(6), z);
  CHECK_FALSE(rep.satisfied);
  CHECK(rep.weighted_min[2] == 0.0);
  // Neighbors compensate under averaging.
  CHECK(check_assumption1(build_C(t, WeightRule::averaging), z).satisfied);
}

TEST_CASE("ensemble text round trip") {
  CostEnsemble e = sample_ensemble(4, 3, 5, 21);
  std::istringstream in(to_text(e));
  CHECK(read_ensemble(in) == e);
  std::istringstream bad("2 1 1\n1\n");
  CHECK_THROWS_AS(read_ensemble(bad), ValidationError);
}

}
