#include <doctest.h>

#include <cmath>

#include "dpo/error.hpp"
#include "dpo/linalg.hpp"
#include "dpo/rng.hpp"
#include "helpers.hpp"

using namespace dpo;

namespace {

DenseMatrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  NormalStream g(seed);
  DenseMatrix m(r, c);
  for (double& x : m.entries()) x = g();
  return m;
}

}  // namespace

TEST_SUITE("numerics") {

TEST_CASE("dense types reject non-finite entries and bad shapes") {
  CHECK_THROWS_AS(DenseVector({1.0, NAN}), ValidationError);
  CHECK_THROWS_AS(DenseMatrix(2, 2, std::vector<double>(3, 0.0)), DimensionError);
  CHECK_THROWS_AS(DenseMatrix({{1.0, 2.0}, {3.0}}), DimensionError);
}

TEST_CASE("mat_mul small cases") {
  DenseMatrix b = random_matrix(3, 3, 1);
  CHECK(mat_mul(DenseMatrix::identity(3), b) == b);
  CHECK(mat_mul(DenseMatrix{{1, 2}, {3, 4}}, DenseMatrix{{0, 1}, {1, 0}}) ==
        DenseMatrix{{2, 1}, {4, 3}});
  DenseVector v = mat_vec(DenseMatrix{{0.7, 0.4}, {0.3, 0.6}},
                          DenseVector{4.0 / 7, 3.0 / 7});
  CHECK(v[0] == doctest::Approx(4.0 / 7).epsilon(1e-15));
  CHECK(v[1] == doctest::Approx(3.0 / 7).epsilon(1e-15));
  CHECK_THROWS_AS(mat_mul(DenseMatrix(2, 3), DenseMatrix(2, 3)), DimensionError);
}

TEST_CASE("parallel product is bit-identical to the serial reference") {
  for (std::size_t n : {3u, 70u, 150u}) {
    DenseMatrix a = random_matrix(n, n + 1, n);
    DenseMatrix b = random_matrix(n + 1, n, n + 7);
    CHECK(mat_mul(a, b) == serial::mat_mul(a, b));
  }
}

TEST_CASE("mat_t_vec matches the explicit transpose") {
  DenseMatrix a = random_matrix(5, 3, 4);
  DenseVector x{1, -2, 0.5, 3, 0.25};
  CHECK(max_abs_diff(mat_t_vec(a, x), mat_vec(transpose(a), x)) < 1e-14);
}

TEST_CASE("kron examples") {
  CHECK(kron(DenseMatrix::identity(2), DenseMatrix::identity(3)) ==
        DenseMatrix::identity(6));
  CHECK(kron(DenseMatrix{{1, 2}, {0, 1}}, DenseMatrix{{1}, {1}}) ==
        DenseMatrix{{1, 2}, {1, 2}, {0, 1}, {0, 1}});
  CHECK(kron(DenseMatrix{{1}, {1}}, DenseMatrix::identity(2)) ==
        DenseMatrix{{1, 0}, {0, 1}, {1, 0}, {0, 1}});
}

TEST_CASE("kron mixed-product property") {
  DenseMatrix a = random_matrix(2, 3, 1), b = random_matrix(3, 2, 2);
  DenseMatrix c = random_matrix(3, 2, 3), d = random_matrix(2, 2, 4);
  DenseMatrix lhs = mat_mul(kron(a, b), kron(c, d));
  DenseMatrix rhs = kron(mat_mul(a, c), mat_mul(b, d));
  CHECK(max_abs_diff(lhs, rhs) < 1e-12);
}

TEST_CASE("linear solves") {
  DenseVector b{1, 2, 3, 4};
  CHECK(solve_linear(DenseMatrix::identity(4), b) == b);
  DenseVector x = solve_linear(DenseMatrix{{2, 0}, {0, 4}}, DenseVector{2, 8});
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(2.0));

  DenseMatrix a = random_matrix(10, 10, 11);
  for (std::size_t i = 0; i < 10; ++i) a(i, i) += 10.0;
  DenseVector rhs = DenseVector(std::vector<double>(10, 1.0));
  DenseVector sol = solve_linear(a, rhs);
  CHECK(norm_inf(mat_vec(a, sol) - rhs) < 1e-12);
}

TEST_CASE("singular solve carries the pivot") {
  try {
    solve_linear(DenseMatrix{{1, 2}, {2, 4}}, DenseVector{1, 1});
    FAIL("expected SingularMatrixError");
  } catch (const SingularMatrixError& e) {
    CHECK(std::abs(e.pivot()) < 1e-12);
  }
}

TEST_CASE("dominant eigenpair") {
  EigenPair d = dominant_eigpair(DenseMatrix{{1, 0}, {0, 0.5}});
  CHECK(d.value == doctest::Approx(1.0));
  CHECK(d.vector[0] == doctest::Approx(1.0));
  CHECK(std::abs(d.vector[1]) < 1e-11);

  EigenPair p = dominant_eigpair(DenseMatrix{{0.7, 0.4}, {0.3, 0.6}});
  CHECK(p.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p.vector[0] == doctest::Approx(4.0 / 7).epsilon(1e-11));
  CHECK(p.vector[1] == doctest::Approx(3.0 / 7).epsilon(1e-11));

  const Topology t = generate_topology(12, 3.0, 5);
  EigenPair u = dominant_eigpair(build_A(t, WeightRule::metropolis).matrix);
  for (double x : u.vector) CHECK(x == doctest::Approx(1.0 / 12).epsilon(1e-9));
}

TEST_CASE("dominant eigenpair reports non-convergence") {
  // A pure rotation has no dominant eigenvalue.
  CHECK_THROWS_AS(dominant_eigpair(DenseMatrix{{0, 1}, {1, 0}}, 1e-12, 1000),
                  ConvergenceError);
}

TEST_CASE("spectral radius") {
  CHECK(spectral_radius(DenseMatrix{{0.5, 0}, {0, 0.2}}).value ==
        doctest::Approx(0.5));
  CHECK(spectral_radius(0.3 * DenseMatrix::identity(5)).value ==
        doctest::Approx(0.3));
  const Topology t = generate_topology(15, 4.0, 9);
  SpectralEstimate s = spectral_radius(build_A(t, WeightRule::averaging).matrix);
  CHECK(s.converged);
  CHECK(s.value == doctest::Approx(1.0).epsilon(1e-10));

  SpectralEstimate flip = spectral_radius(DenseMatrix{{0, 1}, {1, 0}}, 1e-12, 500);
  CHECK_FALSE(flip.converged);
  CHECK(flip.value == doctest::Approx(1.0));
}

TEST_CASE("symmetric max eigenvalue") {
  CHECK(symmetric_max_eigenvalue(DenseMatrix{{2, 0}, {0, 8}}) ==
        doctest::Approx(8.0));
  CHECK(symmetric_max_eigenvalue(DenseMatrix{{2, 1}, {1, 2}}) ==
        doctest::Approx(3.0));
}

TEST_CASE("normal stream is reproducible and roughly standard") {
  NormalStream a(42), b(42);
  double sum = 0, sq = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = a();
    CHECK(x == b());
    sum += x;
    sq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.05));
}

}
