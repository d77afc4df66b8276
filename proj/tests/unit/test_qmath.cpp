#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "nmsvr/error.hpp"
#include "nmsvr/qmath.hpp"
#include "oracles.hpp"

using namespace nmsvr;

namespace {

ComplexMatrix naive_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j)
      for (std::size_t k = 0; k < a.cols(); ++k) c(i, j) += a(i, k) * b(k, j);
  return c;
}

}  // namespace

TEST_SUITE("qmath") {

TEST_CASE("tensor products of Paulis") {
  const auto i2 = ComplexMatrix::identity(2);
  CHECK(max_abs_diff(tensor(i2, i2), ComplexMatrix::identity(4)) == 0.0);

  const auto zi = tensor(ops::pauli_z(), i2);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 4; ++c) {
      const double want = r != c ? 0.0 : (r < 2 ? 1.0 : -1.0);
      CHECK(zi(r, c) == cplx(want, 0.0));
    }

  const auto xx = tensor(ops::pauli_x(), ops::pauli_x());
  CHECK(max_abs_diff(naive_product(xx, xx), ComplexMatrix::identity(4)) == 0.0);
  CHECK(max_abs_diff(xx * xx, naive_product(xx, xx)) == 0.0);
}

TEST_CASE("Pauli algebra in the (e, g) basis") {
  const auto x = ops::pauli_x(), y = ops::pauli_y(), z = ops::pauli_z();
  CHECK(max_abs_diff(x * y, cplx(0, 1) * z) < 1e-15);
  CHECK(z(0, 0) == cplx(1, 0));
  CHECK(z(1, 1) == cplx(-1, 0));
  CHECK(max_abs_diff(ops::sigma_plus(), ops::sigma_minus().adjoint()) == 0.0);
  CHECK(ops::sigma_plus()(0, 1) == cplx(1, 0));
  const auto b = ops::annihilation(4);
  CHECK(std::abs(b(2, 3) - std::sqrt(3.0)) < 1e-15);
}

TEST_CASE("products reject non-conformable operands") {
  CHECK_THROWS_AS(ComplexMatrix(2, 3) * ComplexMatrix(2, 3), DimensionError);
  CHECK_THROWS_AS(ComplexMatrix(2, 2) + ComplexMatrix(3, 3), DimensionError);
  CHECK_THROWS_AS(ComplexMatrix(2, 3).trace(), DimensionError);
}

TEST_CASE("random products match a naive triple loop") {
  std::mt19937_64 rng(3);
  for (std::size_t n : {2u, 5u, 16u}) {
    const auto a = oracle::from_eigen(oracle::random_hermitian(n, rng));
    const auto b = oracle::from_eigen(oracle::random_hermitian(n, rng));
    CHECK(max_abs_diff(a * b, naive_product(a, b)) < 1e-12);
  }
}

TEST_CASE("density matrix invariants are enforced") {
  CHECK_THROWS_AS(DensityMatrix(ComplexMatrix{{0.5, 0.3}, {0.1, 0.5}}), InvariantViolation);
  CHECK_THROWS_AS(DensityMatrix(ComplexMatrix{{0.6, 0.0}, {0.0, 0.6}}), InvariantViolation);
  CHECK_THROWS_AS(DensityMatrix(ComplexMatrix{{1.2, 0.0}, {0.0, -0.2}}), InvariantViolation);
  CHECK_THROWS_AS(DensityMatrix(ComplexMatrix(2, 3)), DimensionError);
  CHECK_NOTHROW(DensityMatrix(ComplexMatrix{{0.5, 0.5}, {0.5, 0.5}}));

  const auto plus = DensityMatrix::plus();
  CHECK(std::abs(expectation(ops::pauli_x(), plus) - 1.0) < 1e-15);
  CHECK(std::abs(expectation(ops::pauli_z(), DensityMatrix::excited()) - 1.0) < 1e-15);
  CHECK(std::abs(expectation(ops::pauli_z(), DensityMatrix::ground()) + 1.0) < 1e-15);
}

TEST_CASE("Hermitian eigensolver agrees with Eigen") {
  std::mt19937_64 rng(11);
  for (std::size_t n : {2u, 3u, 4u, 8u, 16u, 32u}) {
    const auto h = oracle::random_hermitian(n, rng);
    const auto ours = hermitian_eigensystem(oracle::from_eigen(h));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ref(h);
    for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(ours.values[k] - ref.eigenvalues()(k)) < 1e-10);
    // H V = V diag(values)
    const auto v = ours.vectors;
    ComplexMatrix d(n, n);
    for (std::size_t k = 0; k < n; ++k) d(k, k) = ours.values[k];
    CHECK(max_abs_diff(oracle::from_eigen(h) * v, v * d) < 1e-10);
    CHECK(max_abs_diff(v.adjoint() * v, ComplexMatrix::identity(n)) < 1e-10);
  }
}

TEST_CASE("real symmetric eigenvalues") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  const std::size_t n = 12;
  Eigen::MatrixXd a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) a(i, j) = a(j, i) = g(rng);
  std::vector<double> flat(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) flat[i * n + j] = a(i, j);
  const auto ours = symmetric_eigenvalues(flat, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(a);
  for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(ours[k] - ref.eigenvalues()(k)) < 1e-10);
}

TEST_CASE("state eigenvalues for qubits, X states and generic states") {
  std::mt19937_64 rng(17);
  for (std::size_t dim : {2u, 4u, 8u}) {
    for (int rep = 0; rep < 5; ++rep) {
      const auto rho = oracle::random_state(dim, dim, rng);
      const auto ours = rho.eigenvalues();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ref(oracle::to_eigen(rho.matrix()));
      for (std::size_t k = 0; k < dim; ++k) CHECK(std::abs(ours[k] - ref.eigenvalues()(k)) < 1e-10);
    }
  }
  // X-shaped two-qubit state
  ComplexMatrix x{{0.4, 0, 0, cplx(0.1, 0.2)}, {0, 0.1, 0.05, 0}, {0, 0.05, 0.2, 0}, {cplx(0.1, -0.2), 0, 0, 0.3}};
  const DensityMatrix rho(x);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ref(oracle::to_eigen(x));
  const auto ours = rho.eigenvalues();
  for (int k = 0; k < 4; ++k) CHECK(std::abs(ours[k] - ref.eigenvalues()(k)) < 1e-12);
}

TEST_CASE("partial trace") {
  SUBCASE("product state") {
    std::mt19937_64 rng(23);
    const auto a = oracle::random_state(2, 2, rng);
    const auto b = oracle::random_state(2, 1, rng);
    const DensityMatrix ab(tensor(a.matrix(), b.matrix()));
    const std::array<std::size_t, 2> dims{2, 2};
    const std::array<std::size_t, 1> k0{0}, k1{1};
    CHECK(max_abs_diff(partial_trace(ab, dims, k0).matrix(), a.matrix()) < 1e-14);
    CHECK(max_abs_diff(partial_trace(ab, dims, k1).matrix(), b.matrix()) < 1e-14);
  }
  SUBCASE("Bell marginal is maximally mixed") {
    const std::array<std::size_t, 2> dims{2, 2};
    const std::array<std::size_t, 1> keep{0};
    const auto m = partial_trace(DensityMatrix::bell_phi_plus(), dims, keep);
    CHECK(max_abs_diff(m.matrix(), ComplexMatrix::identity(2) * cplx(0.5, 0)) < 1e-15);
  }
  SUBCASE("index contraction on a random 2 x 2 x 4 state") {
    std::mt19937_64 rng(29);
    const auto rho = oracle::random_state(16, 16, rng);
    const std::array<std::size_t, 3> dims{2, 2, 4};
    auto idx = [](std::size_t a, std::size_t q, std::size_t n) { return (a * 2 + q) * 4 + n; };
    ComplexMatrix want(4, 4);
    for (std::size_t a = 0; a < 2; ++a)
      for (std::size_t q = 0; q < 2; ++q)
        for (std::size_t a2 = 0; a2 < 2; ++a2)
          for (std::size_t q2 = 0; q2 < 2; ++q2)
            for (std::size_t n = 0; n < 4; ++n) want(a * 2 + q, a2 * 2 + q2) += rho(idx(a, q, n), idx(a2, q2, n));
    const std::array<std::size_t, 2> keep{0, 1};
    CHECK(max_abs_diff(partial_trace(rho, dims, keep).matrix(), want) < 1e-14);

    // tracing the factors one at a time gives the same marginal
    const std::array<std::size_t, 1> keep_q{1};
    const auto direct = partial_trace(rho, dims, keep_q);
    const std::array<std::size_t, 2> dims2{2, 2};
    const auto staged = partial_trace(partial_trace(rho, dims, keep), dims2, keep_q);
    CHECK(max_abs_diff(direct.matrix(), staged.matrix()) < 1e-14);
    const std::array<std::size_t, 2> keep_rev{1, 0};
    CHECK(max_abs_diff(partial_trace(rho, dims, keep_rev).matrix(), want) < 1e-14);
  }
  SUBCASE("bad dimensions") {
    const std::array<std::size_t, 2> dims{2, 3};
    const std::array<std::size_t, 1> keep{0};
    CHECK_THROWS_AS(partial_trace(DensityMatrix::bell_phi_plus(), dims, keep), DimensionError);
  }
}

TEST_CASE("trace distance") {
  const auto plus = DensityMatrix::plus(), minus = DensityMatrix::minus();
  CHECK(trace_distance(plus, plus) < 1e-15);
  CHECK(std::abs(trace_distance(plus, minus) - 1.0) < 1e-14);
  CHECK(std::abs(trace_distance(DensityMatrix::excited(), DensityMatrix::ground()) - 1.0) < 1e-14);
  CHECK_THROWS_AS(trace_distance(plus, DensityMatrix::bell_phi_plus()), DimensionError);

  std::mt19937_64 rng(31);
  for (std::size_t dim : {2u, 4u}) {
    for (int rep = 0; rep < 20; ++rep) {
      const auto a = oracle::random_state(dim, 2, rng);
      const auto b = oracle::random_state(dim, dim, rng);
      const auto c = oracle::random_state(dim, 1, rng);
      const double ab = trace_distance(a, b);
      CHECK(std::abs(ab - oracle::trace_distance(a, b)) < 1e-10);
      CHECK(std::abs(ab - trace_distance(b, a)) < 1e-14);
      CHECK(ab <= trace_distance(a, c) + trace_distance(c, b) + 1e-12);
      CHECK(ab >= 0.0);
      CHECK(ab <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("concurrence") {
  CHECK(std::abs(concurrence(DensityMatrix::bell_phi_plus()) - 1.0) < 1e-12);
  const std::array<cplx, 4> ee{1, 0, 0, 0};
  CHECK(concurrence(DensityMatrix::pure(ee)) < 1e-12);
  CHECK_THROWS_AS(concurrence(DensityMatrix::plus()), DimensionError);

  SUBCASE("Bell state with one-sided decay") {
    // (|ee> + |gg>)/sqrt2, second qubit amplitude-damped with survival P
    const double p = 0.25, c = std::sqrt(p);
    ComplexMatrix m(4, 4);
    m(0, 0) = 0.5 * p;
    m(1, 1) = 0.5 * (1 - p);
    m(3, 3) = 0.5;
    m(0, 3) = m(3, 0) = 0.5 * c;
    const DensityMatrix rho(m);
    CHECK(std::abs(concurrence(rho) - oracle::concurrence(rho)) < 1e-12);
    CHECK(std::abs(concurrence(rho) - c) < 1e-12);
  }
  SUBCASE("random states against the Wootters oracle") {
    std::mt19937_64 rng(37);
    for (std::size_t rank : {1u, 2u, 3u, 4u}) {
      for (int rep = 0; rep < 25; ++rep) {
        const auto rho = oracle::random_state(4, rank, rng);
        const double c = concurrence(rho);
        // square roots of near-zero eigenvalues limit the oracle to ~sqrt(eps)
        CHECK(std::abs(c - oracle::concurrence(rho)) < 1e-7);
        CHECK(c >= 0.0);
        CHECK(c <= 1.0 + 1e-12);
      }
    }
  }
  SUBCASE("product states are unentangled") {
    std::mt19937_64 rng(41);
    for (int rep = 0; rep < 20; ++rep) {
      const DensityMatrix rho(
          tensor(oracle::random_state(2, 2, rng).matrix(), oracle::random_state(2, 1, rng).matrix()));
      CHECK(concurrence(rho) < 1e-7);
    }
  }
}

}  // TEST_SUITE
