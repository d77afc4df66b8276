#pragma once

// Small dense complex linear algebra for qubit-scale operators (dimension <= 64)
// and the two state functionals used by the non-Markovianity measures.

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace nmsvr {

using cplx = std::complex<double>;

class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols);
  ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries);
  ComplexMatrix(std::initializer_list<std::initializer_list<cplx>> rows);

  static ComplexMatrix identity(std::size_t n);
  static ComplexMatrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols}; }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_square() const noexcept { return rows_ == cols_; }

  cplx& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const cplx> entries() const noexcept { return data_; }
  std::span<cplx> entries() noexcept { return data_; }

  ComplexMatrix adjoint() const;
  ComplexMatrix conjugate() const;
  cplx trace() const;

  ComplexMatrix& operator+=(const ComplexMatrix& o);
  ComplexMatrix& operator-=(const ComplexMatrix& o);
  ComplexMatrix& operator*=(cplx s);

  friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
  friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
  friend ComplexMatrix operator*(ComplexMatrix a, cplx s) { return a *= s; }
  friend ComplexMatrix operator*(cplx s, ComplexMatrix a) { return a *= s; }
  friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);

  bool operator==(const ComplexMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> data_;
};

/// Largest entry-wise modulus of a - b.
double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);

/// Kronecker product a (x) b.
ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b);

/// Outer product |u><v|.
ComplexMatrix outer(std::span<const cplx> u, std::span<const cplx> v);

namespace ops {
// Qubit basis ordering is (|e>, |g>), so sigma_z = diag(1, -1) and
// sigma_plus = |e><g|.
ComplexMatrix pauli_x();
ComplexMatrix pauli_y();
ComplexMatrix pauli_z();
ComplexMatrix sigma_plus();
ComplexMatrix sigma_minus();
/// Truncated bosonic annihilation operator on n Fock levels.
ComplexMatrix annihilation(std::size_t n);
}  // namespace ops

struct HermitianEigen {
  std::vector<double> values;  // ascending
  ComplexMatrix vectors;       // column k pairs with values[k]
};

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi sweeps.
/// Only the upper triangle is trusted; the input must be Hermitian.
HermitianEigen hermitian_eigensystem(const ComplexMatrix& h);
std::vector<double> hermitian_eigenvalues(const ComplexMatrix& h);

/// Eigenvalues of a real symmetric n x n matrix (row-major), ascending.
std::vector<double> symmetric_eigenvalues(std::span<const double> a, std::size_t n);

namespace tolerance {
inline constexpr double hermitian = 1e-10;
inline constexpr double trace = 1e-10;
inline constexpr double psd = 1e-9;
}  // namespace tolerance

/// A validated density operator: Hermitian, unit trace and numerically PSD.
/// Construction fails loudly with InvariantViolation; states are never clipped.
class DensityMatrix {
 public:
  explicit DensityMatrix(ComplexMatrix m);

  static DensityMatrix pure(std::span<const cplx> ket);
  /// |Phi+> = (|ee> + |gg>)/sqrt(2).
  static DensityMatrix bell_phi_plus();
  /// |+> = (|e> + |g>)/sqrt(2), the +1 eigenstate of sigma_x.
  static DensityMatrix plus();
  static DensityMatrix minus();
  static DensityMatrix excited();
  static DensityMatrix ground();

  std::size_t dim() const noexcept { return m_.rows(); }
  const ComplexMatrix& matrix() const noexcept { return m_; }
  const cplx& operator()(std::size_t r, std::size_t c) const { return m_(r, c); }

  /// Eigenvalues, ascending. Uses closed forms for qubits and X-shaped
  /// two-qubit states, Jacobi otherwise.
  std::vector<double> eigenvalues() const;

 private:
  ComplexMatrix m_;
};

/// Re Tr[op rho].
double expectation(const ComplexMatrix& op, const DensityMatrix& rho);

/// Reduced state on the factors listed in `keep` (ascending or not, the result
/// orders kept factors as they appear in `dims`).
DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::size_t> dims,
                            std::span<const std::size_t> keep);

/// D = 1/2 Tr|rho1 - rho2|.
double trace_distance(const DensityMatrix& rho1, const DensityMatrix& rho2);

/// Wootters concurrence of a two-qubit state.
double concurrence(const DensityMatrix& rho);

}  // namespace nmsvr
