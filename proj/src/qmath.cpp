#include "nmsvr/qmath.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "nmsvr/error.hpp"

namespace nmsvr {

namespace {

std::string shape(const ComplexMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const ComplexMatrix& a, const ComplexMatrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": shapes " + shape(a) + " and " + shape(b) +
                         " are not conformable");
  }
}

// Eigenvalues of [[a, b], [conj(b), d]], ascending.
std::pair<double, double> hermitian2x2_eigenvalues(double a, cplx b, double d) {
  const double mean = 0.5 * (a + d);
  const double half = 0.5 * (a - d);
  const double r = std::sqrt(half * half + std::norm(b));
  return {mean - r, mean + r};
}

bool is_x_shaped(const ComplexMatrix& m) {
  if (m.rows() != 4 || m.cols() != 4) return false;
  static constexpr std::size_t off[8][2] = {{0, 1}, {0, 2}, {1, 0}, {1, 3},
                                            {2, 0}, {2, 3}, {3, 1}, {3, 2}};
  for (const auto& rc : off) {
    if (m(rc[0], rc[1]) != cplx{}) return false;
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// ComplexMatrix

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols) {
  if (rows == 0 || cols == 0) throw DimensionError("matrix dimensions must be positive");
}

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (rows == 0 || cols == 0) throw DimensionError("matrix dimensions must be positive");
  if (data_.size() != rows * cols) {
    throw DimensionError("entry count " + std::to_string(data_.size()) + " does not match " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
}

ComplexMatrix::ComplexMatrix(std::initializer_list<std::initializer_list<cplx>> rows) {
  rows_ = rows.size();
  cols_ = rows_ ? rows.begin()->size() : 0;
  if (rows_ == 0 || cols_ == 0) throw DimensionError("matrix dimensions must be positive");
  data_.reserve(rows_ * cols_);
  for (const auto& row : rows) {
    if (row.size() != cols_) throw DimensionError("ragged matrix literal");
    data_.insert(data_.end(), row.begin(), row.end());
  }
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::adjoint() const {
  ComplexMatrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = std::conj((*this)(r, c));
  return out;
}

ComplexMatrix ComplexMatrix::conjugate() const {
  ComplexMatrix out = *this;
  for (auto& z : out.data_) z = std::conj(z);
  return out;
}

cplx ComplexMatrix::trace() const {
  if (!is_square()) throw DimensionError("trace of non-square matrix " + shape(*this));
  cplx t{};
  for (std::size_t i = 0; i < rows_; ++i) t += (*this)(i, i);
  return t;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
  require_same_shape(*this, o, "sum");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
  require_same_shape(*this, o, "difference");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(cplx s) {
  for (auto& z : data_) z *= s;
  return *this;
}

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("product: shapes " + shape(a) + " and " + shape(b) +
                         " are not conformable");
  }
  ComplexMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const cplx aik = a(i, k);
      if (aik == cplx{}) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  const auto ea = a.entries();
  const auto eb = b.entries();
  for (std::size_t i = 0; i < ea.size(); ++i) m = std::max(m, std::abs(ea[i] - eb[i]));
  return m;
}

ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t ar = 0; ar < a.rows(); ++ar)
    for (std::size_t ac = 0; ac < a.cols(); ++ac) {
      const cplx s = a(ar, ac);
      for (std::size_t br = 0; br < b.rows(); ++br)
        for (std::size_t bc = 0; bc < b.cols(); ++bc)
          out(ar * b.rows() + br, ac * b.cols() + bc) = s * b(br, bc);
    }
  return out;
}

ComplexMatrix outer(std::span<const cplx> u, std::span<const cplx> v) {
  ComplexMatrix out(u.size(), v.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j) out(i, j) = u[i] * std::conj(v[j]);
  return out;
}

namespace ops {

ComplexMatrix pauli_x() { return {{0.0, 1.0}, {1.0, 0.0}}; }
ComplexMatrix pauli_y() { return {{0.0, cplx{0.0, -1.0}}, {cplx{0.0, 1.0}, 0.0}}; }
ComplexMatrix pauli_z() { return {{1.0, 0.0}, {0.0, -1.0}}; }
ComplexMatrix sigma_plus() { return {{0.0, 1.0}, {0.0, 0.0}}; }
ComplexMatrix sigma_minus() { return {{0.0, 0.0}, {1.0, 0.0}}; }

ComplexMatrix annihilation(std::size_t n) {
  ComplexMatrix b(n, n);
  for (std::size_t k = 1; k < n; ++k) b(k - 1, k) = std::sqrt(static_cast<double>(k));
  return b;
}

}  // namespace ops

// ---------------------------------------------------------------------------
// Eigensolvers

HermitianEigen hermitian_eigensystem(const ComplexMatrix& h) {
  if (!h.is_square()) throw DimensionError("eigensystem of non-square matrix " + shape(h));
  const std::size_t n = h.rows();
  ComplexMatrix a = h;
  // Mirror the upper triangle so the working copy is exactly Hermitian.
  for (std::size_t i = 0; i < n; ++i) {
    a(i, i) = a(i, i).real();
    for (std::size_t j = i + 1; j < n; ++j) a(j, i) = std::conj(a(i, j));
  }
  ComplexMatrix v = ComplexMatrix::identity(n);

  double frob = 0.0;
  for (const auto& z : a.entries()) frob += std::norm(z);
  const double floor = 1e-30 * std::max(frob, 1e-300);

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += std::norm(a(p, q));
    if (off <= floor) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double mag = std::abs(a(p, q));
        if (mag == 0.0) continue;
        // Rephase basis vector q so that a(p, q) becomes real and positive.
        const cplx phase = a(p, q) / mag;  // e^{i phi}
        const cplx phase_conj = std::conj(phase);
        for (std::size_t r = 0; r < n; ++r) a(r, q) *= phase_conj;
        for (std::size_t r = 0; r < n; ++r) a(q, r) *= phase;
        for (std::size_t r = 0; r < n; ++r) v(r, q) *= phase_conj;

        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double theta = (aqq - app) / (2.0 * mag);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t r = 0; r < n; ++r) {
          const cplx arp = a(r, p);
          const cplx arq = a(r, q);
          a(r, p) = c * arp - s * arq;
          a(r, q) = s * arp + c * arq;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const cplx apr = a(p, r);
          const cplx aqr = a(q, r);
          a(p, r) = c * apr - s * aqr;
          a(q, r) = s * apr + c * aqr;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = app - t * mag;
        a(q, q) = aqq + t * mag;
        for (std::size_t r = 0; r < n; ++r) {
          const cplx vrp = v(r, p);
          const cplx vrq = v(r, q);
          v(r, p) = c * vrp - s * vrq;
          v(r, q) = s * vrp + c * vrq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return a(x, x).real() < a(y, y).real(); });
  HermitianEigen out{std::vector<double>(n), ComplexMatrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]).real();
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
  }
  return out;
}

std::vector<double> hermitian_eigenvalues(const ComplexMatrix& h) {
  if (h.rows() == 2 && h.cols() == 2) {
    auto [lo, hi] = hermitian2x2_eigenvalues(h(0, 0).real(), h(0, 1), h(1, 1).real());
    return {lo, hi};
  }
  return hermitian_eigensystem(h).values;
}

std::vector<double> symmetric_eigenvalues(std::span<const double> a, std::size_t n) {
  if (a.size() != n * n) throw DimensionError("symmetric_eigenvalues: expected n*n entries");
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n * n; ++i) m.entries()[i] = a[i];
  return hermitian_eigensystem(m).values;
}

// ---------------------------------------------------------------------------
// DensityMatrix

DensityMatrix::DensityMatrix(ComplexMatrix m) : m_(std::move(m)) {
  if (!m_.is_square()) throw DimensionError("density matrix must be square, got " + shape(m_));
  const std::size_t n = m_.rows();
  double herm = 0.0;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = r; c < n; ++c)
      herm = std::max(herm, std::abs(m_(r, c) - std::conj(m_(c, r))));
  if (herm > tolerance::hermitian) {
    std::ostringstream os;
    os << "density matrix not Hermitian (max deviation " << herm << ")";
    throw InvariantViolation(os.str());
  }
  const double tr_err = std::abs(m_.trace() - 1.0);
  if (tr_err > tolerance::trace) {
    std::ostringstream os;
    os << "density matrix trace deviates from 1 by " << tr_err;
    throw InvariantViolation(os.str());
  }
  const auto ev = eigenvalues();
  if (ev.front() < -tolerance::psd) {
    std::ostringstream os;
    os << "density matrix not positive semidefinite (min eigenvalue " << ev.front() << ")";
    throw InvariantViolation(os.str());
  }
}

std::vector<double> DensityMatrix::eigenvalues() const {
  const std::size_t n = m_.rows();
  if (n == 1) return {m_(0, 0).real()};
  if (n == 2) return hermitian_eigenvalues(m_);
  if (is_x_shaped(m_)) {
    auto [a0, a1] = hermitian2x2_eigenvalues(m_(0, 0).real(), m_(0, 3), m_(3, 3).real());
    auto [b0, b1] = hermitian2x2_eigenvalues(m_(1, 1).real(), m_(1, 2), m_(2, 2).real());
    std::vector<double> ev{a0, a1, b0, b1};
    std::sort(ev.begin(), ev.end());
    return ev;
  }
  return hermitian_eigensystem(m_).values;
}

DensityMatrix DensityMatrix::pure(std::span<const cplx> ket) {
  double norm = 0.0;
  for (const auto& z : ket) norm += std::norm(z);
  if (norm == 0.0) throw ConfigError("cannot build a state from the zero vector");
  ComplexMatrix m = outer(ket, ket);
  m *= 1.0 / norm;
  return DensityMatrix(std::move(m));
}

DensityMatrix DensityMatrix::bell_phi_plus() {
  const std::vector<cplx> ket{1.0, 0.0, 0.0, 1.0};
  return pure(ket);
}

DensityMatrix DensityMatrix::plus() {
  const std::vector<cplx> ket{1.0, 1.0};
  return pure(ket);
}

DensityMatrix DensityMatrix::minus() {
  const std::vector<cplx> ket{1.0, -1.0};
  return pure(ket);
}

DensityMatrix DensityMatrix::excited() {
  const std::vector<cplx> ket{1.0, 0.0};
  return pure(ket);
}

DensityMatrix DensityMatrix::ground() {
  const std::vector<cplx> ket{0.0, 1.0};
  return pure(ket);
}

double expectation(const ComplexMatrix& op, const DensityMatrix& rho) {
  const auto& m = rho.matrix();
  if (op.rows() != m.rows() || op.cols() != m.cols()) {
    throw DimensionError("expectation: operator " + shape(op) + " vs state " + shape(m));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < op.rows(); ++i)
    for (std::size_t j = 0; j < op.cols(); ++j) acc += (op(i, j) * m(j, i)).real();
  return acc;
}

// ---------------------------------------------------------------------------
// Partial trace

DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const std::size_t> dims,
                            std::span<const std::size_t> keep) {
  if (dims.empty()) throw DimensionError("partial_trace: empty factor list");
  std::size_t total = 1;
  for (auto d : dims) {
    if (d == 0) throw DimensionError("partial_trace: factor dimension must be positive");
    total *= d;
  }
  if (total != rho.dim()) {
    throw DimensionError("partial_trace: factor dimensions multiply to " + std::to_string(total) +
                         ", state has dimension " + std::to_string(rho.dim()));
  }
  if (keep.empty()) throw DimensionError("partial_trace: keep set is empty");
  std::vector<bool> kept(dims.size(), false);
  for (auto k : keep) {
    if (k >= dims.size()) throw DimensionError("partial_trace: factor index out of range");
    if (kept[k]) throw DimensionError("partial_trace: duplicate factor index");
    kept[k] = true;
  }

  const std::size_t nf = dims.size();
  std::vector<std::size_t> stride(nf);
  stride[nf - 1] = 1;
  for (std::size_t f = nf - 1; f > 0; --f) stride[f - 1] = stride[f] * dims[f];

  std::size_t kept_dim = 1;
  std::size_t traced_dim = 1;
  for (std::size_t f = 0; f < nf; ++f) (kept[f] ? kept_dim : traced_dim) *= dims[f];

  // Map (kept index, traced index) -> full index by mixed-radix expansion.
  auto expand = [&](std::size_t kept_idx, std::size_t traced_idx) {
    std::size_t full = 0;
    for (std::size_t f = nf; f-- > 0;) {
      std::size_t& src = kept[f] ? kept_idx : traced_idx;
      full += (src % dims[f]) * stride[f];
      src /= dims[f];
    }
    return full;
  };

  std::vector<std::size_t> index(kept_dim * traced_dim);
  for (std::size_t k = 0; k < kept_dim; ++k)
    for (std::size_t t = 0; t < traced_dim; ++t) index[k * traced_dim + t] = expand(k, t);

  const auto& m = rho.matrix();
  ComplexMatrix out(kept_dim, kept_dim);
  for (std::size_t r = 0; r < kept_dim; ++r)
    for (std::size_t c = 0; c < kept_dim; ++c) {
      cplx acc{};
      for (std::size_t t = 0; t < traced_dim; ++t)
        acc += m(index[r * traced_dim + t], index[c * traced_dim + t]);
      out(r, c) = acc;
    }
  return DensityMatrix(std::move(out));
}

// ---------------------------------------------------------------------------
// Functionals

double trace_distance(const DensityMatrix& rho1, const DensityMatrix& rho2) {
  if (rho1.dim() != rho2.dim()) {
    throw DimensionError("trace_distance: dimensions " + std::to_string(rho1.dim()) + " and " +
                         std::to_string(rho2.dim()));
  }
  const ComplexMatrix diff = rho1.matrix() - rho2.matrix();
  double acc = 0.0;
  for (double ev : hermitian_eigenvalues(diff)) acc += std::abs(ev);
  return std::min(1.0, 0.5 * acc);
}

double concurrence(const DensityMatrix& rho) {
  if (rho.dim() != 4) {
    throw DimensionError("concurrence requires a two-qubit state, got dimension " +
                         std::to_string(rho.dim()));
  }
  const auto& m = rho.matrix();
  if (is_x_shaped(m)) {
    auto nonneg = [](double x) { return std::max(0.0, x); };
    const double a = std::abs(m(0, 3)) - std::sqrt(nonneg(m(1, 1).real()) * nonneg(m(2, 2).real()));
    const double b = std::abs(m(1, 2)) - std::sqrt(nonneg(m(0, 0).real()) * nonneg(m(3, 3).real()));
    return std::min(1.0, 2.0 * std::max({0.0, a, b}));
  }

  // rho = V V^dagger with V = U sqrt(P). The square roots of the eigenvalues
  // of rho * rho_tilde are the singular values of T = V^T (Y (x) Y) V.
  const auto eig = hermitian_eigensystem(m);
  ComplexMatrix v(4, 4);
  for (std::size_t k = 0; k < 4; ++k) {
    const double w = std::sqrt(std::max(0.0, eig.values[k]));
    for (std::size_t r = 0; r < 4; ++r) v(r, k) = w * eig.vectors(r, k);
  }
  // (sigma_y (x) sigma_y) is real: antidiagonal (-1, 1, 1, -1).
  static constexpr double flip_sign[4] = {-1.0, 1.0, 1.0, -1.0};
  ComplexMatrix yv(4, 4);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t k = 0; k < 4; ++k) yv(r, k) = flip_sign[r] * v(3 - r, k);
  ComplexMatrix t(4, 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      cplx acc{};
      for (std::size_t r = 0; r < 4; ++r) acc += v(r, i) * yv(r, j);
      t(i, j) = acc;
    }
  const auto sq = hermitian_eigensystem(t.adjoint() * t).values;
  std::vector<double> s(4);
  for (std::size_t i = 0; i < 4; ++i) s[i] = std::sqrt(std::max(0.0, sq[i]));
  std::sort(s.begin(), s.end(), std::greater<>());
  return std::clamp(s[0] - s[1] - s[2] - s[3], 0.0, 1.0);
}

}  // namespace nmsvr
