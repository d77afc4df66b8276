#include "nmsvr/channels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nmsvr/error.hpp"

namespace nmsvr {

namespace {

// e^{-x}[cos(mu x) + sin(mu x)/mu] for mu^2 = mu_sq, real-valued on both sides
// of mu_sq = 0. Below `small_mu` the second-order series in mu^2 is used.
double damped_oscillation(double x, double mu_sq, double small_mu) {
  if (x == 0.0) return 1.0;
  if (std::abs(mu_sq) < small_mu * small_mu) {
    const double x2 = x * x;
    const double cos_part = 1.0 - mu_sq * x2 / 2.0 + mu_sq * mu_sq * x2 * x2 / 24.0;
    const double sinc_part = x * (1.0 - mu_sq * x2 / 6.0 + mu_sq * mu_sq * x2 * x2 / 120.0);
    return std::exp(-x) * (cos_part + sinc_part);
  }
  if (mu_sq > 0.0) {
    const double mu = std::sqrt(mu_sq);
    return std::exp(-x) * (std::cos(mu * x) + std::sin(mu * x) / mu);
  }
  // Overdamped: e^{-x} cosh(m x) + e^{-x} sinh(m x)/m, written with decaying
  // exponentials only (m < 1 here since mu_sq >= -1).
  const double m = std::sqrt(-mu_sq);
  const double slow = std::exp(-(1.0 - m) * x);
  const double fast = std::exp(-(1.0 + m) * x);
  const double cosh_part = 0.5 * (slow + fast);
  const double sinh_part =
      (m * x < 1.0) ? std::exp(-x) * std::sinh(m * x) / m : 0.5 * (slow - fast) / m;
  return cosh_part + sinh_part;
}

void require_qubit(const DensityMatrix& rho, const char* what) {
  if (rho.dim() != 2) {
    throw DimensionError(std::string(what) + ": expected a qubit state, got dimension " +
                         std::to_string(rho.dim()));
  }
}

void require_finite_nonneg(double v, const char* what) {
  if (!std::isfinite(v) || v < 0.0) {
    throw ConfigError(std::string(what) + " must be finite and non-negative");
  }
}

// Applies a linear qubit map, given on the matrix units, to the second factor
// of every 2x2 block of a two-qubit operator.
template <class BlockMap>
DensityMatrix one_sided_blocks(const DensityMatrix& rho_ab, BlockMap&& map) {
  if (rho_ab.dim() != 4) {
    throw DimensionError("one-sided map expects a two-qubit state, got dimension " +
                         std::to_string(rho_ab.dim()));
  }
  const auto& m = rho_ab.matrix();
  ComplexMatrix out(4, 4);
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 2; ++b) {
      const std::size_t r = 2 * a;
      const std::size_t c = 2 * b;
      auto blk = map(m(r, c), m(r, c + 1), m(r + 1, c), m(r + 1, c + 1));
      out(r, c) = blk[0];
      out(r, c + 1) = blk[1];
      out(r + 1, c) = blk[2];
      out(r + 1, c + 1) = blk[3];
    }
  return DensityMatrix(std::move(out));
}

}  // namespace

void validate(const ChannelSpec& spec) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        auto positive = [](double v, const char* name) {
          if (!std::isfinite(v) || v <= 0.0)
            throw ConfigError(std::string(name) + " must be positive and finite");
        };
        if constexpr (std::is_same_v<T, PhaseDamping>) {
          positive(s.tau, "tau");
        } else if constexpr (std::is_same_v<T, AmplitudeDamping>) {
          positive(s.lambda, "lambda");
          positive(s.gamma0, "gamma0");
        } else {
          positive(s.lambda, "lambda");
          positive(s.gamma0, "gamma0");
          if (!std::isfinite(s.omega) || s.omega < 0.0)
            throw ConfigError("omega must be finite and non-negative");
          if (s.n_fock < 2) throw ConfigError("n_fock must be at least 2");
        }
      },
      spec);
}

std::string describe(const ChannelSpec& spec) {
  std::ostringstream os;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PhaseDamping>) {
          os << "PD(tau=" << s.tau << ")";
        } else if constexpr (std::is_same_v<T, AmplitudeDamping>) {
          os << "AD(lambda=" << s.lambda << ", gamma0=" << s.gamma0 << ")";
        } else {
          os << "DrivenAD(lambda=" << s.lambda << ", gamma0=" << s.gamma0
             << ", omega=" << s.omega << ", n_fock=" << s.n_fock << ")";
        }
      },
      spec);
  return os.str();
}

// ---------------------------------------------------------------------------
// TimeGrid

TimeGrid::TimeGrid(double t_max, std::size_t n_steps) : t_max_(t_max), n_steps_(n_steps) {
  if (!std::isfinite(t_max) || t_max < 0.0) throw ConfigError("grid t_max must be >= 0");
  if (n_steps == 0) throw ConfigError("grid needs at least one step");
  if (t_max == 0.0 && n_steps != 1) throw ConfigError("a zero-length grid has exactly one step");
}

double TimeGrid::operator[](std::size_t i) const {
  if (i > n_steps_) throw DimensionError("grid index out of range");
  if (i == n_steps_) return t_max_;
  return t_max_ * static_cast<double>(i) / static_cast<double>(n_steps_);
}

std::vector<double> TimeGrid::values() const {
  std::vector<double> v(size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (*this)[i];
  return v;
}

// ---------------------------------------------------------------------------
// Phase damping

double pd_lambda(double nu, double tau) {
  require_finite_nonneg(nu, "nu");
  if (!(tau > 0.0)) throw ConfigError("tau must be positive");
  const double four_tau = 4.0 * tau;
  return damped_oscillation(nu, four_tau * four_tau - 1.0, 1e-6);
}

std::array<ComplexMatrix, 2> pd_kraus(double nu, double tau) {
  const double l = pd_lambda(nu, tau);
  ComplexMatrix m1 = ComplexMatrix::identity(2) * std::sqrt(std::max(0.0, (1.0 + l) / 2.0));
  ComplexMatrix m2 = ops::pauli_z() * std::sqrt(std::max(0.0, (1.0 - l) / 2.0));
  return {std::move(m1), std::move(m2)};
}

DensityMatrix pd_apply(const DensityMatrix& rho, double nu, double tau) {
  require_qubit(rho, "pd_apply");
  const double l = pd_lambda(nu, tau);
  ComplexMatrix out = rho.matrix();
  out(0, 1) *= l;
  out(1, 0) *= l;
  return DensityMatrix(std::move(out));
}

// ---------------------------------------------------------------------------
// Amplitude damping

double ad_amplitude(double t, double lambda, double gamma0) {
  require_finite_nonneg(t, "t");
  if (!(lambda > 0.0) || !(gamma0 > 0.0)) throw ConfigError("lambda and gamma0 must be positive");
  // With x = lambda t / 2 and mu = d / lambda the amplitude has the same
  // damped-oscillation shape as the dephasing factor.
  const double mu_sq = 2.0 * gamma0 / lambda - 1.0;
  return damped_oscillation(lambda * t / 2.0, mu_sq, 1e-6 / lambda);
}

double ad_survival(double t, double lambda, double gamma0) {
  const double c = ad_amplitude(t, lambda, gamma0);
  return c * c;
}

std::array<ComplexMatrix, 2> ad_kraus(double t, double lambda, double gamma0) {
  const double c = ad_amplitude(t, lambda, gamma0);
  ComplexMatrix m1{{c, 0.0}, {0.0, 1.0}};
  ComplexMatrix m2{{0.0, 0.0}, {std::sqrt(std::max(0.0, 1.0 - c * c)), 0.0}};
  return {std::move(m1), std::move(m2)};
}

DensityMatrix ad_apply(const DensityMatrix& rho, double t, double lambda, double gamma0) {
  require_qubit(rho, "ad_apply");
  const double c = ad_amplitude(t, lambda, gamma0);
  const double p = c * c;
  const auto& m = rho.matrix();
  ComplexMatrix out(2, 2);
  out(0, 0) = m(0, 0) * p;
  out(0, 1) = m(0, 1) * c;
  out(1, 0) = m(1, 0) * c;
  out(1, 1) = m(1, 1) + m(0, 0) * (1.0 - p);
  return DensityMatrix(std::move(out));
}

DensityMatrix apply_kraus(const DensityMatrix& rho, std::span<const ComplexMatrix> kraus) {
  if (kraus.empty()) throw ConfigError("empty Kraus set");
  ComplexMatrix acc(rho.dim(), rho.dim());
  for (const auto& k : kraus) acc += k * rho.matrix() * k.adjoint();
  return DensityMatrix(std::move(acc));
}

DensityMatrix apply_one_sided(const DensityMatrix& rho_ab, std::span<const ComplexMatrix> kraus) {
  if (rho_ab.dim() != 4) throw DimensionError("apply_one_sided expects a two-qubit state");
  std::vector<ComplexMatrix> lifted;
  lifted.reserve(kraus.size());
  for (const auto& k : kraus) lifted.push_back(tensor(ComplexMatrix::identity(2), k));
  return apply_kraus(rho_ab, lifted);
}

DensityMatrix pd_apply_one_sided(const DensityMatrix& rho_ab, double nu, double tau) {
  const double l = pd_lambda(nu, tau);
  return one_sided_blocks(rho_ab, [l](cplx ee, cplx eg, cplx ge, cplx gg) {
    return std::array<cplx, 4>{ee, l * eg, l * ge, gg};
  });
}

DensityMatrix ad_apply_one_sided(const DensityMatrix& rho_ab, double t, double lambda,
                                 double gamma0) {
  const double c = ad_amplitude(t, lambda, gamma0);
  const double p = c * c;
  return one_sided_blocks(rho_ab, [c, p](cplx ee, cplx eg, cplx ge, cplx gg) {
    return std::array<cplx, 4>{p * ee, c * eg, c * ge, gg + (1.0 - p) * ee};
  });
}

// ---------------------------------------------------------------------------
// Pseudomode integrator
//
// Basis index r = (a * 2 + q) * n + k for ancilla a, qubit q (0 = e, 1 = g) and
// Fock level k. Writing K = -iH - l b^+ b, the generator is
//   L(rho) = K rho + (K rho)^+ + 2 l b rho b^+
// for Hermitian rho, so only K rho and the upper triangle are computed.

PseudomodeIntegrator::PseudomodeIntegrator(const DrivenAmplitudeDamping& spec,
                                           const DensityMatrix& system_state,
                                           IntegratorOptions options)
    : ancilla_(system_state.dim() / 2),
      n_(spec.n_fock),
      dim_(0),
      lambda_(spec.lambda),
      coupling_(std::sqrt(spec.lambda * spec.gamma0 / 2.0)),
      omega_(spec.omega),
      options_(options) {
  validate(spec);
  if (system_state.dim() != 2 && system_state.dim() != 4) {
    throw DimensionError("pseudomode integrator expects a qubit or ancilla-qubit state");
  }
  if (!(options.max_step > 0.0)) throw ConfigError("integrator step must be positive");
  dim_ = ancilla_ * 2 * n_;
  sqrt_n_.resize(n_ + 1);
  for (std::size_t k = 0; k <= n_; ++k) sqrt_n_[k] = std::sqrt(static_cast<double>(k));

  const std::size_t sz = dim_ * dim_;
  rho_.assign(sz, cplx{});
  k1_.assign(sz, cplx{});
  k2_.assign(sz, cplx{});
  k3_.assign(sz, cplx{});
  k4_.assign(sz, cplx{});
  tmp_.assign(sz, cplx{});
  work_.assign(sz, cplx{});
  const std::size_t sd = system_state.dim();
  for (std::size_t s = 0; s < sd; ++s)
    for (std::size_t s2 = 0; s2 < sd; ++s2) rho_[(s * n_) * dim_ + s2 * n_] = system_state(s, s2);
}

void PseudomodeIntegrator::derivative(const std::vector<cplx>& rho, std::vector<cplx>& out) {
  const std::size_t d = dim_;
  const std::size_t n = n_;
  std::vector<cplx>& y = work_;

  // y = K rho, row by row: each row of H rho mixes at most two rows of rho.
  for (std::size_t r = 0; r < d; ++r) {
    const std::size_t k = r % n;
    const std::size_t aq = r / n;
    const std::size_t q = aq % 2;
    const std::size_t flip = (aq ^ 1U) * n + k;  // same ancilla and Fock level, other qubit level
    cplx* yr = &y[r * d];
    const cplx* rr = &rho[r * d];
    const cplx* rf = &rho[flip * d];
    const double damp = -lambda_ * static_cast<double>(k);
    // Coupling partner: |e,k> <- |g,k+1> (sqrt(k+1)), |g,k> <- |e,k-1> (sqrt(k)).
    const cplx* rc = nullptr;
    double gc = 0.0;
    if (q == 0 && k + 1 < n) {
      rc = &rho[((aq + 1) * n + k + 1) * d];
      gc = coupling_ * sqrt_n_[k + 1];
    } else if (q == 1 && k >= 1) {
      rc = &rho[((aq - 1) * n + k - 1) * d];
      gc = coupling_ * sqrt_n_[k];
    }
    const double om = omega_;
    if (rc) {
      for (std::size_t c = 0; c < d; ++c) {
        const cplx h = om * rf[c] + gc * rc[c];
        yr[c] = cplx(h.imag(), -h.real()) + damp * rr[c];
      }
    } else {
      for (std::size_t c = 0; c < d; ++c) {
        const cplx h = om * rf[c];
        yr[c] = cplx(h.imag(), -h.real()) + damp * rr[c];
      }
    }
  }

  const double jump = 2.0 * lambda_;
  for (std::size_t r = 0; r < d; ++r) {
    const std::size_t kr = r % n;
    for (std::size_t c = r; c < d; ++c) {
      const std::size_t kc = c % n;
      cplx v = y[r * d + c] + std::conj(y[c * d + r]);
      if (kr + 1 < n && kc + 1 < n) {
        v += (jump * sqrt_n_[kr + 1] * sqrt_n_[kc + 1]) * rho[(r + 1) * d + c + 1];
      }
      out[r * d + c] = v;
      out[c * d + r] = std::conj(v);
    }
  }
}

void PseudomodeIntegrator::rk4_step(double h) {
  const std::size_t sz = rho_.size();
  derivative(rho_, k1_);
  for (std::size_t i = 0; i < sz; ++i) tmp_[i] = rho_[i] + (0.5 * h) * k1_[i];
  derivative(tmp_, k2_);
  for (std::size_t i = 0; i < sz; ++i) tmp_[i] = rho_[i] + (0.5 * h) * k2_[i];
  derivative(tmp_, k3_);
  for (std::size_t i = 0; i < sz; ++i) tmp_[i] = rho_[i] + h * k3_[i];
  derivative(tmp_, k4_);
  const double w = h / 6.0;
  for (std::size_t i = 0; i < sz; ++i)
    rho_[i] += w * (k1_[i] + 2.0 * (k2_[i] + k3_[i]) + k4_[i]);
}

double PseudomodeIntegrator::top_level_population() const {
  double pop = 0.0;
  for (std::size_t aq = 0; aq < 2 * ancilla_; ++aq) {
    const std::size_t r = aq * n_ + (n_ - 1);
    pop += rho_[r * dim_ + r].real();
  }
  return pop;
}

void PseudomodeIntegrator::advance(double duration) {
  if (!std::isfinite(duration) || duration < 0.0) throw ConfigError("duration must be >= 0");
  if (duration == 0.0) return;
  const auto steps = static_cast<std::size_t>(std::ceil(duration / options_.max_step - 1e-9));
  const double h = duration / static_cast<double>(std::max<std::size_t>(steps, 1));
  for (std::size_t s = 0; s < std::max<std::size_t>(steps, 1); ++s) {
    rk4_step(h);
    const double top = top_level_population();
    max_top_ = std::max(max_top_, top);
    if (top > options_.leak_tolerance) {
      std::ostringstream os;
      os << "pseudomode truncation leak: top Fock level (n_fock=" << n_ << ") holds population "
         << top << " > " << options_.leak_tolerance << " at t=" << time_ + (s + 1) * h;
      throw TruncationLeak(os.str());
    }
  }
  time_ += duration;
}

ComplexMatrix PseudomodeIntegrator::reduced_matrix() const {
  const std::size_t sd = 2 * ancilla_;
  ComplexMatrix out(sd, sd);
  for (std::size_t s = 0; s < sd; ++s)
    for (std::size_t s2 = 0; s2 < sd; ++s2) {
      cplx acc{};
      for (std::size_t k = 0; k < n_; ++k) acc += rho_[(s * n_ + k) * dim_ + s2 * n_ + k];
      out(s, s2) = acc;
    }
  return out;
}

DensityMatrix PseudomodeIntegrator::reduced_state() const { return DensityMatrix(reduced_matrix()); }

double PseudomodeIntegrator::full_trace() const {
  double tr = 0.0;
  for (std::size_t r = 0; r < dim_; ++r) tr += rho_[r * dim_ + r].real();
  return tr;
}

void driven_ad_visit(const DensityMatrix& system_state, const TimeGrid& grid,
                     const DrivenAmplitudeDamping& spec, IntegratorOptions options,
                     const std::function<void(std::size_t, const DensityMatrix&)>& visit) {
  PseudomodeIntegrator integ(spec, system_state, options);
  visit(0, integ.reduced_state());
  const double h = grid.step();
  for (std::size_t i = 1; i < grid.size(); ++i) {
    integ.advance(h);
    visit(i, integ.reduced_state());
  }
}

std::vector<DensityMatrix> driven_ad_evolve(const DensityMatrix& system_state,
                                            const TimeGrid& grid,
                                            const DrivenAmplitudeDamping& spec,
                                            IntegratorOptions options) {
  std::vector<DensityMatrix> out;
  out.reserve(grid.size());
  driven_ad_visit(system_state, grid, spec, options,
                  [&](std::size_t, const DensityMatrix& rho) { out.push_back(rho); });
  return out;
}

}  // namespace nmsvr
