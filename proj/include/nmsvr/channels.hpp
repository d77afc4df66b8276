#pragma once

// Qubit dephasing and amplitude-damping dynamics.
//
// Phase damping (colored telegraph noise) is evaluated through its Kraus map
// in the dimensionless time nu = t / (2 tau). Undriven amplitude damping with a
// Lorentzian reservoir uses its closed form; the resonantly driven case is
// integrated through the pseudomode embedding in the frame rotating with the
// drive. Time is measured in units of 1/gamma0 throughout.

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nmsvr/qmath.hpp"

namespace nmsvr {

struct PhaseDamping {
  double tau = 0.5;  // memory parameter, > 0
};

struct AmplitudeDamping {
  double lambda = 1.0;  // reservoir width, units of gamma0, > 0
  double gamma0 = 1.0;
};

struct DrivenAmplitudeDamping {
  double lambda = 1.0;
  double gamma0 = 1.0;
  double omega = 0.0;        // drive strength, units of gamma0, >= 0
  std::size_t n_fock = 8;    // pseudomode truncation
};

using ChannelSpec = std::variant<PhaseDamping, AmplitudeDamping, DrivenAmplitudeDamping>;

/// Throws ConfigError when a parameter is outside its domain.
void validate(const ChannelSpec& spec);
std::string describe(const ChannelSpec& spec);

/// Uniform grid t_i = i * t_max / n_steps, i = 0..n_steps.
/// A zero-length grid (t_max == 0) is allowed and holds a single repeated point.
class TimeGrid {
 public:
  TimeGrid(double t_max, std::size_t n_steps);

  double t_max() const noexcept { return t_max_; }
  std::size_t n_steps() const noexcept { return n_steps_; }
  std::size_t size() const noexcept { return n_steps_ + 1; }
  double step() const noexcept { return t_max_ / static_cast<double>(n_steps_); }
  double operator[](std::size_t i) const;
  std::vector<double> values() const;
  TimeGrid refined(std::size_t factor = 2) const { return {t_max_, n_steps_ * factor}; }

  bool operator==(const TimeGrid&) const = default;

 private:
  double t_max_;
  std::size_t n_steps_;
};

// ---------------------------------------------------------------------------
// Phase damping

/// Lambda(nu) = e^{-nu}[cos(mu nu) + sin(mu nu)/mu], mu = sqrt((4 tau)^2 - 1),
/// with the hyperbolic form below tau = 1/4 and the series limit at it.
double pd_lambda(double nu, double tau);

/// Kraus pair sqrt((1 + Lambda)/2) I, sqrt((1 - Lambda)/2) sigma_z.
std::array<ComplexMatrix, 2> pd_kraus(double nu, double tau);

/// Dephasing map on a qubit: populations fixed, coherences scaled by Lambda.
DensityMatrix pd_apply(const DensityMatrix& rho, double nu, double tau);

// ---------------------------------------------------------------------------
// Undriven amplitude damping

/// Excited-state amplitude c(t) = e^{-lt/2}[cos(dt/2) + (l/d) sin(dt/2)],
/// d = sqrt(2 g0 l - l^2). Changes sign at the zeros of P_t when l < 2 g0.
double ad_amplitude(double t, double lambda, double gamma0 = 1.0);

/// P_t = c(t)^2, the excited-state survival probability.
double ad_survival(double t, double lambda, double gamma0 = 1.0);

/// Kraus pair diag(c, 1) and sqrt(1 - P) |g><e| in the (e, g) basis.
std::array<ComplexMatrix, 2> ad_kraus(double t, double lambda, double gamma0 = 1.0);

/// rho_ee -> P rho_ee, rho_eg -> c rho_eg, rho_gg -> rho_gg + (1 - P) rho_ee.
DensityMatrix ad_apply(const DensityMatrix& rho, double t, double lambda, double gamma0 = 1.0);

/// Sum_i K_i rho K_i^dagger.
DensityMatrix apply_kraus(const DensityMatrix& rho, std::span<const ComplexMatrix> kraus);

/// Dephasing and amplitude damping acting on the second qubit of a two-qubit
/// state only, evaluated block-wise without forming Kraus products.
DensityMatrix pd_apply_one_sided(const DensityMatrix& rho_ab, double nu, double tau);
DensityMatrix ad_apply_one_sided(const DensityMatrix& rho_ab, double t, double lambda,
                                 double gamma0 = 1.0);

/// Applies a single-qubit map to the last qubit of a two-qubit state
/// (I (x) channel), through the Kraus pair of the map.
DensityMatrix apply_one_sided(const DensityMatrix& rho_ab, std::span<const ComplexMatrix> kraus);

// ---------------------------------------------------------------------------
// Driven amplitude damping via the pseudomode

struct IntegratorOptions {
  double max_step = 1e-3;            // RK4 step cap, units of 1/gamma0
  double leak_tolerance = 1e-6;      // max population in the top Fock level
};

/// Fixed-step RK4 integration of
///   d rho / dt = -i[H, rho] + l (2 b rho b^+ - b^+ b rho - rho b^+ b),
///   H = Omega (s+ + s-) + sqrt(l g0 / 2)(s+ b + b^+ s-),
/// over ([ancilla] (x) qubit (x) pseudomode), pseudomode starting in vacuum.
/// The optional ancilla is the leading factor and evolves trivially.
class PseudomodeIntegrator {
 public:
  /// `system_state` is a qubit state (dim 2) or ancilla (x) qubit (dim 4).
  PseudomodeIntegrator(const DrivenAmplitudeDamping& spec, const DensityMatrix& system_state,
                       IntegratorOptions options = {});

  double time() const noexcept { return time_; }
  std::size_t system_dim() const noexcept { return 2 * ancilla_; }

  /// Advances by `duration` with ceil(duration / max_step) equal RK4 steps.
  void advance(double duration);

  /// State with the pseudomode traced out.
  DensityMatrix reduced_state() const;
  /// Unvalidated reduced matrix, for hot loops that validate separately.
  ComplexMatrix reduced_matrix() const;
  /// Trace of the full system-pseudomode state.
  double full_trace() const;
  /// Largest population found in the top Fock level since construction.
  double max_top_level_population() const noexcept { return max_top_; }

 private:
  void rk4_step(double h);
  void derivative(const std::vector<cplx>& rho, std::vector<cplx>& out);
  double top_level_population() const;

  std::size_t ancilla_;  // 1 or 2
  std::size_t n_;        // Fock levels
  std::size_t dim_;      // ancilla_ * 2 * n_
  double lambda_;
  double coupling_;
  double omega_;
  IntegratorOptions options_;
  double time_ = 0.0;
  double max_top_ = 0.0;
  std::vector<double> sqrt_n_;
  std::vector<cplx> rho_, k1_, k2_, k3_, k4_, tmp_, work_;
};

/// Evolves `system_state` on `grid` and returns the reduced state at every
/// grid point. Throws TruncationLeak if the top Fock level exceeds the leak
/// tolerance and InvariantViolation if a reduced state fails validation.
std::vector<DensityMatrix> driven_ad_evolve(const DensityMatrix& system_state,
                                            const TimeGrid& grid,
                                            const DrivenAmplitudeDamping& spec,
                                            IntegratorOptions options = {});

/// Same as driven_ad_evolve, streaming the reduced states instead of storing them.
void driven_ad_visit(const DensityMatrix& system_state, const TimeGrid& grid,
                     const DrivenAmplitudeDamping& spec, IntegratorOptions options,
                     const std::function<void(std::size_t, const DensityMatrix&)>& visit);

}  // namespace nmsvr
