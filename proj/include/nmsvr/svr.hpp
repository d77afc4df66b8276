#pragma once

// epsilon-SVR with an RBF kernel, solved in the dual by two-variable
// (SMO-type) updates with maximal-violating-pair selection.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nmsvr/dataset.hpp"

namespace nmsvr {

struct SvrConfig {
  double C = 1.0;
  double epsilon = 1e-3;
  double tol = 1e-3;
  std::optional<double> gamma;  // empty = "scale"
  std::size_t max_iter = 10'000'000;

  void validate() const;
};

enum class Scaling { Standardize, None };

/// k(x, y) = exp(-gamma |x - y|^2).
double rbf(std::span<const double> x, std::span<const double> y, double gamma);

/// 1 / (d * population variance of all entries taken together); 1 when that
/// variance is zero. Equals 1 / (sum of column variances) for centred columns.
double scale_gamma(const std::vector<std::vector<double>>& rows);

/// Row-major Gram matrix of `rows`.
std::vector<double> gram_matrix(const std::vector<std::vector<double>>& rows, double gamma);

struct DualProblem {
  std::span<const double> gram;  // n x n
  std::span<const double> y;
  double C = 1.0;
  double epsilon = 1e-3;
  double tol = 1e-3;
  std::size_t max_iter = 10'000'000;
  // Optional tie-break keys: among equally violating candidates the smaller
  // key wins, which makes the iterates independent of the row order.
  std::span<const std::size_t> keys;
};

struct DualSolution {
  std::vector<double> beta;  // alpha - alpha*, one per row
  double intercept = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  double max_violation = 0.0;  // m - M at exit
};

/// Observer receives (iteration, objective) after every update, where the
/// objective is the dual value -(1/2 a'Qa + p'a) of the current iterate.
using DualObserver = std::function<void(std::size_t, double)>;

DualSolution solve_dual(const DualProblem& problem, const DualObserver& observe = {});

/// -1/2 b'Kb - eps sum|b_i| + y'b.
double dual_objective(std::span<const double> gram, std::span<const double> y,
                      std::span<const double> beta, double epsilon);

struct FitInfo {
  std::size_t iterations = 0;
  bool converged = false;
  double max_violation = 0.0;
  double dual_objective = 0.0;
  std::vector<double> train_beta;  // full coefficient vector, training-row order
};

struct SvrModel {
  std::vector<std::vector<double>> support_vectors;  // standardized space
  std::vector<double> dual_coefs;
  double intercept = 0.0;
  double gamma = 1.0;
  double C = 1.0;
  double epsilon = 1e-3;
  Scaler scaler;
  FitInfo info;  // not serialized

  std::size_t n_features() const noexcept { return scaler.size(); }
  /// Decision value for raw (unscaled) features.
  double predict(std::span<const double> raw) const;
  /// Decision value for already-standardized features.
  double predict_scaled(std::span<const double> x) const;
  std::vector<double> predict(const DataTable& table) const;
};

/// Fits the scaler on `train` (Standardize, constant columns centred only, or
/// None for the identity) and solves the dual. Requires at least two rows.
SvrModel fit(const DataTable& train, const SvrConfig& config = {},
             Scaling scaling = Scaling::Standardize, const DualObserver& observe = {});
SvrModel fit(const std::vector<std::vector<double>>& x, std::span<const double> y,
             const SvrConfig& config = {}, Scaling scaling = Scaling::Standardize,
             const DualObserver& observe = {});

struct KktReport {
  double worst = 0.0;        // largest violation of the residual conditions
  std::size_t violations = 0; // rows violating by more than tol
  bool ok = true;
};

/// Checks every training row against the epsilon-KKT conditions using
/// info.train_beta: beta = 0 -> |r| <= eps + tol; |beta| = C -> |r| >= eps - tol
/// on the matching side; free -> |r| = eps +- tol on the matching side.
KktReport kkt_certificate(const SvrModel& model, const std::vector<std::vector<double>>& x,
                          std::span<const double> y, double tol);
KktReport kkt_certificate(const SvrModel& model, const DataTable& train, double tol);

double mae(std::span<const double> predictions, std::span<const double> truths);
double max_abs_error(std::span<const double> predictions, std::span<const double> truths);

void write_model(std::ostream& os, const SvrModel& model);
SvrModel read_model(std::istream& is);
void save_model(const SvrModel& model, const std::string& path);
SvrModel load_model(const std::string& path);

}  // namespace nmsvr
