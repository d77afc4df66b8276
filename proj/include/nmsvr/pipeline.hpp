#pragma once

// End-to-end pieces shared by the command-line tool and the acceptance suite:
// split -> fit -> evaluate, per-omega evaluation, and parameter sweeps.

#include <cstdint>
#include <string>
#include <vector>

#include "nmsvr/dataset.hpp"
#include "nmsvr/svr.hpp"

namespace nmsvr {

struct PipelineOptions {
  double train_fraction = 0.7;
  std::uint64_t seed = 42;
  SvrConfig svr;
  Scaling scaling = Scaling::Standardize;
};

struct Evaluation {
  double mae = 0.0;
  double max_error = 0.0;
  std::size_t rows = 0;
};

struct PipelineResult {
  SvrModel model;
  DataTable train;
  DataTable test;
  Evaluation test_eval;
  KktReport kkt;
};

/// Split, fit on the training part, evaluate on the held-out part.
PipelineResult run_pipeline(const DataTable& table, const PipelineOptions& options = {});

/// Throws ConfigError on an empty table.
Evaluation evaluate(const SvrModel& model, const DataTable& table);

/// Rows whose drive strength equals `omega` (within 1e-12).
DataTable select_omega(const DataTable& table, double omega);

/// One residual row per sample, ordered by decreasing target.
struct Residual {
  double target, prediction, param, omega;
};
std::vector<Residual> residuals(const SvrModel& model, const DataTable& table);

/// Channel spec for a sweep point. `omega` is ignored for pd and ad.
ChannelSpec make_spec(ChannelKind kind, double param, double omega = 0.0);

struct TrajectoryPoint {
  double param, omega, t;
  double ox, oy, oz;
};
/// Bloch components of the |+> evolution on t_i = i * t_max / steps.
std::vector<TrajectoryPoint> sweep_trajectory(ChannelKind kind, const std::vector<double>& params,
                                              double omega, double t_max, std::size_t steps);

struct MeasurePoint {
  double param, omega, value;
  bool converged;
};
/// Non-Markovianity for every (omega, param) pair, omega-major.
std::vector<MeasurePoint> sweep_measure(ChannelKind kind, MeasureKind measure,
                                        const std::vector<double>& params,
                                        const std::vector<double>& omegas,
                                        std::size_t threads = 0);

}  // namespace nmsvr
