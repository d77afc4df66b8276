#pragma once

// Trace-distance and entanglement-based non-Markovianity.
//
// Both measures evolve fixed optimal inputs (the sigma_x eigenstates for the
// trace distance, |Phi+> with an untouched ancilla for the concurrence) and
// sum the positive increments of the sampled functional.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nmsvr/channels.hpp"

namespace nmsvr {

enum class MeasureKind { TraceDistance, Entanglement };

std::string to_string(MeasureKind kind);
MeasureKind parse_measure_kind(const std::string& s);

struct MeasureSeries {
  TimeGrid grid;
  std::vector<double> values;  // D(t) or C(t), one per grid point
};

struct MeasureResult {
  double value = 0.0;
  MeasureSeries series;
  bool converged = false;
};

inline constexpr double kConvergenceTolerance = 1e-4;

/// PD: nu in [0, 20]; AD and driven AD: t in [0, 20/gamma0]; 20000 steps.
TimeGrid default_grid(const ChannelSpec& spec);

/// D(t) between the evolutions of |+><+| and |-><-|. Driven AD is rejected.
MeasureSeries trace_distance_series(const ChannelSpec& spec, const TimeGrid& grid);

/// Observer of the ancilla-qubit state at each grid point.
using JointStateObserver = std::function<void(std::size_t, const DensityMatrix&)>;

/// Concurrence of (I (x) channel)(|Phi+><Phi+|) at each grid point. For driven
/// AD the ancilla-qubit-pseudomode state is integrated and the pseudomode
/// traced out.
MeasureSeries entanglement_series(const ChannelSpec& spec, const TimeGrid& grid,
                                  const IntegratorOptions& integrator = {},
                                  const JointStateObserver& observe = {});

/// Sum_i max(0, v[i+1] - v[i]) over values[0], values[stride], ...
double positive_increment_sum(std::span<const double> values, std::size_t stride = 1);

/// N = sum of positive increments. `converged` compares N with the sum over
/// the every-other-point subsample, i.e. with the grid of half the steps.
MeasureResult accumulate(const MeasureSeries& series);

struct MeasureOptions {
  std::optional<TimeGrid> grid;  // default_grid(spec) when empty
  int max_doublings = 3;
  IntegratorOptions integrator;
};

/// Series on the default grid, accumulated, with grid doubling until converged.
/// Throws NonConvergence after max_doublings refinements.
MeasureResult n_trace_distance(const ChannelSpec& spec, const MeasureOptions& options = {});
MeasureResult n_entanglement(const ChannelSpec& spec, const MeasureOptions& options = {});
MeasureResult n_measure(MeasureKind kind, const ChannelSpec& spec,
                        const MeasureOptions& options = {});

}  // namespace nmsvr
