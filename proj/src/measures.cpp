#include "nmsvr/measures.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nmsvr/error.hpp"

namespace nmsvr {

std::string to_string(MeasureKind kind) {
  return kind == MeasureKind::TraceDistance ? "trace" : "entanglement";
}

MeasureKind parse_measure_kind(const std::string& s) {
  if (s == "trace" || s == "trace_distance" || s == "nd") return MeasureKind::TraceDistance;
  if (s == "entanglement" || s == "ne") return MeasureKind::Entanglement;
  throw ConfigError("unknown measure '" + s + "' (expected trace or entanglement)");
}

TimeGrid default_grid(const ChannelSpec& spec) {
  constexpr double kHorizon = 20.0;
  constexpr std::size_t kSteps = 20000;
  if (const auto* pd = std::get_if<PhaseDamping>(&spec)) {
    (void)pd;
    return {kHorizon, kSteps};
  }
  const double gamma0 = std::visit(
      [](const auto& s) -> double {
        if constexpr (requires { s.gamma0; }) return s.gamma0;
        return 1.0;
      },
      spec);
  return {kHorizon / gamma0, kSteps};
}

MeasureSeries trace_distance_series(const ChannelSpec& spec, const TimeGrid& grid) {
  validate(spec);
  MeasureSeries out{grid, std::vector<double>(grid.size())};
  const DensityMatrix plus = DensityMatrix::plus();
  const DensityMatrix minus = DensityMatrix::minus();
  if (const auto* pd = std::get_if<PhaseDamping>(&spec)) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double nu = grid[i];
      out.values[i] = trace_distance(pd_apply(plus, nu, pd->tau), pd_apply(minus, nu, pd->tau));
    }
  } else if (const auto* ad = std::get_if<AmplitudeDamping>(&spec)) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double t = grid[i];
      out.values[i] = trace_distance(ad_apply(plus, t, ad->lambda, ad->gamma0),
                                     ad_apply(minus, t, ad->lambda, ad->gamma0));
    }
  } else {
    throw ConfigError("trace-distance measure is not defined for the driven AD channel");
  }
  return out;
}

MeasureSeries entanglement_series(const ChannelSpec& spec, const TimeGrid& grid,
                                  const IntegratorOptions& integrator,
                                  const JointStateObserver& observe) {
  validate(spec);
  MeasureSeries out{grid, std::vector<double>(grid.size())};
  const DensityMatrix bell = DensityMatrix::bell_phi_plus();
  auto record = [&](std::size_t i, const DensityMatrix& rho_ab) {
    out.values[i] = concurrence(rho_ab);
    if (observe) observe(i, rho_ab);
  };
  if (const auto* pd = std::get_if<PhaseDamping>(&spec)) {
    for (std::size_t i = 0; i < grid.size(); ++i)
      record(i, pd_apply_one_sided(bell, grid[i], pd->tau));
  } else if (const auto* ad = std::get_if<AmplitudeDamping>(&spec)) {
    for (std::size_t i = 0; i < grid.size(); ++i)
      record(i, ad_apply_one_sided(bell, grid[i], ad->lambda, ad->gamma0));
  } else {
    const auto& driven = std::get<DrivenAmplitudeDamping>(spec);
    driven_ad_visit(bell, grid, driven, integrator, record);
  }
  return out;
}

double positive_increment_sum(std::span<const double> values, std::size_t stride) {
  if (stride == 0) throw ConfigError("stride must be positive");
  double acc = 0.0;
  for (std::size_t i = stride; i < values.size(); i += stride) {
    acc += std::max(0.0, values[i] - values[i - stride]);
  }
  return acc;
}

MeasureResult accumulate(const MeasureSeries& series) {
  if (series.values.size() != series.grid.size()) {
    throw DimensionError("measure series length does not match its grid");
  }
  for (double v : series.values) {
    if (!std::isfinite(v) || v < -1e-12 || v > 1.0 + 1e-12) {
      throw InvariantViolation("measure series value outside [0, 1]");
    }
  }
  MeasureResult r{positive_increment_sum(series.values), series, false};
  if (series.values.size() >= 3) {
    const double coarse = positive_increment_sum(series.values, 2);
    r.converged = std::abs(r.value - coarse) < kConvergenceTolerance;
  }
  return r;
}

namespace {

template <class SeriesFn>
MeasureResult refine_until_converged(const ChannelSpec& spec, const MeasureOptions& options,
                                     SeriesFn&& make_series) {
  TimeGrid grid = options.grid.value_or(default_grid(spec));
  double last = 0.0;
  for (int attempt = 0; attempt <= options.max_doublings; ++attempt) {
    MeasureResult result = accumulate(make_series(grid));
    if (result.converged) return result;
    last = result.value;
    grid = grid.refined(2);
  }
  std::ostringstream os;
  os << "measure for " << describe(spec) << " did not converge after " << options.max_doublings
     << " grid doublings (last value " << last << ")";
  throw NonConvergence(os.str());
}

}  // namespace

MeasureResult n_trace_distance(const ChannelSpec& spec, const MeasureOptions& options) {
  if (std::holds_alternative<DrivenAmplitudeDamping>(spec)) {
    throw ConfigError("trace-distance measure is not defined for the driven AD channel");
  }
  return refine_until_converged(
      spec, options, [&](const TimeGrid& g) { return trace_distance_series(spec, g); });
}

MeasureResult n_entanglement(const ChannelSpec& spec, const MeasureOptions& options) {
  return refine_until_converged(spec, options, [&](const TimeGrid& g) {
    return entanglement_series(spec, g, options.integrator);
  });
}

MeasureResult n_measure(MeasureKind kind, const ChannelSpec& spec, const MeasureOptions& options) {
  return kind == MeasureKind::TraceDistance ? n_trace_distance(spec, options)
                                            : n_entanglement(spec, options);
}

}  // namespace nmsvr
