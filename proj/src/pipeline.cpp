#include "nmsvr/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "nmsvr/error.hpp"
#include "nmsvr/parallel.hpp"

namespace nmsvr {

PipelineResult run_pipeline(const DataTable& table, const PipelineOptions& options) {
  auto [train, test] = split(table, options.train_fraction, options.seed);
  SvrModel model = fit(train, options.svr, options.scaling);
  KktReport kkt = kkt_certificate(model, train, options.svr.tol);
  Evaluation ev;
  if (!test.empty()) ev = evaluate(model, test);
  return {std::move(model), std::move(train), std::move(test), ev, kkt};
}

Evaluation evaluate(const SvrModel& model, const DataTable& table) {
  if (table.empty()) throw ConfigError("cannot evaluate on an empty dataset");
  const auto p = model.predict(table);
  const auto y = table.targets();
  return {mae(p, y), max_abs_error(p, y), table.size()};
}

DataTable select_omega(const DataTable& table, double omega) {
  DataTable out(table.schema());
  out.meta = table.meta;
  for (const auto& s : table.samples()) {
    if (std::abs(s.omega - omega) <= 1e-12) out.add(s);
  }
  return out;
}

std::vector<Residual> residuals(const SvrModel& model, const DataTable& table) {
  const auto p = model.predict(table);
  std::vector<Residual> out;
  out.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& s = table[i];
    out.push_back({s.target, p[i], s.param, s.omega});
  }
  std::stable_sort(out.begin(), out.end(), [](const Residual& a, const Residual& b) { return a.target > b.target; });
  return out;
}

ChannelSpec make_spec(ChannelKind kind, double param, double omega) {
  switch (kind) {
    case ChannelKind::PhaseDamping: return PhaseDamping{param};
    case ChannelKind::AmplitudeDamping: return AmplitudeDamping{param, 1.0};
    case ChannelKind::DrivenAmplitudeDamping: return DrivenAmplitudeDamping{param, 1.0, omega, 8};
  }
  throw ConfigError("unknown channel kind");
}

std::vector<TrajectoryPoint> sweep_trajectory(ChannelKind kind, const std::vector<double>& params, double omega,
                                              double t_max, std::size_t steps) {
  if (params.empty()) throw ConfigError("sweep needs at least one parameter value");
  const TimeGrid grid(t_max, steps);
  const auto times = grid.values();
  std::vector<TrajectoryPoint> out;
  for (double p : params) {
    const auto f = features_at(make_spec(kind, p, omega), times);
    for (std::size_t i = 0; i < times.size(); ++i) {
      out.push_back({p, kind == ChannelKind::DrivenAmplitudeDamping ? omega : 0.0, times[i], f[3 * i], f[3 * i + 1],
                     f[3 * i + 2]});
    }
  }
  return out;
}

std::vector<MeasurePoint> sweep_measure(ChannelKind kind, MeasureKind measure, const std::vector<double>& params,
                                        const std::vector<double>& omegas, std::size_t threads) {
  if (params.empty()) throw ConfigError("sweep needs at least one parameter value");
  const std::vector<double> ws =
      kind == ChannelKind::DrivenAmplitudeDamping && !omegas.empty() ? omegas : std::vector<double>{0.0};
  std::vector<MeasurePoint> out(ws.size() * params.size());
  parallel_for(
      out.size(),
      [&](std::size_t k) {
        const double w = ws[k / params.size()];
        const double p = params[k % params.size()];
        ChannelSpec spec = make_spec(kind, p, w);
        for (std::size_t n_fock : {12, 16, 0}) {
          try {
            const auto r = n_measure(measure, spec);
            out[k] = {p, w, r.value, r.converged};
            return;
          } catch (const TruncationLeak&) {
            auto* driven = std::get_if<DrivenAmplitudeDamping>(&spec);
            if (!driven || n_fock == 0) throw;
            driven->n_fock = n_fock;
          }
        }
      },
      threads);
  return out;
}

}  // namespace nmsvr
