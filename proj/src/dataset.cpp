#include "nmsvr/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>

#include "nmsvr/error.hpp"
#include "nmsvr/parallel.hpp"
#include "nmsvr/version.hpp"

namespace nmsvr {

std::string to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::PhaseDamping: return "pd";
    case ChannelKind::AmplitudeDamping: return "ad";
    case ChannelKind::DrivenAmplitudeDamping: return "driven";
  }
  return "?";
}

ChannelKind parse_channel_kind(const std::string& s) {
  if (s == "pd") return ChannelKind::PhaseDamping;
  if (s == "ad") return ChannelKind::AmplitudeDamping;
  if (s == "driven" || s == "driven_ad") return ChannelKind::DrivenAmplitudeDamping;
  throw ConfigError("unknown channel '" + s + "' (expected pd, ad or driven)");
}

ChannelKind kind_of(const ChannelSpec& spec) {
  return static_cast<ChannelKind>(spec.index());
}

// ---------------------------------------------------------------------------

std::string format_double(double v) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc()) throw IoError("number formatting failed");
  return {buf, end};
}

namespace {

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && end == s.data() + s.size();
}

std::vector<std::string_view> split_view(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    const std::size_t next = s.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(s.substr(pos));
      return out;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
}

std::string join_doubles(std::span<const double> v, char sep = ';') {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += format_double(v[i]);
  }
  return out;
}

std::vector<double> parse_doubles(std::string_view s, char sep = ';') {
  std::vector<double> out;
  for (auto part : split_view(s, sep)) {
    double v = 0;
    if (!parse_double(part, v)) throw ParseError("bad number '" + std::string(part) + "'");
    out.push_back(v);
  }
  return out;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<double> ParamGrid::values() const {
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i) v[i] = (*this)[i];
  return v;
}

std::string ParamGrid::to_string() const {
  return format_double(start) + ":" + format_double(step) + ":" + std::to_string(count);
}

ParamGrid ParamGrid::parse(const std::string& s) {
  const auto parts = split_view(s, ':');
  ParamGrid g;
  double count = 0;
  if (parts.size() != 3 || !parse_double(parts[0], g.start) || !parse_double(parts[1], g.step) ||
      !parse_double(parts[2], count) || count < 1 || count != std::floor(count) ||
      !std::isfinite(g.start) || !std::isfinite(g.step)) {
    throw ConfigError("grid must be start:step:count, got '" + s + "'");
  }
  g.count = static_cast<std::size_t>(count);
  return g;
}

ParamGrid default_grid_pure_ad() { return {0.1, 1e-3, 2900}; }
ParamGrid default_grid_pure_pd() { return {0.1, 1e-4, 4000}; }
ParamGrid default_grid_driven_ad() { return {0.1, 1e-2, 290}; }

std::vector<double> default_omegas() {
  std::vector<double> w;
  for (int i = 1; i <= 20; ++i) w.push_back(i * 0.01);
  for (double x : {0.3, 0.4, 0.5}) w.push_back(x);
  return w;
}

// ---------------------------------------------------------------------------

std::vector<std::string> Schema::feature_names() const {
  std::vector<std::string> names;
  for (std::size_t k = 1; k <= times.size(); ++k) {
    for (const char* axis : {"ox", "oy", "oz"}) names.push_back(std::string(axis) + "_t" + std::to_string(k));
  }
  return names;
}

std::string Schema::param_name() const {
  return channel == ChannelKind::PhaseDamping ? "param_tau" : "param_lambda";
}

std::vector<std::string> Schema::header() const {
  std::vector<std::string> h{"target"};
  for (auto& n : feature_names()) h.push_back(n);
  h.push_back(param_name());
  h.push_back("param_omega");
  return h;
}

DataTable::DataTable(Schema schema) : schema_(std::move(schema)) {
  if (schema_.times.empty() || schema_.times.size() > 2) {
    throw SchemaError("a table needs one or two tomography times");
  }
}

void DataTable::add(Sample s) {
  if (s.features.size() != schema_.n_features()) {
    throw DimensionError("sample has " + std::to_string(s.features.size()) + " features, schema expects " +
                         std::to_string(schema_.n_features()));
  }
  for (double f : s.features) {
    if (!std::isfinite(f)) throw InvariantViolation("non-finite feature");
  }
  if (!std::isfinite(s.target) || s.target < 0.0) throw InvariantViolation("target must be finite and >= 0");
  if (!std::isfinite(s.param) || !std::isfinite(s.omega)) throw InvariantViolation("non-finite parameter");
  samples_.push_back(std::move(s));
}

std::vector<double> DataTable::targets() const {
  std::vector<double> y;
  y.reserve(samples_.size());
  for (const auto& s : samples_) y.push_back(s.target);
  return y;
}

std::vector<std::vector<double>> DataTable::features() const {
  std::vector<std::vector<double>> x;
  x.reserve(samples_.size());
  for (const auto& s : samples_) x.push_back(s.features);
  return x;
}

// ---------------------------------------------------------------------------
// Features

std::vector<double> bloch_vector(const DensityMatrix& rho) {
  if (rho.dim() != 2) throw DimensionError("bloch_vector needs a qubit state");
  // (e, g) ordering: <sy> = i(rho_eg - rho_ge) = -2 Im rho_eg. Adding 0.0
  // turns -0 into +0 so files never show a signed zero.
  return {2.0 * rho(0, 1).real() + 0.0, -2.0 * rho(0, 1).imag() + 0.0, rho(0, 0).real() - rho(1, 1).real() + 0.0};
}

DensityMatrix plus_response_from_choi(const DensityMatrix& rho_ab) {
  if (rho_ab.dim() != 4) throw DimensionError("expected an ancilla-qubit state");
  ComplexMatrix out(2, 2);
  for (std::size_t q = 0; q < 2; ++q)
    for (std::size_t p = 0; p < 2; ++p)
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b) out(q, p) += rho_ab(2 * a + q, 2 * b + p);
  return DensityMatrix(std::move(out));
}

namespace {

void check_times(std::span<const double> times) {
  if (times.empty()) throw ConfigError("at least one tomography time is required");
  for (double t : times) {
    if (!std::isfinite(t) || t < 0.0) throw ConfigError("tomography times must be finite and >= 0");
  }
}

}  // namespace

std::vector<double> features_at(const ChannelSpec& spec, std::span<const double> times,
                                const IntegratorOptions& integrator) {
  validate(spec);
  check_times(times);
  std::vector<double> out;
  out.reserve(3 * times.size());
  const DensityMatrix plus = DensityMatrix::plus();
  if (const auto* pd = std::get_if<PhaseDamping>(&spec)) {
    for (double t : times) {
      auto b = bloch_vector(pd_apply(plus, t, pd->tau));
      out.insert(out.end(), b.begin(), b.end());
    }
  } else if (const auto* ad = std::get_if<AmplitudeDamping>(&spec)) {
    for (double t : times) {
      auto b = bloch_vector(ad_apply(plus, t, ad->lambda, ad->gamma0));
      out.insert(out.end(), b.begin(), b.end());
    }
  } else {
    const auto& driven = std::get<DrivenAmplitudeDamping>(spec);
    std::vector<std::size_t> order(times.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return times[a] < times[b]; });
    out.assign(3 * times.size(), 0.0);
    PseudomodeIntegrator integ(driven, plus, integrator);
    for (std::size_t k : order) {
      integ.advance(times[k] - integ.time());
      auto b = bloch_vector(integ.reduced_state());
      std::copy(b.begin(), b.end(), out.begin() + 3 * k);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generation

namespace {

class Progress {
 public:
  Progress(const ProgressFn& fn, std::size_t total) : fn_(fn), total_(total) {}
  void tick() {
    const std::size_t done = ++done_;
    if (!fn_) return;
    std::lock_guard lock(mutex_);
    fn_(done, total_);
  }

 private:
  const ProgressFn& fn_;
  std::size_t total_;
  std::atomic<std::size_t> done_{0};
  std::mutex mutex_;
};

void fill_common_meta(DataTable& table, const ParamGrid& grid, const MeasureOptions& measure) {
  table.meta["grid"] = grid.to_string();
  table.meta["gamma0"] = "1";
  table.meta["state"] = "plus";
  table.meta["bell"] = "phi_plus";
  table.meta["horizon"] = measure.grid ? format_double(measure.grid->t_max()) + ":" +
                                             std::to_string(measure.grid->n_steps())
                                       : "default";
  table.meta["seed"] = "none";
  table.meta["version"] = kVersion;
  table.meta["format"] = kFormatVersion;
}

template <class MakeSpec>
DataTable generate_pure(ChannelKind kind, MeasureKind measure, std::vector<double> times,
                        const GenerateOptions& options, const ParamGrid& grid, MakeSpec make_spec) {
  check_times(times);
  DataTable table(Schema{kind, measure, times});
  fill_common_meta(table, grid, options.measure);
  std::vector<Sample> rows(grid.count);
  Progress progress(options.progress, grid.count);
  parallel_for(
      grid.count,
      [&](std::size_t i) {
        const double p = grid[i];
        const ChannelSpec spec = make_spec(p);
        Sample& s = rows[i];
        s.param = p;
        s.target = n_measure(measure, spec, options.measure).value;
        s.features = features_at(spec, times, options.measure.integrator);
        progress.tick();
      },
      options.threads);
  table.reserve(rows.size());
  for (auto& r : rows) table.add(std::move(r));
  return table;
}

}  // namespace

DataTable generate_pure_ad(MeasureKind measure, std::vector<double> times,
                           const GenerateOptions& options) {
  const ParamGrid grid = options.grid.value_or(default_grid_pure_ad());
  return generate_pure(ChannelKind::AmplitudeDamping, measure, std::move(times), options, grid,
                       [](double l) { return ChannelSpec{AmplitudeDamping{l, 1.0}}; });
}

DataTable generate_pure_pd(MeasureKind measure, std::vector<double> times,
                           const GenerateOptions& options) {
  const ParamGrid grid = options.grid.value_or(default_grid_pure_pd());
  return generate_pure(ChannelKind::PhaseDamping, measure, std::move(times), options, grid,
                       [](double tau) { return ChannelSpec{PhaseDamping{tau}}; });
}

namespace {

struct DrivenRow {
  double target = 0.0;
  std::vector<std::vector<double>> bloch;  // per requested time
  std::size_t n_fock = 0;
};

DrivenRow driven_row_at(const DrivenAmplitudeDamping& spec, std::span<const double> times,
                        const MeasureOptions& measure) {
  TimeGrid grid = measure.grid.value_or(default_grid(spec));
  double last = 0.0;
  for (int attempt = 0; attempt <= measure.max_doublings; ++attempt) {
    std::vector<std::size_t> index(times.size(), SIZE_MAX);
    for (std::size_t j = 0; j < times.size(); ++j) {
      const double pos = times[j] / grid.step();
      const auto i = static_cast<std::size_t>(std::llround(pos));
      if (i < grid.size() && std::abs(grid[i] - times[j]) <= 1e-12 * std::max(1.0, times[j])) index[j] = i;
    }
    DrivenRow row;
    row.bloch.resize(times.size());
    auto observe = [&](std::size_t i, const DensityMatrix& rho_ab) {
      for (std::size_t j = 0; j < times.size(); ++j) {
        if (index[j] == i) row.bloch[j] = bloch_vector(plus_response_from_choi(rho_ab));
      }
    };
    const MeasureResult r = accumulate(entanglement_series(spec, grid, measure.integrator, observe));
    if (r.converged) {
      for (std::size_t j = 0; j < times.size(); ++j) {
        if (index[j] == SIZE_MAX) row.bloch[j] = features_at(spec, times.subspan(j, 1), measure.integrator);
      }
      row.target = r.value;
      row.n_fock = spec.n_fock;
      return row;
    }
    last = r.value;
    grid = grid.refined(2);
  }
  std::ostringstream os;
  os << "measure for " << describe(spec) << " did not converge after " << measure.max_doublings
     << " grid doublings (last value " << last << ")";
  throw NonConvergence(os.str());
}

DrivenRow driven_row(double lambda, double omega, std::span<const double> times,
                     const DrivenOptions& options) {
  if (options.fock_ladder.empty()) throw ConfigError("empty Fock truncation ladder");
  for (std::size_t k = 0;; ++k) {
    const DrivenAmplitudeDamping spec{lambda, 1.0, omega, options.fock_ladder[k]};
    try {
      return driven_row_at(spec, times, options.measure);
    } catch (const TruncationLeak&) {
      if (k + 1 == options.fock_ladder.size()) throw;
    }
  }
}

}  // namespace

std::vector<DataTable> generate_driven_ad(const std::vector<std::vector<double>>& time_sets,
                                          const DrivenOptions& options) {
  if (time_sets.empty()) throw ConfigError("no tomography time sets given");
  std::vector<double> all;
  for (const auto& ts : time_sets) {
    check_times(ts);
    all.insert(all.end(), ts.begin(), ts.end());
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  if (options.omegas.empty()) throw ConfigError("no drive strengths given");

  const ParamGrid grid = options.grid.value_or(default_grid_driven_ad());
  const std::size_t n_rows = grid.count * options.omegas.size();
  std::vector<DrivenRow> rows(n_rows);
  Progress progress(options.progress, n_rows);
  parallel_for(
      n_rows,
      [&](std::size_t r) {
        const double omega = options.omegas[r / grid.count];
        rows[r] = driven_row(grid[r % grid.count], omega, all, options);
        progress.tick();
      },
      options.threads);

  std::size_t n_fock_max = 0;
  for (const auto& row : rows) n_fock_max = std::max(n_fock_max, row.n_fock);

  std::vector<DataTable> tables;
  for (const auto& ts : time_sets) {
    DataTable table(Schema{ChannelKind::DrivenAmplitudeDamping, MeasureKind::Entanglement, ts});
    fill_common_meta(table, grid, options.measure);
    table.meta["omegas"] = join_doubles(options.omegas);
    table.meta["frame"] = "rotating";
    table.meta["n_fock_max"] = std::to_string(n_fock_max);
    table.reserve(n_rows);
    for (std::size_t r = 0; r < n_rows; ++r) {
      Sample s;
      s.param = grid[r % grid.count];
      s.omega = options.omegas[r / grid.count];
      s.target = rows[r].target;
      for (double t : ts) {
        const auto j = static_cast<std::size_t>(std::lower_bound(all.begin(), all.end(), t) - all.begin());
        s.features.insert(s.features.end(), rows[r].bloch[j].begin(), rows[r].bloch[j].end());
      }
      table.add(std::move(s));
    }
    tables.push_back(std::move(table));
  }
  return tables;
}

DataTable generate_driven_ad(std::vector<double> times, const DrivenOptions& options) {
  return std::move(generate_driven_ad(std::vector<std::vector<double>>{std::move(times)}, options).front());
}

// ---------------------------------------------------------------------------
// Standardization

std::vector<double> Scaler::transform(std::span<const double> x) const {
  std::vector<double> out(x.begin(), x.end());
  transform_in_place(out);
  return out;
}

void Scaler::transform_in_place(std::span<double> x) const {
  if (x.size() != mean.size()) {
    throw DimensionError("scaler expects " + std::to_string(mean.size()) + " features, got " +
                         std::to_string(x.size()));
  }
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = (x[k] - mean[k]) / scale[k];
}

Scaler Scaler::identity(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 1.0)}; }

Scaler scaler_fit(const std::vector<std::vector<double>>& rows, ZeroVariancePolicy policy) {
  if (rows.empty()) throw ConfigError("cannot fit a scaler on zero rows");
  const std::size_t d = rows.front().size();
  const double n = static_cast<double>(rows.size());
  Scaler sc{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (const auto& r : rows) {
    if (r.size() != d) throw DimensionError("ragged feature rows");
    for (std::size_t k = 0; k < d; ++k) sc.mean[k] += r[k];
  }
  for (auto& u : sc.mean) u /= n;
  for (const auto& r : rows)
    for (std::size_t k = 0; k < d; ++k) sc.scale[k] += (r[k] - sc.mean[k]) * (r[k] - sc.mean[k]);
  for (std::size_t k = 0; k < d; ++k) {
    double s = std::sqrt(sc.scale[k] / n);
    if (!(s > 1e-12 * std::max(1.0, std::abs(sc.mean[k])))) {
      if (policy == ZeroVariancePolicy::Reject) {
        throw ConfigError("feature column " + std::to_string(k) + " has zero variance");
      }
      s = 1.0;
    }
    sc.scale[k] = s;
  }
  return sc;
}

Scaler scaler_fit(const DataTable& table, ZeroVariancePolicy policy) {
  return scaler_fit(table.features(), policy);
}

DataTable scaler_apply(const Scaler& scaler, const DataTable& table) {
  DataTable out(table.schema());
  out.meta = table.meta;
  out.meta["standardized"] = "1";
  out.reserve(table.size());
  for (Sample s : table.samples()) {
    scaler.transform_in_place(s.features);
    out.add(std::move(s));
  }
  return out;
}

void write_scaler(std::ostream& os, const Scaler& scaler) {
  os << "nmsvr-scaler " << kFormatVersion << " std=population n=" << scaler.size() << '\n';
  for (std::size_t k = 0; k < scaler.size(); ++k) {
    os << format_double(scaler.mean[k]) << ' ' << format_double(scaler.scale[k]) << '\n';
  }
}

Scaler read_scaler(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("scaler: missing version line");
  strip_cr(line);
  std::istringstream head(line);
  std::string magic, version, convention, count;
  head >> magic >> version >> convention >> count;
  if (magic != "nmsvr-scaler") throw ParseError("scaler: bad header '" + line + "'");
  if (version != kFormatVersion) throw VersionError("scaler: unsupported version '" + version + "'");
  if (convention != "std=population") throw ParseError("scaler: unknown convention '" + convention + "'");
  double nd = 0;
  if (count.rfind("n=", 0) != 0 || !parse_double(std::string_view(count).substr(2), nd) || nd < 0 ||
      nd != std::floor(nd)) {
    throw ParseError("scaler: bad feature count '" + count + "'");
  }
  const auto n = static_cast<std::size_t>(nd);
  Scaler sc{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::getline(is, line)) throw ParseError("scaler: truncated after " + std::to_string(k) + " rows");
    strip_cr(line);
    const auto parts = split_view(line, ' ');
    if (parts.size() != 2 || !parse_double(parts[0], sc.mean[k]) || !parse_double(parts[1], sc.scale[k]) ||
        !std::isfinite(sc.mean[k]) || !(sc.scale[k] > 0.0) || !std::isfinite(sc.scale[k])) {
      throw ParseError("scaler: bad row '" + line + "'");
    }
  }
  return sc;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  return is;
}

void finish(std::ofstream& os, const std::string& path) {
  os.flush();
  if (!os) throw IoError("write to '" + path + "' failed");
}

}  // namespace

void save_scaler(const Scaler& scaler, const std::string& path) {
  auto os = open_out(path);
  write_scaler(os, scaler);
  finish(os, path);
}

Scaler load_scaler(const std::string& path) {
  auto is = open_in(path);
  return read_scaler(is);
}

// ---------------------------------------------------------------------------
// Split

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  if (n == 0) throw ConfigError("uniform_below: empty range");
  // Reject the low 2^64 mod n values so every residue is equally likely.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t x = rng();
    if (x >= threshold) return x % n;
  }
}

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

std::pair<DataTable, DataTable> split(const DataTable& table, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1]");
  }
  const std::size_t n = table.size();
  const auto n_train = std::min(
      n, static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(n) - 1e-9)));
  const auto perm = seeded_permutation(n, seed);
  std::vector<char> in_train(n, 0);
  for (std::size_t i = 0; i < n_train; ++i) in_train[perm[i]] = 1;

  DataTable train(table.schema()), test(table.schema());
  train.meta = test.meta = table.meta;
  for (auto* t : {&train, &test}) {
    t->meta["seed"] = std::to_string(seed);
    t->meta["train_fraction"] = format_double(train_fraction);
  }
  train.meta["partition"] = "train";
  test.meta["partition"] = "test";
  train.reserve(n_train);
  test.reserve(n - n_train);
  for (std::size_t i = 0; i < n; ++i) (in_train[i] ? train : test).add(table[i]);
  return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// CSV

void write_csv(std::ostream& os, const DataTable& table) {
  const Schema& sc = table.schema();
  os << "#meta channel=" << to_string(sc.channel) << " measure=" << to_string(sc.measure)
     << " times=" << join_doubles(sc.times);
  for (const auto& [k, v] : table.meta) {
    if (k == "channel" || k == "measure" || k == "times") continue;
    os << ' ' << k << '=' << v;
  }
  os << '\n';
  const auto header = sc.header();
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';
  std::string line;
  for (const auto& s : table.samples()) {
    line = format_double(s.target);
    for (double f : s.features) {
      line += ',';
      line += format_double(f);
    }
    line += ',';
    line += format_double(s.param);
    line += ',';
    line += format_double(s.omega);
    line += '\n';
    os << line;
  }
}

DataTable read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw SchemaError("dataset is empty (no #meta line)");
  strip_cr(line);
  if (line.rfind("#meta", 0) != 0) throw SchemaError("dataset does not start with a #meta line");

  std::map<std::string, std::string> meta;
  std::istringstream tokens(line.substr(5));
  std::string tok;
  while (tokens >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0) throw SchemaError("malformed #meta entry '" + tok + "'");
    meta[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  for (const char* key : {"channel", "measure", "times"}) {
    if (!meta.count(key)) throw SchemaError(std::string("#meta is missing '") + key + "'");
  }
  if (meta.count("format") && meta["format"] != kFormatVersion) {
    throw VersionError("dataset format '" + meta["format"] + "' is not supported (expected " + kFormatVersion + ")");
  }
  Schema schema;
  try {
    schema.channel = parse_channel_kind(meta["channel"]);
    schema.measure = parse_measure_kind(meta["measure"]);
    schema.times = parse_doubles(meta["times"]);
  } catch (const Error& e) {
    throw SchemaError(std::string("#meta: ") + e.what());
  }
  if (schema.times.empty() || schema.times.size() > 2) throw SchemaError("#meta: one or two times expected");

  if (!std::getline(is, line)) throw SchemaError("dataset has no header line");
  strip_cr(line);
  const auto expected = schema.header();
  const auto got = split_view(line, ',');
  bool same = got.size() == expected.size();
  for (std::size_t i = 0; same && i < got.size(); ++i) same = got[i] == expected[i];
  if (!same) throw SchemaError("dataset header '" + line + "' does not match the #meta schema");

  DataTable table(schema);
  for (const char* key : {"channel", "measure", "times"}) meta.erase(key);
  table.meta = std::move(meta);
  const std::size_t d = schema.n_features();
  std::size_t line_no = 2;
  while (std::getline(is, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_view(line, ',');
    if (cells.size() != expected.size()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(expected.size()) +
                       " columns, found " + std::to_string(cells.size()));
    }
    std::vector<double> v(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (!parse_double(cells[i], v[i]) || !std::isfinite(v[i])) {
        throw ParseError("line " + std::to_string(line_no) + ": bad number '" + std::string(cells[i]) + "'");
      }
    }
    Sample s;
    s.target = v[0];
    s.features.assign(v.begin() + 1, v.begin() + 1 + static_cast<std::ptrdiff_t>(d));
    s.param = v[1 + d];
    s.omega = v[2 + d];
    try {
      table.add(std::move(s));
    } catch (const InvariantViolation& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return table;
}

void save_csv(const DataTable& table, const std::string& path) {
  auto os = open_out(path);
  write_csv(os, table);
  finish(os, path);
}

DataTable load_csv(const std::string& path) {
  auto is = open_in(path);
  return read_csv(is);
}

}  // namespace nmsvr
