// nmsvr: dataset generation, training, evaluation, sweeps and the figure
// reproduction chain.
//
// Exit codes: 0 ok, 1 unexpected failure, 2 configuration or schema error,
// 3 numeric failure (non-convergence, truncation leak), 4 I/O failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nmsvr/error.hpp"
#include "nmsvr/pipeline.hpp"
#include "nmsvr/version.hpp"

namespace fs = std::filesystem;
using namespace nmsvr;

namespace {

enum Exit { kOk = 0, kUnexpected = 1, kConfig = 2, kNumeric = 3, kIo = 4 };

using Resolved = std::vector<std::pair<std::string, std::string>>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// key=value lines; blank lines, '#' comments and empty values ignored.
std::vector<std::string> config_args(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config file '" + path + "'");
  std::vector<std::string> args;
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(n) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty() || key == "config") throw ConfigError(path + ":" + std::to_string(n) + ": bad key");
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) continue;
    if (value == "true") {
      args.push_back("--" + key);
    } else if (value != "false") {
      args.push_back("--" + key + "=" + value);
    }
  }
  return args;
}

// Config entries go right after the subcommand so that explicit flags, which
// come later, win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (path && !args.empty()) {
    auto extra = config_args(*path);
    args.insert(args.begin() + 1, extra.begin(), extra.end());
  }
  return args;
}

void ensure_fresh(const std::vector<std::string>& paths) {
  for (const auto& p : paths) {
    if (fs::exists(p)) throw IoError("refusing to overwrite existing output '" + p + "'");
  }
}

void write_config(const std::string& path, const std::string& command, const Resolved& values) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write '" + path + "'");
  os << "# nmsvr " << kVersion << ' ' << command << '\n';
  for (const auto& [k, v] : values) os << k << '=' << v << '\n';
  if (!os) throw IoError("write to '" + path + "' failed");
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ConfigError("bad number '" + item + "' in " + what);
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(what + " is empty");
  return out;
}

void print_target_stats(const DataTable& t) {
  if (t.empty()) {
    std::cout << "rows: 0\n";
    return;
  }
  const auto y = t.targets();
  double lo = y[0], hi = y[0], sum = 0;
  std::size_t zeros = 0;
  for (double v : y) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    sum += v;
    zeros += v == 0.0;
  }
  std::cout << "rows: " << t.size() << "\n"
            << "target min/mean/max: " << lo << " / " << sum / static_cast<double>(y.size()) << " / " << hi << "\n"
            << "targets equal to 0: " << zeros << "\n";
}

ProgressFn stderr_progress(const std::string& label) {
  return [label, last = std::size_t{0}](std::size_t done, std::size_t total) mutable {
    const std::size_t pct = 100 * done / total;
    if (pct >= last + 5 || done == total) {
      last = pct;
      std::cerr << label << ": " << done << "/" << total << " (" << pct << "%)\n";
    }
  };
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string channel, measure = "entanglement", grid, omegas, out;
  double tc = 3.0;
  std::optional<double> tc2;
  std::size_t threads = 0;
};

DataTable generate_table(const GenerateArgs& a, bool progress) {
  const ChannelKind kind = parse_channel_kind(a.channel);
  const MeasureKind measure = parse_measure_kind(a.measure);
  std::vector<double> times{a.tc};
  if (a.tc2) times.push_back(*a.tc2);
  if (kind == ChannelKind::DrivenAmplitudeDamping) {
    if (measure != MeasureKind::Entanglement) {
      throw ConfigError("the driven channel supports only the entanglement measure");
    }
    DrivenOptions o;
    if (!a.grid.empty()) o.grid = ParamGrid::parse(a.grid);
    if (!a.omegas.empty()) o.omegas = parse_list(a.omegas, "--omegas");
    o.threads = a.threads;
    if (progress) o.progress = stderr_progress("generate");
    return generate_driven_ad(times, o);
  }
  GenerateOptions o;
  if (!a.grid.empty()) o.grid = ParamGrid::parse(a.grid);
  o.threads = a.threads;
  if (progress) o.progress = stderr_progress("generate");
  return kind == ChannelKind::PhaseDamping ? generate_pure_pd(measure, times, o)
                                           : generate_pure_ad(measure, times, o);
}

int cmd_generate(const GenerateArgs& a) {
  // Validate everything before touching the filesystem or computing.
  parse_channel_kind(a.channel);
  parse_measure_kind(a.measure);
  if (!a.grid.empty()) ParamGrid::parse(a.grid);
  if (!a.omegas.empty()) parse_list(a.omegas, "--omegas");
  const std::string cfg = a.out + ".config";
  ensure_fresh({a.out, cfg});
  DataTable t = generate_table(a, true);
  save_csv(t, a.out);
  write_config(cfg, "generate",
               {{"channel", a.channel}, {"measure", a.measure}, {"tc", format_double(a.tc)},
                {"tc2", a.tc2 ? format_double(*a.tc2) : ""}, {"grid", a.grid.empty() ? t.meta.at("grid") : a.grid},
                {"omegas", a.omegas}, {"out", a.out}});
  print_target_stats(t);
  std::cout << "wrote " << a.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct SvrArgs {
  double epsilon = 1e-3, cost = 1.0, tol = 1e-3;
  std::string gamma = "scale";
  std::size_t max_iter = 10'000'000;
  bool no_scale = false;

  void add_to(CLI::App* app) {
    app->add_option("--epsilon", epsilon, "Tube half-width")->capture_default_str();
    app->add_option("--cost", cost, "Penalty C")->capture_default_str();
    app->add_option("--tol", tol, "KKT stopping tolerance")->capture_default_str();
    app->add_option("--gamma", gamma, "RBF coefficient or 'scale'")->capture_default_str();
    app->add_option("--max-iter", max_iter, "Solver update cap")->capture_default_str();
    app->add_flag("--no-scale", no_scale, "Skip feature standardization");
  }

  SvrConfig config() const {
    SvrConfig c;
    c.C = cost;
    c.epsilon = epsilon;
    c.tol = tol;
    c.max_iter = max_iter;
    if (gamma != "scale") c.gamma = parse_list(gamma, "--gamma").at(0);
    c.validate();
    return c;
  }

  void resolve(Resolved& r) const {
    r.emplace_back("epsilon", format_double(epsilon));
    r.emplace_back("cost", format_double(cost));
    r.emplace_back("tol", format_double(tol));
    r.emplace_back("gamma", gamma);
    r.emplace_back("max-iter", std::to_string(max_iter));
    r.emplace_back("no-scale", no_scale ? "true" : "false");
  }
};

struct TrainArgs {
  std::string data, out;
  std::uint64_t seed = 42;
  double train_fraction = 0.7;
  SvrArgs svr;
};

int cmd_train(const TrainArgs& a) {
  const SvrConfig config = a.svr.config();
  const std::string report = a.out + ".report", train_csv = a.out + ".train.csv", test_csv = a.out + ".test.csv",
                    cfg = a.out + ".config";
  ensure_fresh({a.out, report, train_csv, test_csv, cfg});
  const DataTable table = load_csv(a.data);
  if (table.size() < 2) throw ConfigError("training needs at least two rows");

  PipelineOptions po;
  po.seed = a.seed;
  po.train_fraction = a.train_fraction;
  po.svr = config;
  po.scaling = a.svr.no_scale ? Scaling::None : Scaling::Standardize;
  const PipelineResult r = run_pipeline(table, po);

  save_model(r.model, a.out);
  save_csv(r.train, train_csv);
  save_csv(r.test, test_csv);
  Resolved res{{"data", a.data}, {"out", a.out}, {"seed", std::to_string(a.seed)},
               {"train-fraction", format_double(a.train_fraction)}};
  a.svr.resolve(res);
  write_config(cfg, "train", res);

  std::ofstream os(report);
  if (!os) throw IoError("cannot write '" + report + "'");
  os << "data=" << a.data << "\n"
     << "channel=" << to_string(table.schema().channel) << "\n"
     << "measure=" << to_string(table.schema().measure) << "\n"
     << "rows=" << table.size() << "\ntrain_rows=" << r.train.size() << "\ntest_rows=" << r.test.size() << "\n"
     << "seed=" << a.seed << "\n"
     << "scaling=" << (a.svr.no_scale ? "none" : "standardize") << "\n"
     << "gamma=" << format_double(r.model.gamma) << "\n"
     << "support_vectors=" << r.model.support_vectors.size() << "\n"
     << "iterations=" << r.model.info.iterations << "\n"
     << "converged=" << (r.model.info.converged ? "true" : "false") << "\n"
     << "max_violation=" << format_double(r.model.info.max_violation) << "\n"
     << "kkt_ok=" << (r.kkt.ok ? "true" : "false") << "\n"
     << "kkt_worst_residual=" << format_double(r.kkt.worst) << "\n";
  if (!r.test.empty()) {
    os << "test_mae=" << format_double(r.test_eval.mae) << "\n"
       << "test_max_error=" << format_double(r.test_eval.max_error) << "\n";
  }
  if (!os) throw IoError("write to '" + report + "' failed");

  std::cout << "support vectors: " << r.model.support_vectors.size() << "\n"
            << "iterations: " << r.model.info.iterations << "\n"
            << "KKT certificate: " << (r.kkt.ok ? "ok" : "violated") << " (worst " << r.kkt.worst << ")\n";
  if (!r.test.empty()) std::cout << "test MAE: " << r.test_eval.mae << " over " << r.test.size() << " rows\n";
  std::cout << "wrote " << a.out << "\n";
  if (!r.model.info.converged) {
    std::cerr << "warning: solver stopped at max-iter " << config.max_iter << " with violation "
              << r.model.info.max_violation << "\n";
    return kNumeric;
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string model, data, out;
  std::optional<double> omega;
};

int cmd_evaluate(const EvaluateArgs& a) {
  if (!a.out.empty()) ensure_fresh({a.out, a.out + ".config"});
  const SvrModel model = load_model(a.model);
  DataTable table = load_csv(a.data);
  if (a.omega) table = select_omega(table, *a.omega);
  const Evaluation ev = evaluate(model, table);
  std::cout << "rows: " << ev.rows << "\nMAE: " << ev.mae << "\nmax error: " << ev.max_error << "\n";
  if (!a.out.empty()) {
    std::ofstream os(a.out);
    if (!os) throw IoError("cannot write '" + a.out + "'");
    os << "rank,target,prediction,residual," << table.schema().param_name() << ",param_omega\n";
    std::size_t rank = 0;
    for (const auto& r : residuals(model, table)) {
      os << rank++ << ',' << format_double(r.target) << ',' << format_double(r.prediction) << ','
         << format_double(r.prediction - r.target) << ',' << format_double(r.param) << ',' << format_double(r.omega)
         << '\n';
    }
    if (!os) throw IoError("write to '" + a.out + "' failed");
    write_config(a.out + ".config", "evaluate",
                 {{"model", a.model}, {"data", a.data}, {"omega", a.omega ? format_double(*a.omega) : ""},
                  {"out", a.out}});
    std::cout << "wrote " << a.out << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  std::string channel, quantity = "measure", measure = "entanglement", values, grid, omegas, out;
  double tmax = 10.0;
  std::size_t steps = 200;
  std::size_t threads = 0;
};

int cmd_sweep(const SweepArgs& a) {
  const ChannelKind kind = parse_channel_kind(a.channel);
  const MeasureKind measure = parse_measure_kind(a.measure);
  if (a.values.empty() == a.grid.empty()) throw ConfigError("give exactly one of --values and --grid");
  const std::vector<double> params = a.values.empty() ? ParamGrid::parse(a.grid).values() : parse_list(a.values, "--values");
  const std::vector<double> omegas = a.omegas.empty() ? std::vector<double>{0.0} : parse_list(a.omegas, "--omegas");
  if (a.quantity != "measure" && a.quantity != "trajectory") {
    throw ConfigError("--quantity must be 'measure' or 'trajectory'");
  }
  if (kind == ChannelKind::DrivenAmplitudeDamping && measure == MeasureKind::TraceDistance && a.quantity == "measure") {
    throw ConfigError("the driven channel supports only the entanglement measure");
  }
  ensure_fresh({a.out, a.out + ".config"});

  std::ofstream os(a.out);
  if (!os) throw IoError("cannot write '" + a.out + "'");
  const std::string pname = kind == ChannelKind::PhaseDamping ? "tau" : "lambda";
  std::size_t rows = 0;
  if (a.quantity == "trajectory") {
    os << pname << ",omega," << (kind == ChannelKind::PhaseDamping ? "nu" : "t") << ",ox,oy,oz\n";
    for (double w : omegas) {
      for (const auto& p : sweep_trajectory(kind, params, w, a.tmax, a.steps)) {
        os << format_double(p.param) << ',' << format_double(p.omega) << ',' << format_double(p.t) << ','
           << format_double(p.ox) << ',' << format_double(p.oy) << ',' << format_double(p.oz) << '\n';
        ++rows;
      }
      if (kind != ChannelKind::DrivenAmplitudeDamping) break;
    }
  } else {
    os << pname << ",omega," << to_string(measure) << ",converged\n";
    for (const auto& p : sweep_measure(kind, measure, params, omegas, a.threads)) {
      os << format_double(p.param) << ',' << format_double(p.omega) << ',' << format_double(p.value) << ','
         << (p.converged ? 1 : 0) << '\n';
      ++rows;
    }
  }
  if (!os) throw IoError("write to '" + a.out + "' failed");
  write_config(a.out + ".config", "sweep",
               {{"channel", a.channel}, {"quantity", a.quantity}, {"measure", a.measure}, {"values", a.values},
                {"grid", a.grid}, {"omegas", a.omegas}, {"tmax", format_double(a.tmax)},
                {"steps", std::to_string(a.steps)}, {"out", a.out}});
  std::cout << "rows: " << rows << "\nwrote " << a.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string model, features, data, out;
};

int cmd_predict(const PredictArgs& a) {
  if (a.features.empty() == a.data.empty()) throw ConfigError("give exactly one of --features and --data");
  if (!a.out.empty()) ensure_fresh({a.out});
  const SvrModel model = load_model(a.model);
  std::vector<double> preds;
  if (!a.features.empty()) {
    const auto x = parse_list(a.features, "--features");
    if (x.size() != model.n_features()) {
      throw SchemaError("model expects " + std::to_string(model.n_features()) + " features, got " +
                        std::to_string(x.size()));
    }
    preds.push_back(model.predict(x));
  } else {
    preds = model.predict(load_csv(a.data));
  }
  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw IoError("cannot write '" + a.out + "'");
  }
  std::ostream& os = a.out.empty() ? std::cout : file;
  os << "prediction\n";
  for (double p : preds) os << format_double(p) << '\n';
  if (!os) throw IoError("writing predictions failed");
  return kOk;
}

// ---------------------------------------------------------------------------

struct ReproduceArgs {
  std::string out_dir, figures = "1,2,3,4,5";
  std::uint64_t seed = 42;
  bool full = false;
};

int cmd_reproduce(const ReproduceArgs& a) {
  std::set<int> figs;
  for (double f : parse_list(a.figures, "--figures")) {
    if (f != 1 && f != 2 && f != 3 && f != 4 && f != 5) throw ConfigError("figures are numbered 1 to 5");
    figs.insert(static_cast<int>(f));
  }
  ensure_fresh({a.out_dir});
  fs::create_directories(a.out_dir);
  const auto path = [&](const std::string& name) { return (fs::path(a.out_dir) / name).string(); };
  write_config(path("reproduce.config"), "reproduce",
               {{"out-dir", a.out_dir}, {"figures", a.figures}, {"seed", std::to_string(a.seed)},
                {"full", a.full ? "true" : "false"}});
  std::ofstream summary(path("summary.txt"));
  auto report = [&](const std::string& line) {
    std::cout << line << std::endl;
    summary << line << '\n';
  };
  PipelineOptions po;
  po.seed = a.seed;

  if (figs.count(1)) {
    std::ofstream os(path("fig1_ox.csv"));
    os << "lambda,t,ox\n";
    for (const auto& p : sweep_trajectory(ChannelKind::AmplitudeDamping, {0.1, 0.5, 1.0, 2.0, 3.0, 5.0}, 0.0, 10.0, 500)) {
      os << format_double(p.param) << ',' << format_double(p.t) << ',' << format_double(p.ox) << '\n';
    }
    report("fig1: wrote fig1_ox.csv");
  }

  std::optional<SvrModel> pure_ne;
  if (figs.count(2) || figs.count(3)) {
    for (ChannelKind kind : {ChannelKind::AmplitudeDamping, ChannelKind::PhaseDamping}) {
      for (MeasureKind m : {MeasureKind::TraceDistance, MeasureKind::Entanglement}) {
        if (!figs.count(2) && !(kind == ChannelKind::AmplitudeDamping && m == MeasureKind::Entanglement)) continue;
        const DataTable t = kind == ChannelKind::AmplitudeDamping ? generate_pure_ad(m) : generate_pure_pd(m);
        const std::string stem = "fig2_" + to_string(kind) + "_" + to_string(m);
        save_csv(t, path(stem + ".csv"));
        PipelineResult r = run_pipeline(t, po);
        std::ofstream os(path(stem + "_residuals.csv"));
        os << "rank,target,prediction\n";
        std::size_t rank = 0;
        for (const auto& res : residuals(r.model, r.test)) {
          os << rank++ << ',' << format_double(res.target) << ',' << format_double(res.prediction) << '\n';
        }
        std::ostringstream line;
        line << "fig2 " << to_string(kind) << " " << to_string(m) << ": test MAE " << r.test_eval.mae << " (kkt "
             << (r.kkt.ok ? "ok" : "violated") << ")";
        report(line.str());
        if (kind == ChannelKind::AmplitudeDamping && m == MeasureKind::Entanglement) pure_ne = r.model;
      }
    }
  }

  if (figs.count(3)) {
    DrivenOptions o;
    o.omegas = {0.01, 0.05, 0.09, 0.20};
    o.progress = stderr_progress("fig3");
    const DataTable d = generate_driven_ad(std::vector<double>{3.0}, o);
    save_csv(d, path("fig3_driven.csv"));
    std::ofstream os(path("fig3_mismatch.csv"));
    os << "omega,mae\n";
    for (double w : o.omegas) {
      const Evaluation ev = evaluate(*pure_ne, select_omega(d, w));
      os << format_double(w) << ',' << format_double(ev.mae) << '\n';
      std::ostringstream line;
      line << "fig3 omega " << w << ": MAE " << ev.mae;
      report(line.str());
    }
  }

  if (figs.count(4)) {
    std::vector<double> lambdas;
    for (int i = 0; i < 30; ++i) lambdas.push_back(0.1 * (i + 1));
    std::ofstream os(path("fig4_ne.csv"));
    os << "lambda,omega,ne\n";
    for (const auto& p : sweep_measure(ChannelKind::DrivenAmplitudeDamping, MeasureKind::Entanglement, lambdas,
                                       {0.0, 0.05, 0.1, 0.2, 0.5})) {
      os << format_double(p.param) << ',' << format_double(p.omega) << ',' << format_double(p.value) << '\n';
    }
    report("fig4: wrote fig4_ne.csv");
  }

  if (figs.count(5)) {
    DrivenOptions o;
    if (!a.full) o.grid = ParamGrid{0.1, 0.1, 29};
    o.progress = stderr_progress("fig5");
    const std::vector<std::vector<double>> sets{{3.0}, {5.0}, {3.0, 6.0}, {5.0, 10.0}};
    const auto tables = generate_driven_ad(sets, o);
    for (std::size_t k = 0; k < sets.size(); ++k) {
      std::string stem = "fig5_tc" + format_double(sets[k][0]);
      if (sets[k].size() > 1) stem += "_" + format_double(sets[k][1]);
      save_csv(tables[k], path(stem + ".csv"));
      const PipelineResult r = run_pipeline(tables[k], po);
      std::ostringstream line;
      line << "fig5 " << stem << ": test MAE " << r.test_eval.mae << " (kkt " << (r.kkt.ok ? "ok" : "violated") << ")";
      report(line.str());
    }
  }
  return kOk;
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config: return kConfig;
    case ErrorKind::Numeric: return kNumeric;
    case ErrorKind::Io: return kIo;
  }
  return kUnexpected;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-Markovianity datasets and support-vector regression", "nmsvr"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("nmsvr ") + kVersion);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  const std::string config_help = "key=value file; explicit flags take precedence";

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a dataset");
  g->add_option("--channel", gen.channel, "pd, ad or driven")->required();
  g->add_option("--measure", gen.measure, "trace or entanglement")->capture_default_str();
  g->add_option("--tc", gen.tc, "Tomography time")->capture_default_str();
  g->add_option("--tc2", gen.tc2, "Second tomography time");
  g->add_option("--grid", gen.grid, "Parameter grid start:step:count");
  g->add_option("--omegas", gen.omegas, "Comma-separated drive strengths (driven)");
  g->add_option("--threads", gen.threads, "Worker cap (0 = all cores)");
  g->add_option("--out", gen.out, "Output CSV")->required();
  g->add_option("--config", config_help);

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Split, standardize and fit an SVR model");
  t->add_option("--data", tr.data, "Dataset CSV")->required();
  t->add_option("--out", tr.out, "Model file")->required();
  t->add_option("--seed", tr.seed, "Split seed")->capture_default_str();
  t->add_option("--train-fraction", tr.train_fraction, "Training share")->capture_default_str();
  tr.svr.add_to(t);
  t->add_option("--config", config_help);

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Score a model on a dataset");
  e->add_option("--model", ev.model, "Model file")->required();
  e->add_option("--data", ev.data, "Dataset CSV")->required();
  e->add_option("--omega", ev.omega, "Only rows with this drive strength");
  e->add_option("--out", ev.out, "Residual dump CSV");
  e->add_option("--config", config_help);

  SweepArgs sw;
  auto* s = app.add_subcommand("sweep", "Trajectories or measures over a parameter list");
  s->add_option("--channel", sw.channel, "pd, ad or driven")->required();
  s->add_option("--quantity", sw.quantity, "measure or trajectory")->capture_default_str();
  s->add_option("--measure", sw.measure, "trace or entanglement")->capture_default_str();
  s->add_option("--values", sw.values, "Comma-separated parameter values");
  s->add_option("--grid", sw.grid, "Parameter grid start:step:count");
  s->add_option("--omegas", sw.omegas, "Comma-separated drive strengths");
  s->add_option("--tmax", sw.tmax, "Trajectory horizon")->capture_default_str();
  s->add_option("--steps", sw.steps, "Trajectory steps")->capture_default_str();
  s->add_option("--threads", sw.threads, "Worker cap (0 = all cores)");
  s->add_option("--out", sw.out, "Output CSV")->required();
  s->add_option("--config", config_help);

  PredictArgs pr;
  auto* p = app.add_subcommand("predict", "Predict with a saved model");
  p->add_option("--model", pr.model, "Model file")->required();
  p->add_option("--features", pr.features, "Comma-separated raw features");
  p->add_option("--data", pr.data, "Dataset CSV");
  p->add_option("--out", pr.out, "Output file (default stdout)");
  p->add_option("--config", config_help);

  ReproduceArgs rp;
  auto* r = app.add_subcommand("reproduce", "Run the figure pipelines end to end");
  r->add_option("--out-dir", rp.out_dir, "Fresh output directory")->required();
  r->add_option("--figures", rp.figures, "Comma-separated subset of 1..5")->capture_default_str();
  r->add_option("--seed", rp.seed, "Split seed")->capture_default_str();
  r->add_flag("--full", rp.full, "Full 290-point lambda grid for the drive-aware run");
  r->add_option("--config", config_help);

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    try {
      app.parse(args);
    } catch (const CLI::ParseError& err) {
      const int code = app.exit(err);
      return code == 0 ? kOk : kConfig;
    }
    if (g->parsed()) return cmd_generate(gen);
    if (t->parsed()) return cmd_train(tr);
    if (e->parsed()) return cmd_evaluate(ev);
    if (s->parsed()) return cmd_sweep(sw);
    if (p->parsed()) return cmd_predict(pr);
    if (r->parsed()) return cmd_reproduce(rp);
    return kUnexpected;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return exit_code(err.kind());
  } catch (const fs::filesystem_error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kIo;
  } catch (const std::exception& err) {
    std::cerr << "unexpected error: " << err.what() << "\n";
    return kUnexpected;
  }
}
