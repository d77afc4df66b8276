#include "nmsvr/svr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "nmsvr/error.hpp"

namespace nmsvr {

void SvrConfig::validate() const {
  if (!(C > 0.0) || !std::isfinite(C)) throw ConfigError("C must be positive");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be >= 0");
  if (!(tol > 0.0) || !std::isfinite(tol)) throw ConfigError("tol must be positive");
  if (gamma && (!(*gamma > 0.0) || !std::isfinite(*gamma))) throw ConfigError("gamma must be positive");
  if (max_iter == 0) throw ConfigError("max_iter must be positive");
}

double rbf(std::span<const double> x, std::span<const double> y, double gamma) {
  if (x.size() != y.size()) throw DimensionError("rbf: feature length mismatch");
  double d2 = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - y[k];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

double scale_gamma(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw ConfigError("scale_gamma: no rows");
  const std::size_t d = rows.front().size();
  // variance of all n*d entries pooled, not the per-column average
  const double count = static_cast<double>(rows.size() * d);
  double mean = 0.0;
  for (const auto& r : rows)
    for (double v : r) mean += v;
  mean /= count;
  double var = 0.0;
  for (const auto& r : rows)
    for (double v : r) var += (v - mean) * (v - mean);
  var /= count;
  return var > 0.0 ? 1.0 / (static_cast<double>(d) * var) : 1.0;
}

std::vector<double> gram_matrix(const std::vector<std::vector<double>>& rows, double gamma) {
  const std::size_t n = rows.size();
  std::vector<double> k(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    k[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) k[i * n + j] = k[j * n + i] = rbf(rows[i], rows[j], gamma);
  }
  return k;
}

// ---------------------------------------------------------------------------
// Dual solver
//
// Variables a_t, t = 0..2l-1: a_i = alpha_i with y_t = +1 and a_{i+l} = alpha*_i
// with y_t = -1. Minimizes 1/2 a'Qa + p'a with Q_ts = y_t y_s K, p_i = eps - y_i,
// p_{i+l} = eps + y_i, subject to y'a = 0, 0 <= a <= C. The gradient is kept as
// s = K beta, G_t = y_t s_{t mod l} + p_t.

DualSolution solve_dual(const DualProblem& pb, const DualObserver& observe) {
  const std::size_t l = pb.y.size();
  if (l == 0) throw ConfigError("solve_dual: empty problem");
  if (pb.gram.size() != l * l) throw DimensionError("solve_dual: Gram matrix size mismatch");
  if (!pb.keys.empty() && pb.keys.size() != l) throw DimensionError("solve_dual: key count mismatch");
  const double C = pb.C;
  const double eps = pb.epsilon;
  const std::size_t n2 = 2 * l;
  constexpr double kTau = 1e-12;

  std::vector<double> a(n2, 0.0), s(l, 0.0);
  auto row = [&](std::size_t t) { return t < l ? t : t - l; };
  auto sign = [&](std::size_t t) { return t < l ? 1.0 : -1.0; };
  auto p = [&](std::size_t t) { return t < l ? eps - pb.y[t] : eps + pb.y[t - l]; };
  auto grad = [&](std::size_t t) { return sign(t) * s[row(t)] + p(t); };
  auto key = [&](std::size_t t) -> std::size_t {
    const std::size_t base = pb.keys.empty() ? row(t) : pb.keys[row(t)];
    return 2 * base + (t < l ? 0 : 1);
  };
  auto in_up = [&](std::size_t t) { return t < l ? a[t] < C : a[t] > 0.0; };
  auto in_low = [&](std::size_t t) { return t < l ? a[t] > 0.0 : a[t] < C; };
  auto objective = [&] {
    double f = 0.0;
    for (std::size_t t = 0; t < n2; ++t) f += a[t] * (grad(t) + p(t));
    return -0.5 * f;
  };

  DualSolution sol;
  for (;;) {
    std::size_t i = n2, j = n2;
    double m = -std::numeric_limits<double>::infinity();
    double M = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n2; ++t) {
      const double v = -sign(t) * grad(t);
      if (in_up(t) && (v > m || (v == m && key(t) < key(i)))) {
        m = v;
        i = t;
      }
      if (in_low(t) && (v < M || (v == M && key(t) < key(j)))) {
        M = v;
        j = t;
      }
    }
    sol.max_violation = (i == n2 || j == n2) ? 0.0 : m - M;
    if (i == n2 || j == n2 || m - M < pb.tol) {
      sol.converged = true;
      break;
    }
    if (sol.iterations >= pb.max_iter) break;

    const std::size_t ri = row(i), rj = row(j);
    const double kij = pb.gram[ri * l + rj];
    const double quad0 = pb.gram[ri * l + ri] + pb.gram[rj * l + rj] - 2.0 * kij;
    const double quad = quad0 > 0.0 ? quad0 : kTau;
    const double ai_old = a[i], aj_old = a[j];
    const double gi = grad(i), gj = grad(j);
    if (sign(i) != sign(j)) {
      const double delta = (-gi - gj) / quad;
      const double diff = a[i] - a[j];
      a[i] += delta;
      a[j] += delta;
      if (diff > 0) {
        if (a[j] < 0) { a[j] = 0; a[i] = diff; }
      } else {
        if (a[i] < 0) { a[i] = 0; a[j] = -diff; }
      }
      if (diff > 0) {
        if (a[i] > C) { a[i] = C; a[j] = C - diff; }
      } else {
        if (a[j] > C) { a[j] = C; a[i] = C + diff; }
      }
    } else {
      const double delta = (gi - gj) / quad;
      const double sum = a[i] + a[j];
      a[i] -= delta;
      a[j] += delta;
      if (sum > C) {
        if (a[i] > C) { a[i] = C; a[j] = sum - C; }
      } else {
        if (a[j] < 0) { a[j] = 0; a[i] = sum; }
      }
      if (sum > C) {
        if (a[j] > C) { a[j] = C; a[i] = sum - C; }
      } else {
        if (a[i] < 0) { a[i] = 0; a[j] = sum; }
      }
    }
    const double dbi = sign(i) * (a[i] - ai_old);
    const double dbj = sign(j) * (a[j] - aj_old);
    const double* ki = &pb.gram[ri * l];
    const double* kj = &pb.gram[rj * l];
    for (std::size_t r = 0; r < l; ++r) s[r] += ki[r] * dbi + kj[r] * dbj;
    ++sol.iterations;
    if (observe) observe(sol.iterations, objective());
  }

  // Intercept: average over free variables, else midpoint of the bound interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n2; ++t) {
    const double yg = sign(t) * grad(t);
    if (a[t] >= C) {
      if (sign(t) < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (a[t] <= 0.0) {
      if (sign(t) > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double r = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
  sol.intercept = -r;
  sol.beta.resize(l);
  for (std::size_t k = 0; k < l; ++k) sol.beta[k] = a[k] - a[k + l];
  return sol;
}

double dual_objective(std::span<const double> gram, std::span<const double> y,
                      std::span<const double> beta, double epsilon) {
  const std::size_t n = y.size();
  if (beta.size() != n || gram.size() != n * n) throw DimensionError("dual_objective: size mismatch");
  double quad = 0.0, lin = 0.0, l1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double ki = 0.0;
    for (std::size_t j = 0; j < n; ++j) ki += gram[i * n + j] * beta[j];
    quad += beta[i] * ki;
    lin += y[i] * beta[i];
    l1 += std::abs(beta[i]);
  }
  return -0.5 * quad - epsilon * l1 + lin;
}

// ---------------------------------------------------------------------------
// Model

double SvrModel::predict_scaled(std::span<const double> x) const {
  if (x.size() != n_features()) {
    throw DimensionError("model expects " + std::to_string(n_features()) + " features, got " +
                         std::to_string(x.size()));
  }
  double f = intercept;
  for (std::size_t k = 0; k < support_vectors.size(); ++k) f += dual_coefs[k] * rbf(support_vectors[k], x, gamma);
  return f;
}

double SvrModel::predict(std::span<const double> raw) const { return predict_scaled(scaler.transform(raw)); }

std::vector<double> SvrModel::predict(const DataTable& table) const {
  if (table.schema().n_features() != n_features()) {
    throw SchemaError("dataset has " + std::to_string(table.schema().n_features()) +
                      " features, model expects " + std::to_string(n_features()));
  }
  std::vector<double> out;
  out.reserve(table.size());
  for (const auto& s : table.samples()) out.push_back(predict(s.features));
  return out;
}

namespace {

// Rank of each row under lexicographic (features, target) order.
std::vector<std::size_t> content_keys(const std::vector<std::vector<double>>& x, std::span<const double> y) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](std::size_t a, std::size_t b) {
    if (x[a] != x[b]) return std::lexicographical_compare(x[a].begin(), x[a].end(), x[b].begin(), x[b].end());
    return y[a] < y[b];
  };
  std::sort(order.begin(), order.end(), less);
  std::vector<std::size_t> keys(x.size());
  std::size_t rank = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k > 0 && less(order[k - 1], order[k])) rank = k;
    keys[order[k]] = rank;
  }
  return keys;
}

}  // namespace

SvrModel fit(const std::vector<std::vector<double>>& x, std::span<const double> y, const SvrConfig& config,
             Scaling scaling, const DualObserver& observe) {
  config.validate();
  if (x.size() != y.size()) throw DimensionError("fit: feature and target counts differ");
  if (x.size() < 2) throw ConfigError("fit: at least two training rows are required");
  for (double v : y) {
    if (!std::isfinite(v)) throw ConfigError("fit: non-finite target");
  }
  SvrModel model;
  model.C = config.C;
  model.epsilon = config.epsilon;
  model.scaler = scaling == Scaling::Standardize ? scaler_fit(x, ZeroVariancePolicy::UnitScale)
                                                 : Scaler::identity(x.front().size());
  std::vector<std::vector<double>> xs;
  xs.reserve(x.size());
  for (const auto& r : x) xs.push_back(model.scaler.transform(r));
  model.gamma = config.gamma.value_or(scale_gamma(xs));

  const auto gram = gram_matrix(xs, model.gamma);
  const auto keys = content_keys(xs, y);
  DualProblem pb{gram, y, config.C, config.epsilon, config.tol, config.max_iter, keys};
  DualSolution sol = solve_dual(pb, observe);

  model.intercept = sol.intercept;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (std::abs(sol.beta[i]) > 1e-12) {
      model.support_vectors.push_back(xs[i]);
      model.dual_coefs.push_back(sol.beta[i]);
    }
  }
  model.info.iterations = sol.iterations;
  model.info.converged = sol.converged;
  model.info.max_violation = sol.max_violation;
  model.info.dual_objective = dual_objective(gram, y, sol.beta, config.epsilon);
  model.info.train_beta = std::move(sol.beta);
  return model;
}

SvrModel fit(const DataTable& train, const SvrConfig& config, Scaling scaling, const DualObserver& observe) {
  const auto y = train.targets();
  return fit(train.features(), y, config, scaling, observe);
}

KktReport kkt_certificate(const SvrModel& model, const std::vector<std::vector<double>>& x,
                          std::span<const double> y, double tol) {
  const auto& beta = model.info.train_beta;
  if (beta.size() != x.size() || y.size() != x.size()) {
    throw DimensionError("kkt_certificate: model was not fitted on these rows");
  }
  const double eps = model.epsilon;
  const double C = model.C;
  KktReport rep;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = model.predict(x[i]) - y[i];
    const double b = beta[i];
    double v = 0.0;
    if (std::abs(b) <= 1e-12) {
      v = std::abs(r) - (eps + tol);
    } else if (b >= C) {
      v = r - (-eps + tol);  // need r <= -(eps - tol)
    } else if (b <= -C) {
      v = (eps - tol) - r;
    } else if (b > 0) {
      v = std::abs(r + eps) - tol;
    } else {
      v = std::abs(r - eps) - tol;
    }
    rep.worst = std::max(rep.worst, v + tol);
    if (v > 1e-9) ++rep.violations;
  }
  rep.ok = rep.violations == 0;
  return rep;
}

KktReport kkt_certificate(const SvrModel& model, const DataTable& train, double tol) {
  const auto y = train.targets();
  return kkt_certificate(model, train.features(), y, tol);
}

double mae(std::span<const double> predictions, std::span<const double> truths) {
  if (predictions.size() != truths.size()) throw DimensionError("mae: length mismatch");
  if (predictions.empty()) throw ConfigError("mae: no rows to evaluate");
  double acc = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) acc += std::abs(predictions[i] - truths[i]);
  return acc / static_cast<double>(truths.size());
}

double max_abs_error(std::span<const double> predictions, std::span<const double> truths) {
  if (predictions.size() != truths.size()) throw DimensionError("max_abs_error: length mismatch");
  if (predictions.empty()) throw ConfigError("max_abs_error: no rows to evaluate");
  double worst = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) worst = std::max(worst, std::abs(predictions[i] - truths[i]));
  return worst;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr const char* kModelMagic = "nmsvr-svr";
constexpr const char* kModelVersion = "1";

double parse_number(const std::string& s, const std::string& what) {
  std::istringstream is(s);
  is.imbue(std::locale::classic());
  double v = 0;
  if (!(is >> v) || !is.eof() || !std::isfinite(v)) throw ParseError("model: bad " + what + " '" + s + "'");
  return v;
}

std::string value_of(const std::string& token, const std::string& key) {
  if (token.rfind(key + "=", 0) != 0) throw ParseError("model: expected '" + key + "=' in header, got '" + token + "'");
  return token.substr(key.size() + 1);
}

}  // namespace

void write_model(std::ostream& os, const SvrModel& model) {
  os << kModelMagic << ' ' << kModelVersion << " gamma=" << format_double(model.gamma)
     << " C=" << format_double(model.C) << " epsilon=" << format_double(model.epsilon)
     << " d=" << model.n_features() << " n_sv=" << model.support_vectors.size() << '\n';
  write_scaler(os, model.scaler);
  os << "intercept " << format_double(model.intercept) << '\n';
  for (std::size_t k = 0; k < model.support_vectors.size(); ++k) {
    os << format_double(model.dual_coefs[k]);
    for (double f : model.support_vectors[k]) os << ' ' << format_double(f);
    os << '\n';
  }
}

SvrModel read_model(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("model: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::istringstream head(line);
  std::vector<std::string> tok;
  for (std::string t; head >> t;) tok.push_back(t);
  if (tok.empty() || tok[0] != kModelMagic) throw ParseError("model: not an nmsvr model file");
  if (tok.size() < 2 || tok[1] != kModelVersion) {
    throw VersionError("model: version '" + (tok.size() > 1 ? tok[1] : std::string()) + "' is not supported (expected " +
                       kModelVersion + ")");
  }
  if (tok.size() != 7) throw ParseError("model: malformed header");
  SvrModel m;
  m.gamma = parse_number(value_of(tok[2], "gamma"), "gamma");
  m.C = parse_number(value_of(tok[3], "C"), "C");
  m.epsilon = parse_number(value_of(tok[4], "epsilon"), "epsilon");
  const double d = parse_number(value_of(tok[5], "d"), "d");
  const double n_sv = parse_number(value_of(tok[6], "n_sv"), "n_sv");
  if (!(m.gamma > 0) || !(m.C > 0) || m.epsilon < 0 || d < 1 || n_sv < 0 || d != std::floor(d) ||
      n_sv != std::floor(n_sv)) {
    throw ParseError("model: header values out of range");
  }
  m.scaler = read_scaler(is);
  if (m.scaler.size() != static_cast<std::size_t>(d)) throw ParseError("model: scaler size does not match d");

  if (!std::getline(is, line)) throw ParseError("model: missing intercept line");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("intercept ", 0) != 0) throw ParseError("model: missing intercept line");
  m.intercept = parse_number(line.substr(10), "intercept");

  const auto n = static_cast<std::size_t>(n_sv);
  const auto dim = static_cast<std::size_t>(d);
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::getline(is, line)) {
      throw ParseError("model: truncated, " + std::to_string(k) + " of " + std::to_string(n) + " support vectors");
    }
    std::istringstream rs(line);
    std::vector<std::string> cells;
    for (std::string t; rs >> t;) cells.push_back(t);
    if (cells.size() != dim + 1) throw ParseError("model: support vector row " + std::to_string(k) + " is malformed");
    const double b = parse_number(cells[0], "coefficient");
    if (std::abs(b) > m.C * (1 + 1e-12)) throw ParseError("model: coefficient exceeds C");
    std::vector<double> sv(dim);
    for (std::size_t f = 0; f < dim; ++f) sv[f] = parse_number(cells[f + 1], "feature");
    sum += b;
    m.dual_coefs.push_back(b);
    m.support_vectors.push_back(std::move(sv));
  }
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) throw ParseError("model: trailing content");
  }
  if (std::abs(sum) > 1e-6 * std::max(1.0, m.C * static_cast<double>(n))) {
    throw ParseError("model: coefficients do not sum to zero");
  }
  return m;
}

void save_model(const SvrModel& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_model(os, model);
  os.flush();
  if (!os) throw IoError("write to '" + path + "' failed");
}

SvrModel load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  return read_model(is);
}

}  // namespace nmsvr
