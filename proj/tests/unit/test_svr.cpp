#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "nmsvr/error.hpp"
#include "nmsvr/svr.hpp"
#include "oracles.hpp"

using namespace nmsvr;

namespace {

struct Problem {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
};

Problem random_problem(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Problem p;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> r(d);
    for (auto& v : r) v = u(rng);
    p.y.push_back(std::sin(2.0 * r[0]) + 0.5 * r[d - 1] * r[d - 1] + 0.05 * u(rng));
    p.x.push_back(std::move(r));
  }
  return p;
}

}  // namespace

TEST_SUITE("svr") {

TEST_CASE("config validation") {
  SvrConfig c;
  CHECK_NOTHROW(c.validate());
  c.C = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.epsilon = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.gamma = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.tol = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("rbf kernel") {
  const std::vector<double> a{0.3, -1.0}, b{1.3, -1.0};
  CHECK(rbf(a, a, 0.7) == 1.0);
  CHECK(std::abs(rbf(a, b, 1.0) - std::exp(-1.0)) < 1e-15);
  CHECK(rbf(a, b, 2.0) == rbf(b, a, 2.0));
  const std::vector<double> c{1.0};
  CHECK_THROWS_AS(rbf(a, c, 1.0), DimensionError);
}

TEST_CASE("Gram matrix is symmetric and positive semidefinite") {
  const auto p = random_problem(5, 3, 1);
  const auto k = gram_matrix(p.x, 0.8);
  Eigen::MatrixXd m(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      m(i, j) = k[i * 5 + j];
      CHECK(k[i * 5 + j] == k[j * 5 + i]);
      CHECK(std::abs(k[i * 5 + j] - rbf(p.x[i], p.x[j], 0.8)) < 1e-15);
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  CHECK(es.eigenvalues().minCoeff() > -1e-10);
}

TEST_CASE("gamma scale heuristic") {
  const std::vector<std::vector<double>> rows{{1.0, 0.0}, {3.0, 2.0}};
  // entries 1, 0, 3, 2: mean 1.5, variance 1.25
  CHECK(std::abs(scale_gamma(rows) - 0.4) < 1e-15);
  // centred columns: sum of the column variances
  const std::vector<std::vector<double>> centred{{-1.0, 2.0}, {1.0, -2.0}};
  CHECK(std::abs(scale_gamma(centred) - 1.0 / 5.0) < 1e-15);
  const std::vector<std::vector<double>> flat{{1.0}, {1.0}};
  CHECK(scale_gamma(flat) == 1.0);
}

TEST_CASE("constant targets give a flat model") {
  const auto p = random_problem(20, 2, 2);
  const std::vector<double> y(20, 0.37);
  const auto m = fit(p.x, y);
  CHECK(m.support_vectors.empty());
  CHECK(std::abs(m.intercept - 0.37) < 1e-12);
  CHECK(std::abs(m.predict(p.x[3]) - 0.37) < 1e-12);
}

TEST_CASE("smooth targets fit inside the tube") {
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (int i = 0; i < 30; ++i) {
    const double t = i / 29.0;
    x.push_back({t});
    y.push_back(0.5 * std::sin(3.0 * t));
  }
  SvrConfig c;
  c.C = 100.0;
  c.epsilon = 0.01;
  const auto m = fit(x, y, c);
  CHECK(m.info.converged);
  for (int i = 0; i < 30; ++i) CHECK(std::abs(m.predict(x[i]) - y[i]) <= c.epsilon + c.tol);
  CHECK(kkt_certificate(m, x, y, c.tol).ok);
}

TEST_CASE("dual optimum matches a dense QP oracle") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    CAPTURE(seed);
    const auto p = random_problem(10, 3, 100 + seed);
    const double gamma = 0.5, C = 1.0, eps = 0.05;
    const auto k = gram_matrix(p.x, gamma);
    const auto ref = oracle::svr_dual_qp(k, p.y, C, eps);
    const double best = dual_objective(k, p.y, ref, eps);

    const auto sol = solve_dual(DualProblem{k, p.y, C, eps, 1e-6, 10'000'000, {}});
    CHECK(sol.converged);
    CHECK(std::abs(dual_objective(k, p.y, sol.beta, eps) - best) < 1e-6);
    CHECK(std::abs(std::accumulate(sol.beta.begin(), sol.beta.end(), 0.0)) < 1e-12);
    for (double b : sol.beta) CHECK(std::abs(b) <= C);

    // the default stopping rule leaves a small objective gap
    const auto loose = solve_dual(DualProblem{k, p.y, C, eps, 1e-3, 10'000'000, {}});
    const double gap = best - dual_objective(k, p.y, loose.beta, eps);
    CHECK(gap > -1e-9);
    CHECK(gap < 1e-4);
  }
}

TEST_CASE("dual objective never decreases") {
  const auto p = random_problem(60, 2, 7);
  std::vector<double> trace;
  SvrConfig c;
  c.C = 10.0;
  const auto m = fit(p.x, p.y, c, Scaling::Standardize, [&](std::size_t, double obj) { trace.push_back(obj); });
  REQUIRE(trace.size() == m.info.iterations);
  REQUIRE(!trace.empty());
  for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] >= trace[i - 1] - 1e-12);
  CHECK(std::abs(trace.back() - m.info.dual_objective) < 1e-9);
}

TEST_CASE("free support vectors sit on the tube edge") {
  const auto p = random_problem(40, 2, 8);
  SvrConfig c;
  c.C = 5.0;
  c.epsilon = 0.02;
  c.tol = 1e-6;
  const auto m = fit(p.x, p.y, c);
  std::size_t free_count = 0;
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    const double b = m.info.train_beta[i];
    if (std::abs(b) > 1e-9 && std::abs(b) < c.C - 1e-9) {
      ++free_count;
      const double r = m.predict(p.x[i]) - p.y[i];
      CHECK(std::abs(std::abs(r) - c.epsilon) < 1e-5);
      CHECK((r < 0) == (b > 0));
    }
  }
  CHECK(free_count > 0);
  CHECK(kkt_certificate(m, p.x, p.y, c.tol).ok);
}

TEST_CASE("row order does not change the model") {
  const auto p = random_problem(80, 3, 9);
  auto q = p;
  std::mt19937_64 rng(4);
  std::vector<std::size_t> perm(p.x.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    q.x[i] = p.x[perm[i]];
    q.y[i] = p.y[perm[i]];
  }
  const auto a = fit(p.x, p.y);
  const auto b = fit(q.x, q.y);
  const auto probe = random_problem(50, 3, 10);
  for (const auto& r : probe.x) CHECK(std::abs(a.predict(r) - b.predict(r)) < 1e-8);
}

TEST_CASE("iteration cap is reported") {
  const auto p = random_problem(60, 2, 11);
  SvrConfig c;
  c.C = 100.0;
  c.max_iter = 3;
  const auto m = fit(p.x, p.y, c);
  CHECK(!m.info.converged);
  CHECK(m.info.iterations == 3);
}

TEST_CASE("scaling off leaves features untouched") {
  const auto p = random_problem(30, 2, 12);
  const auto m = fit(p.x, p.y, {}, Scaling::None);
  CHECK(m.scaler == Scaler::identity(2));
}

TEST_CASE("fit input checks") {
  const std::vector<std::vector<double>> one{{1.0}};
  const std::vector<double> y1{1.0}, y2{1.0, 2.0};
  CHECK_THROWS_AS(fit(one, y1), ConfigError);
  CHECK_THROWS_AS(fit(one, y2), DimensionError);
  const auto p = random_problem(10, 2, 13);
  const auto m = fit(p.x, p.y);
  const std::vector<double> short_row{1.0};
  CHECK_THROWS_AS(m.predict(short_row), DimensionError);
}

TEST_CASE("error metrics") {
  const std::vector<double> p{1.0, 2.0, 4.0}, t{1.5, 2.0, 3.0};
  CHECK(std::abs(mae(p, t) - 0.5) < 1e-15);
  CHECK(max_abs_error(p, t) == 1.0);
  const std::vector<double> e;
  CHECK_THROWS_AS(mae(e, e), ConfigError);
  CHECK_THROWS_AS(mae(p, e), DimensionError);
}

TEST_CASE("model files") {
  const auto p = random_problem(50, 3, 14);
  const auto m = fit(p.x, p.y);
  std::ostringstream os;
  write_model(os, m);
  const std::string text = os.str();

  std::istringstream is(text);
  const auto back = read_model(is);
  CHECK(back.gamma == m.gamma);
  CHECK(back.intercept == m.intercept);
  CHECK(back.scaler == m.scaler);
  CHECK(back.support_vectors == m.support_vectors);
  const auto probe = random_problem(100, 3, 15);
  for (const auto& r : probe.x) CHECK(back.predict(r) == m.predict(r));

  SUBCASE("truncated") {
    const auto cut = text.rfind('\n', text.size() - 2);
    std::istringstream t(text.substr(0, cut + 1));
    CHECK_THROWS_AS(read_model(t), ParseError);
  }
  SUBCASE("version mismatch") {
    std::string v = text;
    v.replace(v.find("nmsvr-svr 1"), 11, "nmsvr-svr 7");
    std::istringstream t(v);
    CHECK_THROWS_AS(read_model(t), VersionError);
  }
  SUBCASE("not a model") {
    std::istringstream t("target,ox_t1\n");
    CHECK_THROWS_AS(read_model(t), ParseError);
  }
  SUBCASE("trailing content") {
    std::istringstream t(text + "0.5 1 2 3\n");
    CHECK_THROWS_AS(read_model(t), ParseError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_model("/nonexistent/model.svr"), IoError); }
}

TEST_CASE("pure AD model predicts an unseen channel") {
  GenerateOptions o;
  o.grid = ParamGrid{0.1, 0.01, 290};
  const auto table = generate_pure_ad(MeasureKind::Entanglement, {3.0}, o);
  const auto [train, test] = split(table, 0.7, 42);
  const auto m = fit(train);
  CHECK(m.info.converged);
  CHECK(kkt_certificate(m, train, 1e-3).ok);
  const std::vector<double> t3{3.0};
  const auto f = features_at(AmplitudeDamping{1.0, 1.0}, t3);
  const double want = n_entanglement(AmplitudeDamping{1.0, 1.0}).value;
  CHECK(std::abs(m.predict(f) - want) < 5e-3);

  // a free support vector is predicted on the tube edge
  for (std::size_t i = 0; i < train.size(); ++i) {
    const double b = m.info.train_beta[i];
    if (std::abs(b) > 1e-9 && std::abs(b) < m.C - 1e-9) {
      CHECK(std::abs(std::abs(m.predict(train[i].features) - train[i].target) - m.epsilon) <= 1e-3);
      break;
    }
  }
  std::vector<double> wrong(6, 0.0);
  CHECK_THROWS_AS(m.predict(wrong), DimensionError);
}

}  // TEST_SUITE
