// Copyright 2026 The dbsketch Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Oracles here use Eigen's dense solvers,
// not the library's own decompositions.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dbsketch/bandit.h"
#include "dbsketch/dyadic.h"
#include "dbsketch/environment.h"
#include "dbsketch/harness.h"
#include "dbsketch/sketch.h"

namespace dbsketch {
namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool passed = false;
  std::string detail;
};

Matrix Gaussian(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> n;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

Vector Eigenvalues(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double SymNorm(const Matrix& a) { return Eigenvalues(a).cwiseAbs().maxCoeff(); }

double Cond(const Matrix& a) {
  const Vector ev = Eigenvalues(a);
  return ev.maxCoeff() / ev.minCoeff();
}

// Random stream of one of several shapes: isotropic, low rank plus noise,
// decaying spectrum, or rows of wildly different scales.
Matrix RandomStream(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d, int shape) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  switch (shape % 4) {
    case 0:
      return Gaussian(rng, n, d);
    case 1: {
      const Eigen::Index r = 1 + static_cast<Eigen::Index>(u(rng) * 5);
      return Gaussian(rng, n, r) * Gaussian(rng, r, d) + 0.01 * Gaussian(rng, n, d);
    }
    case 2: {
      Matrix x = Gaussian(rng, n, d);
      for (Eigen::Index j = 0; j < d; ++j) x.col(j) *= std::pow(0.8, j);
      return x;
    }
    default: {
      Matrix x = Gaussian(rng, n, d);
      for (Eigen::Index i = 0; i < n; ++i) x.row(i) *= std::pow(10.0, 4 * u(rng) - 2);
      return x;
    }
  }
}

Matrix UnitRows(std::mt19937_64& rng, Eigen::Index n, Eigen::Index d, int shape) {
  Matrix x;
  if (shape % 3 == 2) {
    // Orthonormal worst case: every row is a basis vector.
    std::uniform_int_distribution<Eigen::Index> pick(0, d - 1);
    x = Matrix::Zero(n, d);
    for (Eigen::Index i = 0; i < n; ++i) x(i, pick(rng)) = 1.0;
    return x;
  }
  x = RandomStream(rng, n, d, shape);
  x.rowwise().normalize();
  return x;
}

// Criterion 1: FD covariance sandwich and the best-rank-k bound.
Outcome FdBoundSuite() {
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<int> dn(1, 200), dd(1, 30), dl(2, 10);
  int failures = 0;
  double worst = 0.0;
  for (int s = 0; s < 500; ++s) {
    const int n = dn(rng), d = dd(rng), l = dl(rng);
    const Matrix x = RandomStream(rng, n, d, s);
    SketchState sk(SketchOptions{SketchKind::kFD, static_cast<std::size_t>(l),
                                 static_cast<std::size_t>(d), 1.0, AlphaRule::kFull});
    Matrix gram = Matrix::Zero(d, d);
    bool ok = true;
    for (int t = 0; t < n; ++t) {
      sk.Update(x.row(t).transpose());
      gram.noalias() += x.row(t).transpose() * x.row(t);
      const double fro = x.topRows(t + 1).squaredNorm();
      const Vector ev = Eigenvalues(gram - sk.ApproxGram());
      if (ev.minCoeff() < -1e-8 * fro) ok = false;
      const Vector sv = Eigen::JacobiSVD<Matrix>(x.topRows(t + 1)).singularValues();
      double bound = std::numeric_limits<double>::infinity();
      for (int k = 0; k < l; ++k) {
        double tail = 0.0;
        for (Eigen::Index i = k; i < sv.size(); ++i) tail += sv(i) * sv(i);
        bound = std::min(bound, tail / (l - k));
      }
      const double err = ev.cwiseAbs().maxCoeff();
      worst = std::max(worst, (err - bound) / std::max(fro, 1e-300));
      if (err > bound + 1e-8 * fro) ok = false;
    }
    if (!ok) ++failures;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf), "500 streams, %d failing, worst (err-bound)/||X||_F^2 = %.3g",
                failures, worst);
  return {failures == 0, buf};
}

// Criterion 2: global error of the dyadic structure on unit-norm rows.
Outcome DyadicGlobalBound() {
  std::mt19937_64 rng(2002);
  std::uniform_int_distribution<int> dn(50, 2000), dd(10, 100);
  std::uniform_int_distribution<int> dl0(0, 3);
  std::uniform_real_distribution<double> de(1.0, 20.0);
  int failures = 0;
  double worst = 0.0;
  for (int s = 0; s < 200; ++s) {
    const int n = dn(rng), d = dd(rng);
    DyadicOptions o;
    o.dim = static_cast<std::size_t>(d);
    o.l0 = std::size_t{1} << dl0(rng);
    o.epsilon = de(rng);
    o.kind = (s % 2 == 0) ? SketchKind::kFD : SketchKind::kRFD;
    o.path = (s % 4 < 2) ? UpdatePath::kStandard : UpdatePath::kFast;
    DyadicSketch dy(o);
    const Matrix x = UnitRows(rng, n, d, s);
    Matrix gram = Matrix::Zero(d, d);
    bool ok = true;
    for (int t = 0; t < n; ++t) {
      dy.Update(x.row(t).transpose());
      gram.noalias() += x.row(t).transpose() * x.row(t);
      const double limit = 2.0 * o.epsilon + 1e-6 * (t + 1);
      const Matrix e = gram - dy.ApproxGram();
      // Frobenius dominates the spectral norm; only solve when it is not enough.
      if (e.norm() <= limit) continue;
      const double err = SymNorm(e);
      worst = std::max(worst, err / (2.0 * o.epsilon));
      if (err > limit) ok = false;
    }
    if (!ok) ++failures;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf), "200 streams, %d failing, worst err/(2 eps) = %.3f",
                failures, worst);
  return {failures == 0, buf};
}

// Criterion 3: sketched inverse application against dense inverses.
Outcome WoodburyEquivalence() {
  std::mt19937_64 rng(3003);
  std::uniform_int_distribution<int> dd(2, 30), dl(1, 8), dn(1, 80);
  std::uniform_real_distribution<double> dlam(0.05, 5.0);
  int failures = 0;
  double worst = 0.0;
  for (int s = 0; s < 1000; ++s) {
    const int d = dd(rng), l = dl(rng), n = dn(rng);
    const double lambda = dlam(rng);
    const Matrix x = RandomStream(rng, n, d, s);
    Matrix a;
    std::function<Vector(const Vector&)> apply;
    std::function<double(const Vector&)> quad;
    SketchState sk(SketchOptions{(s % 2) ? SketchKind::kRFD : SketchKind::kFD,
                                 static_cast<std::size_t>(l), static_cast<std::size_t>(d),
                                 lambda, AlphaRule::kFull},
                   s % 6 == 1);
    std::optional<DyadicSketch> dy;
    if (s % 3 == 2) {
      DyadicOptions o;
      o.dim = static_cast<std::size_t>(d);
      o.l0 = static_cast<std::size_t>(l);
      o.epsilon = 0.5 + 0.1 * (s % 20);
      o.lambda = lambda;
      o.kind = (s % 2) ? SketchKind::kRFD : SketchKind::kFD;
      o.path = (s % 4 < 2) ? UpdatePath::kStandard : UpdatePath::kFast;
      dy.emplace(o);
      for (int t = 0; t < n; ++t) dy->Update(x.row(t).transpose());
      a = dy->ApproxGram();
      apply = [&](const Vector& v) { return dy->ApplyInverse(v); };
      quad = [&](const Vector& v) { return dy->InverseQuadratic(v); };
    } else {
      for (int t = 0; t < n; ++t) {
        if (sk.buffered()) sk.Append(x.row(t).transpose());
        else sk.Update(x.row(t).transpose());
      }
      a = sk.ApproxGram();
      apply = [&](const Vector& v) { return sk.ApplyInverse(v); };
      quad = [&](const Vector& v) { return sk.InverseQuadratic(v); };
    }
    a.diagonal().array() += lambda;
    const Matrix ainv = a.ldlt().solve(Matrix::Identity(d, d));
    const Vector v = Gaussian(rng, d, 1);
    const Vector want = ainv * v;
    const double q = v.dot(want);
    const double e1 = (apply(v) - want).norm() / want.norm();
    const double e2 = std::abs(quad(v) - q) / std::abs(q);
    worst = std::max({worst, e1, e2});
    if (e1 > 1e-8 || e2 > 1e-8) ++failures;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf), "1000 instances, %d failing, worst relative error %.3g",
                failures, worst);
  return {failures == 0, buf};
}

// Criterion 4: fast path against the standard path run with half the
// threshold, compared whenever the fast path has just decomposed.
Outcome FastSlowAgreement() {
  std::mt19937_64 rng(4004);
  std::uniform_int_distribution<int> dn(50, 600), dd(8, 60);
  int failures = 0, lossy_failures = 0, boundaries = 0;
  double worst = 0.0;
  for (int s = 0; s < 100; ++s) {
    const int n = dn(rng), d = dd(rng);
    DyadicOptions o;
    o.dim = static_cast<std::size_t>(d);
    o.l0 = std::size_t{1} << (s % 4);
    o.epsilon = 2.0 + (s % 7);
    o.kind = (s % 2 == 0) ? SketchKind::kFD : SketchKind::kRFD;
    DyadicOptions fo = o, so = o;
    fo.path = UpdatePath::kFast;
    so.path = UpdatePath::kStandard;
    so.epsilon = o.epsilon / 2.0;
    DyadicSketch fast(fo), slow(so);
    const Matrix x = UnitRows(rng, n, d, s);
    double fro = 0.0;
    bool ok = true;
    for (int t = 0; t < n; ++t) {
      fast.Update(x.row(t).transpose());
      slow.Update(x.row(t).transpose());
      fro += x.row(t).squaredNorm();
      const bool at_boundary =
          fast.fallback_engaged() ||
          (fast.active_block().sketch.rows_orthogonal() &&
           fast.active_block().sketch.used_rows() > 0);
      if (!at_boundary) continue;
      ++boundaries;
      const double diff = SymNorm(fast.ApproxGram() - slow.ApproxGram());
      worst = std::max(worst, diff / fro);
      if (diff > 1e-6 * fro) ok = false;
    }
    if (!ok) {
      ++failures;
      bool lossy = false;
      for (const auto& b : slow.blocks()) lossy = lossy || b.sketch.shrink_total() > 0;
      if (lossy) ++lossy_failures;
    }
  }
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "100 streams, %d boundaries, %d failing (%d with lossy shrinks), "
                "worst diff/||X||_F^2 = %.3g",
                boundaries, failures, lossy_failures, worst);
  return {failures == 0, buf};
}

// Criterion 5: RFD monotonicity and conditioning.
Outcome RfdProperties() {
  std::mt19937_64 rng(5005);
  std::uniform_int_distribution<int> dn(5, 150), dd(2, 25), dl(1, 8);
  std::uniform_real_distribution<double> dlam(0.01, 10.0);
  int failures = 0;
  for (int s = 0; s < 200; ++s) {
    const int n = dn(rng), d = dd(rng), l = dl(rng);
    const double lambda = dlam(rng);
    const Matrix x = RandomStream(rng, n, d, s);
    SketchState sk(SketchOptions{SketchKind::kRFD, static_cast<std::size_t>(l),
                                 static_cast<std::size_t>(d), lambda, AlphaRule::kFull});
    Matrix prev = sk.ApproxGram();
    bool ok = true;
    for (int t = 0; t < n; ++t) {
      sk.Update(x.row(t).transpose());
      const Matrix cur = sk.ApproxGram();
      if (Eigenvalues(cur - prev).minCoeff() < -1e-8 * x.topRows(t + 1).squaredNorm()) {
        ok = false;
      }
      prev = cur;
    }
    const Matrix id = Matrix::Identity(d, d);
    const Matrix sts = sk.rows().transpose() * sk.rows();
    const double c = Cond(sk.ApproxGram() + lambda * id);
    if (c > Cond(sts + lambda * id) * (1 + 1e-6)) ok = false;
    if (c > Cond(x.transpose() * x + lambda * id) * (1 + 1e-6)) ok = false;
    if (!ok) ++failures;
  }
  return {failures == 0, "200 streams, " + std::to_string(failures) + " failing"};
}

// Criterion 6: DBSLinUCB reproduces OFUL when the sketch is exact.
Outcome ExactRegime() {
  int mismatched_runs = 0;
  double worst_theta = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    GaussianOptions g;
    g.dim = 40;
    g.arms = 10;
    g.rank = 1 + seed % 6;
    g.seed = seed;
    GaussianEnvironment env(g);
    PolicyOptions po;
    po.dim = 40;
    po.kind = PolicyKind::kOFUL;
    Policy oful(po);
    po.kind = (seed % 2) ? PolicyKind::kDBSLinUCBRFD : PolicyKind::kDBSLinUCBFD;
    po.l0 = 8;
    Policy dbs(po);
    double regret_o = 0.0, regret_d = 0.0;
    bool same = true;
    for (std::size_t t = 0; t < 500; ++t) {
      const Round r = env.RoundAt(t);
      const std::size_t io = oful.Select(r.arms).index;
      const std::size_t id = dbs.Select(r.arms).index;
      if (io != id) same = false;
      const double best = r.expected.maxCoeff();
      regret_o += best - r.expected(static_cast<Eigen::Index>(io));
      regret_d += best - r.expected(static_cast<Eigen::Index>(id));
      oful.Update(r.arms.row(static_cast<Eigen::Index>(io)).transpose(),
                  r.realized(static_cast<Eigen::Index>(io)));
      dbs.Update(r.arms.row(static_cast<Eigen::Index>(id)).transpose(),
                 r.realized(static_cast<Eigen::Index>(id)));
      const double dt = (oful.theta_hat() - dbs.theta_hat()).cwiseAbs().maxCoeff();
      worst_theta = std::max(worst_theta, dt);
      if (dt > 1e-6) same = false;
    }
    if (regret_o != regret_d) same = false;
    if (!same) ++mismatched_runs;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf), "20 runs, %d mismatched, max |theta diff| = %.3g",
                mismatched_runs, worst_theta);
  return {mismatched_runs == 0, buf};
}

double At(const MetricsTable& t, const std::string& col, std::size_t round) {
  return t.rows.at(round - 1).at(t.ColumnIndex(col));
}

// Criterion 7: single sketch against dyadic sketch on the orthonormal stream.
Outcome Pitfall() {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::kWorstCase;
  cfg.d = 100;
  cfg.r = 100;
  cfg.T = 4000;
  cfg.repetitions = 10;
  cfg.seed = 7;
  PolicySpec soful;
  soful.kind = PolicyKind::kSOFUL;
  soful.sketch_size = 30;
  PolicySpec dbs;
  dbs.kind = PolicyKind::kDBSLinUCBFD;
  dbs.l0 = 16;
  dbs.epsilon = 2000.0;
  cfg.policies = std::vector<PolicySpec>{soful, dbs};
  const MetricsTable t = RunBanditExperiment(cfg);
  const double s_end = At(t, "SOFUL_regret", 4000), s_mid = At(t, "SOFUL_regret", 2000);
  const double d_end = At(t, "DBSLinUCB-FD_regret", 4000);
  const double d_mid = At(t, "DBSLinUCB-FD_regret", 2000);
  const double rs = s_end / s_mid, rd = d_end / d_mid;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "SOFUL ratio %.3f (need >= 1.9), DBS ratio %.3f (need <= 1.8), "
                "final regret SOFUL %.2f vs DBS %.2f",
                rs, rd, s_end, d_end);
  return {rs >= 1.9 && rd <= 1.8 && d_end < s_end, buf};
}

// Criterion 8: approximation curves at the published scale.
Outcome ApproxReproduction() {
  ExperimentConfig cfg;
  cfg.experiment = ExperimentKind::kApprox;
  cfg.d = 100;
  cfg.T = 1250;
  cfg.sketch_size = 50;
  cfg.l0 = 16;
  cfg.epsilon = 2000.0;
  cfg.seed = 8;
  const MetricsTable t = RunApproxExperiment(cfg);
  const auto dbs = t.Column("dbs_err");
  const auto fd = t.Column("fd_err");
  const double peak = *std::max_element(dbs.begin(), dbs.end());
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "max DBS error %.1f (limit 4000), final FD %.1f vs DBS %.1f", peak,
                fd.back(), dbs.back());
  return {peak <= 4000.0 && fd.back() > dbs.back(), buf};
}

// Criterion 9: per-round time as d doubles on a rank-20 stream.
Outcome Efficiency() {
  auto per_round = [](PolicyKind kind, std::size_t d) {
    ExperimentConfig cfg;
    cfg.experiment = ExperimentKind::kSynthetic;
    cfg.d = d;
    cfg.rank = 20;
    cfg.K = 10;
    cfg.T = 600;
    cfg.repetitions = 5;
    cfg.seed = 9;
    PolicySpec spec;
    spec.kind = kind;
    spec.l0 = 16;
    spec.epsilon = 2000.0;
    cfg.policies = std::vector<PolicySpec>{spec};
    const MetricsTable t = RunBanditExperiment(cfg);
    return At(t, ToString(kind) + "_time_ms", cfg.T) / static_cast<double>(cfg.T);
  };
  const double d200 = per_round(PolicyKind::kDBSLinUCBFD, 200);
  const double d400 = per_round(PolicyKind::kDBSLinUCBFD, 400);
  const double o200 = per_round(PolicyKind::kOFUL, 200);
  const double o400 = per_round(PolicyKind::kOFUL, 400);
  const double rd = d400 / d200, ro = o400 / o200;
  char buf[220];
  std::snprintf(buf, sizeof(buf),
                "DBS %.4f -> %.4f ms/round (x%.2f, need <= 2.6), OFUL %.4f -> %.4f "
                "ms/round (x%.2f, need >= 3.2)",
                d200, d400, rd, o200, o400, ro);
  return {rd <= 2.6 && ro >= 3.2, buf};
}

std::vector<std::string> Split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

// Criterion 10: confidence radii against the high-precision table.
Outcome BetaCrossCheck() {
  std::ifstream in(std::string(DBSKETCH_TEST_DATA_DIR) + "/beta_grid.csv");
  if (!in) return {false, "cannot read beta_grid.csv"};
  std::string line;
  std::getline(in, line);
  int rows = 0, failures = 0;
  double worst = 0.0;
  while (std::getline(in, line)) {
    const auto f = Split(line, ',');
    BetaInputs bi;
    bi.dim = std::stoul(f[0]);
    bi.t = std::stoul(f[1]);
    bi.lambda = std::stod(f[2]);
    bi.delta = std::stod(f[3]);
    bi.bounds.context_norm = std::stod(f[4]);
    bi.bounds.weight_norm = std::stod(f[5]);
    bi.bounds.noise = std::stod(f[6]);
    const std::size_t l = std::stoul(f[7]);
    std::vector<double> sums;
    for (const auto& s : Split(f[8], ';')) sums.push_back(std::stod(s));
    std::vector<std::size_t> lengths;
    for (const auto& s : Split(f[9], ';')) lengths.push_back(std::stoul(s));
    const double fd = std::stod(f[10]), rfd = std::stod(f[11]);
    const double e1 = std::abs(BetaFd(bi, sums, l) - fd) / std::max(1.0, std::abs(fd));
    const double e2 =
        std::abs(BetaRfd(bi, sums, lengths, l) - rfd) / std::max(1.0, std::abs(rfd));
    worst = std::max({worst, e1, e2});
    if (e1 > 1e-10 || e2 > 1e-10) ++failures;
    ++rows;
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%d grid points, %d failing, worst relative error %.3g",
                rows, failures, worst);
  return {rows >= 100 && failures == 0, buf};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  Outcome (*run)();
};

}  // namespace
}  // namespace dbsketch

int main() {
  using namespace dbsketch;
  const Criterion criteria[] = {
      {1, "FD bound suite", 30, FdBoundSuite},
      {2, "dyadic global error bound", 120, DyadicGlobalBound},
      {3, "Woodbury equivalence", 10, WoodburyEquivalence},
      {4, "fast/standard dyadic agreement", 60, FastSlowAgreement},
      {5, "RFD monotonicity and conditioning", 60, RfdProperties},
      {6, "exact-regime equivalence with OFUL", 60, ExactRegime},
      {7, "single-sketch pitfall", 300, Pitfall},
      {8, "approximation curves", 60, ApproxReproduction},
      {9, "per-round cost scaling", 180, Efficiency},
      {10, "confidence radius cross-check", 5, BetaCrossCheck},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = Clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = out.passed && in_time;
    if (!pass) ++failed;
    std::printf("criterion %2d %-38s %s  %s; %.1fs (budget %.0fs)%s\n", c.id, c.name,
                pass ? "PASS" : "FAIL", out.detail.c_str(), secs, c.budget_s,
                in_time ? "" : " over budget");
    std::fflush(stdout);
  }
  std::printf("%d of 10 criteria passed\n", 10 - failed);
  return failed == 0 ? 0 : 1;
}
