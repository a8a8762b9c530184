// Acceptance checks, one line per criterion:  acceptance [N ...]
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "deflate/continuation.hpp"
#include "deflate/lu.hpp"
#include "deflate/newton.hpp"
#include "deflate/problems.hpp"
#include "deflate/search.hpp"
#include "support.hpp"

using namespace deflate;
namespace ts = testing_support;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

NewtonConfig damped() {
  NewtonConfig c;
  c.damping = Damping::ErrorOriented;
  return c;
}

std::pair<double, double> fold_bracket(const BifurcationDiagram& d) {
  double two = -INFINITY, zero = INFINITY;
  for (std::size_t k = 0; k < d.parameter_values.size(); ++k) {
    if (d.counts[k] >= 2) two = std::max(two, d.parameter_values[k]);
    if (d.counts[k] == 0) zero = std::min(zero, d.parameter_values[k]);
  }
  return {two, zero};
}

void sigmoid_roots(Outcome& o) {
  const auto t0 = Clock::now();
  const SigmoidProblem P;
  const auto res = deflation_search(P, Vector{-1.0}, {2.0, 1.0}, NewtonConfig{});
  const double t = seconds_since(t0);
  o.detail << "found " << res.solutions.size() << " root(s):";
  for (const auto& s : res.solutions) o.detail << ' ' << s.values[0];
  o.detail << "; stop=" << to_string(res.stop) << "; " << t << " s. ";
  o.require(res.solutions.size() == 2, "exactly 2 roots");
  if (!res.solutions.empty())
    o.require(std::abs(res.solutions[0].values[0] - SigmoidProblem::negative_root()) <= 1e-8, "first root");
  if (res.solutions.size() > 1) o.require(std::abs(res.solutions[1].values[0]) <= 1e-8, "second root at 0");
  o.require(t < 1.0, "runtime < 1 s");
}

void sigmoid_pathology(Outcome& o) {
  const SigmoidProblem P;
  const NewtonResult first = newton_solve(P, Vector{-1.0}, NewtonConfig{});
  DeflationOperator op(P.inner_product(), {2.0, 0.0});
  op.add_root(first.solution);
  NewtonConfig c;
  c.atol = 1e-13;
  const NewtonResult r = newton_solve(DeflatedSystem(P, op), Vector{-1.0}, c);
  const double x = r.solution[0];
  const double g = r.deflated_residual_history.back();
  const double f = r.residual_history.back();
  o.detail << "x=" << x << " |G|=" << g << " |f|=" << f << " spurious=" << r.spurious << " after "
           << r.iterations << " iterations. ";
  o.require(std::abs(x) > 1e6, "|x| > 1e6");
  o.require(g < 1e-8, "deflated residual < 1e-8");
  o.require(f > 1.0, "|f| > 1");
  o.require(r.spurious, "spurious flag");
}

void bratu(Outcome& o) {
  const auto t0 = Clock::now();
  const BratuProblem P(2.0, 999);
  const auto res = deflation_search(P, P.initial_guess(), {1.0, 0.0}, NewtonConfig{});
  o.detail << "lambda=2 (p=1, alpha=0): " << res.solutions.size() << " solution(s)";
  o.require(res.solutions.size() == 2, "2 solutions at lambda = 2");
  for (double s : ts::bratu_shooting_slopes(2.0)) {
    const Vector oracle = ts::bratu_shoot(2.0, s, 1e-4, 10).samples;
    double best = INFINITY;
    for (const auto& sol : res.solutions) best = std::min(best, norm_inf(subtract(sol.values, oracle)));
    o.detail << "; oracle u'(0)=" << s << " max error " << best;
    o.require(best <= 1e-4, "oracle match");
  }
  ContinuationConfig c;
  c.start = 0.25;
  c.stop = 3.6;
  c.step = 0.05;
  const auto d = deflated_continuation(P, c);
  const auto [two, zero] = fold_bracket(d);
  o.detail << "; sweep: last lambda with 2 solutions " << two << ", first with none " << zero;
  o.require(two >= 3.45 - 1e-12 && zero <= 3.6 + 1e-12 && two < 3.51383 && zero > 3.51383, "fold bracket");
  const double t = seconds_since(t0);
  o.detail << "; " << t << " s. ";
  o.require(t < 30.0, "runtime < 30 s");
}

void painleve(Outcome& o) {
  const auto t0 = Clock::now();
  const PainleveProblem P;
  const Vector u0 = P.initial_guess();
  const NewtonResult plus = newton_solve(P, u0, damped());
  o.detail << "u+: converged=" << plus.converged << " slope " << P.functional("slope0", plus.solution);
  o.require(plus.converged && P.functional("slope0", plus.solution) > 0.0, "u+ with positive slope");

  DeflationOperator op2(P.inner_product(), {2.0, 0.0});
  op2.add_root(plus.solution);
  const NewtonResult minus = newton_solve(DeflatedSystem(P, op2), u0, damped());
  o.detail << "; u-: converged=" << minus.converged << " in " << minus.iterations << " damped steps, slope "
           << P.functional("slope0", minus.solution);
  o.require(minus.converged && P.functional("slope0", minus.solution) < 0.0 && minus.iterations <= 30,
            "u- with negative slope in <= 30 steps");

  const NewtonResult undamped = newton_solve(DeflatedSystem(P, op2), u0, NewtonConfig{});
  o.detail << "; undamped: " << undamped.diagnostic;
  o.require(!undamped.converged, "undamped deflated solve fails");

  DeflationOperator op1(P.inner_product(), {1.0, 0.0});
  op1.add_root(plus.solution);
  const NewtonResult p1 = newton_solve(DeflatedSystem(P, op1), u0, damped());
  o.detail << "; p=1: " << p1.diagnostic;
  o.require(!p1.converged, "p = 1 damped solve fails");
  const double t = seconds_since(t0);
  o.detail << "; " << t << " s. ";
  o.require(t < 30.0, "runtime < 30 s");
}

void hao(Outcome& o) {
  const auto t0 = Clock::now();
  const HaoProblem P12(1.2);
  const auto a = deflation_search(P12, P12.initial_guess(), {1.0, 1.0}, NewtonConfig{});
  const HaoProblem P135(1.35);
  const auto b = deflation_search(P135, P135.initial_guess(), {1.0, 1.0}, NewtonConfig{});
  o.detail << "lambda=1.2: " << a.solutions.size() << ", lambda=1.35: " << b.solutions.size();
  o.require(a.solutions.size() == 2, "2 solutions at 1.2");
  o.require(b.solutions.empty(), "0 solutions at 1.35");
  ContinuationConfig c;
  c.start = 0.1;
  c.stop = 1.4;
  c.step = 0.05;
  const auto d = deflated_continuation(P12, c);
  const auto [two, zero] = fold_bracket(d);
  o.detail << "; sweep bracket [" << two << ", " << zero << "]";
  o.require(two >= 1.25 - 1e-12 && zero <= 1.35 + 1e-12 && two < 1.30107 && zero > 1.30107, "fold bracket");
  const double t = seconds_since(t0);
  o.detail << "; " << t << " s. ";
  o.require(t < 10.0, "runtime < 10 s");
}

/// "positive", "negative" or "cross" from the interior sign census; a cross
/// must also be antisymmetric under transposition.
std::string sign_class(const Vector& u, std::size_t n) {
  const auto [pos, neg] = ts::sign_census(u);
  if (pos > 0.75) return "positive";
  if (neg > 0.75) return "negative";
  double asym = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) asym = std::max(asym, std::abs(u[i + n * j] + u[j + n * i]));
  const std::size_t mid = n / 2;
  const bool pattern = u[0 + n * mid] > 0 && u[n - 1 + n * mid] > 0 && u[mid] < 0 && u[mid + n * (n - 1)] < 0;
  return asym <= 1e-6 * norm_inf(u) && pattern ? "cross" : "mixed";
}

void allen_cahn_counts(Outcome& o) {
  const auto t0 = Clock::now();
  const AllenCahnProblem P(0.04, 99);
  const NewtonConfig nc;
  const double configs[6][2] = {{1, 0}, {1, 0.1}, {1, 1}, {2, 0}, {2, 0.1}, {2, 1}};
  for (const auto& cfg : configs) {
    const auto res = deflation_search(P, P.initial_guess(), {cfg[0], cfg[1]}, nc);
    o.detail << "(" << cfg[0] << "," << cfg[1] << ")=" << res.solutions.size();
    o.require(res.solutions.size() >= 2, "at least 2 solutions");
    for (const auto& a : res.attempts) {
      const bool small_g = a.deflated_residual_history.back() <= nc.atol;
      const bool large_f = a.residual_history.back() > nc.spurious_factor * nc.atol;
      o.require(a.spurious == (small_g && large_f), "spurious flag consistent");
    }
    if (res.attempts.size() >= 3 && res.attempts[2].spurious) o.detail << "[third spurious]";
    if (cfg[0] == 2 && cfg[1] == 0) {
      const bool third_spurious = res.attempts.size() >= 3 && res.attempts[2].spurious;
      o.require(!third_spurious || res.stop == SearchStop::Spurious, "(2,0) stops on the spurious flag");
    }
    if (cfg[0] == 1 && cfg[1] == 0) {
      std::vector<std::string> classes;
      for (const auto& s : res.solutions) classes.push_back(sign_class(s.values, 99));
      std::sort(classes.begin(), classes.end());
      o.detail << "{";
      for (const auto& c : classes) o.detail << c << (c == classes.back() ? "" : ",");
      o.detail << "}";
      o.require(res.solutions.size() == 3, "(1,0) finds 3");
      o.require(classes == std::vector<std::string>{"cross", "negative", "positive"}, "sign classes");
    }
    o.detail << ' ';
  }
  const double t = seconds_since(t0);
  o.detail << t << " s. ";
  o.require(t < 180.0, "runtime < 3 min");
}

void krylov_growth(Outcome& o) {
  const AllenCahnProblem P(0.04, 49);
  NewtonConfig c;
  c.linear_solver = LinearSolverKind::Gmres;
  c.preconditioner = PreconditionerKind::Ilu0;
  c.gmres.max_iter = 1000;
  DeflationOperator op(P.inner_product(), {1.0, 0.0});
  std::vector<double> means;
  for (int k = 0; k < 3; ++k) {
    const NewtonResult r = newton_solve(DeflatedSystem(P, op), P.initial_guess(), c);
    if (!r.converged) {
      o.require(false, "solve " + std::to_string(k) + " converged (" + r.diagnostic + ")");
      break;
    }
    means.push_back(r.mean_krylov_iterations());
    op.add_root(r.solution);
  }
  o.detail << "mean Krylov iterations per solve (0, 1, 2 deflations):";
  for (double m : means) o.detail << ' ' << m;
  o.detail << ". ";
  o.require(means.size() == 3, "three solves");
  for (std::size_t k = 1; k < means.size(); ++k) o.require(means[k] <= 1.25 * means[0], "within 25%");
}

void sherman_morrison_exact(Outcome& o) {
  const BratuProblem P(2.0, 199);
  const NewtonResult lower = newton_solve(P, P.initial_guess(), NewtonConfig{});
  DeflationOperator op(P.inner_product(), {1.0, 0.0});
  op.add_root(lower.solution);
  NewtonConfig c;
  c.linear_solver = LinearSolverKind::Gmres;
  c.preconditioner = PreconditionerKind::Exact;
  const NewtonResult r = newton_solve(DeflatedSystem(P, op), P.initial_guess(), c);
  std::size_t worst = 0;
  for (const auto& k : r.krylov_history) worst = std::max(worst, k.iterations);
  o.detail << r.krylov_history.size() << " deflated GMRES solves (N=199), max iterations " << worst
           << ", Newton " << r.diagnostic << ". ";
  o.require(!r.krylov_history.empty(), "some solves");
  for (const auto& k : r.krylov_history) o.require(k.iterations == 1 && k.converged, "one iteration each");
}

/// A F(u) for fixed invertible A.
class Premultiplied final : public NonlinearProblem {
 public:
  Premultiplied(const NonlinearProblem& base, DenseMatrix A) : base_(base), A_(std::move(A)) {}
  std::string name() const override { return "premultiplied"; }
  const Grid& grid() const override { return base_.grid(); }
  Vector residual(std::span<const double> u) const override { return A_ * base_.residual(u); }
  CsrMatrix jacobian(std::span<const double> u) const override {
    return CsrMatrix::from_dense(A_ * base_.jacobian(u).to_dense());
  }
  InnerProduct inner_product() const override { return base_.inner_product(); }

 private:
  const NonlinearProblem& base_;
  DenseMatrix A_;
};

void properties(Outcome& o) {
  std::mt19937_64 rng(2024);

  // (a) deflated Jacobian action against central differences
  double worst_a = 0.0;
  for (const auto& name : problem_names()) {
    const auto P = make_problem(name);
    const std::size_t n = P->dimension();
    DeflationOperator op(P->inner_product(), {2.0, 1.0});
    op.add_root(ts::random_vector(n, rng));
    op.add_root(ts::random_vector(n, rng));
    const DeflatedSystem sys(*P, op);
    for (int k = 0; k < 20; ++k) {
      const Vector u = ts::random_vector(n, rng, -0.5, 0.5);
      const Vector v = ts::random_vector(n, rng);
      const Vector Jv = sys.jacobian_action(u, v);
      const Vector fd = ts::central_difference([&](const Vector& w) { return sys.residual(w); }, u, v, 1e-6);
      worst_a = std::max(worst_a, norm2(subtract(Jv, fd)) / norm2(Jv));
    }
  }
  o.detail << "(a) " << worst_a;
  o.require(worst_a <= 1e-5, "(a) Jacobian action");

  // (b) Sherman-Morrison application against the assembled dense inverse
  double worst_b = 0.0;
  {
    const std::size_t n = 40;
    const DenseMatrix J = ts::random_matrix(n, rng, 10.0);
    const Vector F = ts::random_vector(n, rng), d = ts::random_vector(n, rng);
    const double M = 2.5;
    DenseMatrix JG(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) JG(i, j) = M * J(i, j) + F[i] * d[j];
    const DenseLu dense(JG), base(J);
    const DeflatedPreconditioner pc({n, [&base](std::span<const double> v) { return base.solve(v); }}, M, F, d);
    for (int k = 0; k < 10; ++k) {
      const Vector v = ts::random_vector(n, rng);
      const Vector e = dense.solve(v);
      worst_b = std::max(worst_b, norm_inf(subtract(pc.apply(v), e)) / std::max(1.0, norm_inf(e)));
    }
  }
  o.detail << ", (b) " << worst_b;
  o.require(worst_b <= 1e-10, "(b) Sherman-Morrison");

  // (c) an undeflated exact root stays an exact root
  {
    const SigmoidProblem S;
    DeflationOperator op(S.inner_product(), {2.0, 1.0});
    op.add_root({SigmoidProblem::negative_root()});
    const double g = DeflatedSystem(S, op).residual(Vector{0.0})[0];
    o.detail << ", (c) " << g;
    o.require(g == 0.0, "(c) other root preserved");
  }

  // (d) affine covariance of damped Newton iterates
  double worst_d = 0.0;
  {
    const BratuProblem P(2.0, 39);
    const Premultiplied Q(P, ts::random_matrix(39, rng, 12.0));
    const Vector u0 = P.grid().sample([](double x, double) { return 6.0 * std::sin(3.141592653589793 * x); });
    NewtonConfig c = damped();
    c.atol = 1e-300;
    for (std::size_t k = 1; k <= 8; ++k) {
      c.max_iterations = k;
      const Vector a = newton_solve(P, u0, c).solution;
      const Vector b = newton_solve(Q, u0, c).solution;
      worst_d = std::max(worst_d, norm_inf(subtract(a, b)) / norm_inf(a));
    }
  }
  o.detail << ", (d) " << worst_d;
  o.require(worst_d <= 1e-10, "(d) affine covariance");

  // (e) deflated residual bounded below near a deflated Bratu root
  {
    const BratuProblem P(2.0, 999);
    const NewtonResult lower = newton_solve(P, P.initial_guess(), NewtonConfig{});
    const Vector w = ts::random_vector(999, rng);
    const InnerProduct ip = P.inner_product();
    double smallest_ratio = INFINITY;
    for (DeflationConfig cfg : {DeflationConfig{1.0, 0.0}, DeflationConfig{1.0, 1.0}, DeflationConfig{2.0, 1.0}}) {
      DeflationOperator op(ip, cfg);
      op.add_root(lower.solution);
      const double bound = ip.norm(P.jacobian(lower.solution) * w) / std::pow(ip.norm(w), cfg.p);
      for (double t : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8}) {
        Vector u = lower.solution;
        axpy(t, w, u);
        smallest_ratio = std::min(smallest_ratio, ip.norm(DeflatedSystem(P, op).residual(u)) / bound);
      }
    }
    o.detail << ", (e) min |G| / (|Jw| / |w|^p) = " << smallest_ratio << ". ";
    o.require(smallest_ratio > 0.5, "(e) blow-up lower bound");
  }
}

struct Criterion {
  const char* name;
  std::function<void(Outcome&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const ts::QuietWarnings quiet;
  const std::vector<Criterion> all = {
      {"sigmoid roots", sigmoid_roots},
      {"sigmoid pathology", sigmoid_pathology},
      {"Bratu two solutions and fold", bratu},
      {"Painleve", painleve},
      {"Hao problem", hao},
      {"Allen-Cahn solution counts", allen_cahn_counts},
      {"Krylov non-growth", krylov_growth},
      {"Sherman-Morrison exactness", sherman_morrison_exact},
      {"property suites", properties},
  };
  std::vector<std::size_t> selected;
  for (int i = 1; i < argc; ++i) {
    const int k = std::atoi(argv[i]);
    if (k < 1 || k > static_cast<int>(all.size())) {
      std::fprintf(stderr, "usage: acceptance [1-%zu ...]\n", all.size());
      return 2;
    }
    selected.push_back(static_cast<std::size_t>(k));
  }
  if (selected.empty())
    for (std::size_t k = 1; k <= all.size(); ++k) selected.push_back(k);

  bool ok = true;
  for (std::size_t k : selected) {
    Outcome o;
    try {
      all[k - 1].run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    std::printf("criterion %zu %s  %s: %s\n", k, o.pass ? "PASS" : "FAIL", all[k - 1].name, o.detail.str().c_str());
    std::fflush(stdout);
    ok = ok && o.pass;
  }
  return ok ? 0 : 1;
}
