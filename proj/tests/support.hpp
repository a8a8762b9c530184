#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "deflate/deflation.hpp"
#include "deflate/linalg.hpp"
#include "deflate/log.hpp"
#include "deflate/problem.hpp"

namespace testing_support {

using deflate::DenseMatrix;
using deflate::Vector;

inline Vector random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Vector v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

inline DenseMatrix random_matrix(std::size_t n, std::mt19937_64& rng, double diag_shift = 0.0) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  DenseMatrix A(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) A(i, j) = dist(rng) + (i == j ? diag_shift : 0.0);
  return A;
}

/// Random matrix with entries only for |i - j| within the given bands.
inline DenseMatrix random_banded(std::size_t n, std::size_t kl, std::size_t ku, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  DenseMatrix A(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if ((j <= i && i - j <= kl) || (j > i && j - i <= ku)) A(i, j) = dist(rng);
  return A;
}

/// Central difference of a vector function along v.
inline Vector central_difference(const std::function<Vector(const Vector&)>& f, const Vector& u, const Vector& v,
                                 double eps) {
  Vector up = u, um = u;
  deflate::axpy(eps, v, up);
  deflate::axpy(-eps, v, um);
  Vector d = deflate::subtract(f(up), f(um));
  deflate::scale(0.5 / eps, d);
  return d;
}

/// RK4 shooting for u'' = -lambda e^u, u(0) = 0, u'(0) = s; returns u sampled
/// every `stride` steps (excluding x = 0) and u(1).
struct ShotProfile {
  std::vector<double> samples;
  double end = 0.0;
};

inline ShotProfile bratu_shoot(double lambda, double s, double h = 1e-4, std::size_t stride = 0) {
  const auto steps = static_cast<std::size_t>(std::llround(1.0 / h));
  double u = 0.0, v = s;
  ShotProfile out;
  for (std::size_t i = 1; i <= steps; ++i) {
    const double k1u = v, k1v = -lambda * std::exp(u);
    const double k2u = v + 0.5 * h * k1v, k2v = -lambda * std::exp(u + 0.5 * h * k1u);
    const double k3u = v + 0.5 * h * k2v, k3v = -lambda * std::exp(u + 0.5 * h * k2u);
    const double k4u = v + h * k3v, k4v = -lambda * std::exp(u + h * k3u);
    u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
    v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    if (stride && i % stride == 0 && i < steps) out.samples.push_back(u);
  }
  out.end = u;
  return out;
}

/// Initial slopes s in [0, 20] with u(1; s) = 0, by scanning and bisection.
inline std::vector<double> bratu_shooting_slopes(double lambda) {
  std::vector<double> roots;
  const double ds = 0.5;
  double a = 0.0, ga = bratu_shoot(lambda, a).end;
  for (double b = ds; b <= 20.0 + 1e-12; b += ds) {
    double gb = bratu_shoot(lambda, b).end;
    if (ga * gb < 0.0) {
      double lo = a, hi = b, glo = ga;
      for (int it = 0; it < 60; ++it) {
        const double m = 0.5 * (lo + hi);
        const double gm = bratu_shoot(lambda, m).end;
        if (glo * gm <= 0.0) {
          hi = m;
        } else {
          lo = m;
          glo = gm;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    a = b;
    ga = gb;
  }
  return roots;
}

/// Silences library warnings for the lifetime of the object.
class QuietWarnings {
 public:
  QuietWarnings() : previous_(deflate::set_warning_sink({})) {}
  ~QuietWarnings() { deflate::set_warning_sink(previous_); }

 private:
  deflate::LogSink previous_;
};

/// Fractions of interior nodes with u > 0 and u < 0.
inline std::pair<double, double> sign_census(const Vector& u) {
  std::size_t pos = 0, neg = 0;
  for (double v : u) {
    if (v > 0.0) ++pos;
    if (v < 0.0) ++neg;
  }
  const auto n = static_cast<double>(u.size());
  return {static_cast<double>(pos) / n, static_cast<double>(neg) / n};
}

}  // namespace testing_support
