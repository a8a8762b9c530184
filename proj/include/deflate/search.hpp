#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "deflate/deflation.hpp"
#include "deflate/errors.hpp"
#include "deflate/linalg.hpp"
#include "deflate/log.hpp"
#include "deflate/newton.hpp"
#include "deflate/problem.hpp"

namespace deflate {

struct Solution {
  Vector values;
  /// Free-form description of the guess that produced this solution.
  std::string source;
  std::size_t iterations = 0;
  double mean_krylov_iterations = 0.0;
};

/// Distinct solutions under a relative distance rule: two vectors are the same
/// when |a - b| <= tol * (1 + max(|a|, |b|)) in the problem norm.
class SolutionSet {
 public:
  SolutionSet(InnerProduct ip, double dedup_tol = 1e-4) : ip_(std::move(ip)), tol_(dedup_tol) {
    if (!(tol_ >= 0.0)) throw UsageError("SolutionSet: dedup_tol must be non-negative");
  }

  const InnerProduct& inner_product() const { return ip_; }
  double dedup_tol() const { return tol_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const Solution& operator[](std::size_t i) const { return items_[i]; }
  const std::vector<Solution>& items() const { return items_; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  bool same(std::span<const double> a, std::span<const double> b) const {
    const double scale = 1.0 + std::max(ip_.norm(a), ip_.norm(b));
    return ip_.distance(a, b) <= tol_ * scale;
  }

  bool contains(std::span<const double> u) const {
    for (const auto& s : items_)
      if (same(s.values, u)) return true;
    return false;
  }

  /// Appends unless a duplicate; returns whether it was added.
  bool insert(Solution s) {
    require_same_size(s.values.size(), ip_.dimension(), "SolutionSet::insert");
    if (contains(s.values)) return false;
    items_.push_back(std::move(s));
    return true;
  }

 private:
  InnerProduct ip_;
  double tol_;
  std::vector<Solution> items_;
};

struct FixedGuess {
  Vector u0;
};
struct NegateGuess {};
struct ReflectGuess {
  int axis = 0;
};
struct MeanGuess {};

/// fixed(u0), negate(each solution), reflect(each solution, axis) or the mean
/// of all known solutions.
using GuessGenerator = std::variant<FixedGuess, NegateGuess, ReflectGuess, MeanGuess>;

inline std::string describe(const GuessGenerator& g) {
  struct {
    std::string operator()(const FixedGuess&) const { return "fixed"; }
    std::string operator()(const NegateGuess&) const { return "negate"; }
    std::string operator()(const ReflectGuess& r) const { return "reflect" + std::to_string(r.axis); }
    std::string operator()(const MeanGuess&) const { return "mean"; }
  } v;
  return std::visit(v, g);
}

struct Guess {
  Vector values;
  std::string source;
};

/// Guesses from known solutions, in generator order, without duplicates.
inline std::vector<Guess> generate_guesses(const NonlinearProblem& problem, const SolutionSet& known,
                                           const std::vector<GuessGenerator>& generators) {
  const std::size_t n = problem.dimension();
  std::vector<Guess> out;
  auto push = [&](Vector v, std::string source) {
    require_same_size(v.size(), n, "generate_guesses");
    for (const auto& g : out)
      if (known.same(g.values, v)) return;
    out.push_back({std::move(v), std::move(source)});
  };

  for (const auto& gen : generators) {
    if (const auto* f = std::get_if<FixedGuess>(&gen)) {
      push(f->u0, "fixed");
    } else if (std::holds_alternative<NegateGuess>(gen)) {
      for (std::size_t i = 0; i < known.size(); ++i) {
        Vector v = known[i].values;
        scale(-1.0, v);
        push(std::move(v), "negate(" + std::to_string(i) + ")");
      }
    } else if (const auto* r = std::get_if<ReflectGuess>(&gen)) {
      // Probe once so a problem without the symmetry fails even with no solutions.
      if (!problem.reflect(Vector(n, 0.0), r->axis))
        throw UsageError(problem.name() + ": no reflection declared for axis " + std::to_string(r->axis));
      for (std::size_t i = 0; i < known.size(); ++i)
        push(*problem.reflect(known[i].values, r->axis), "reflect" + std::to_string(r->axis) + "(" + std::to_string(i) + ")");
    } else if (!known.empty()) {
      Vector mean(n, 0.0);
      for (const auto& s : known) axpy(1.0, s.values, mean);
      scale(1.0 / static_cast<double>(known.size()), mean);
      push(std::move(mean), "mean");
    }
  }
  return out;
}

struct SearchOptions {
  std::size_t max_roots = 16;
  double dedup_tol = 1e-4;
  /// Newton atol is multiplied by this after every root found (1 = fixed).
  double atol_factor = 1.0;
};

enum class SearchStop { NewtonFailure, Spurious, Duplicate, MaxRoots };

inline const char* to_string(SearchStop s) {
  switch (s) {
    case SearchStop::NewtonFailure: return "newton-failure";
    case SearchStop::Spurious: return "spurious";
    case SearchStop::Duplicate: return "duplicate";
    case SearchStop::MaxRoots: return "max-roots";
  }
  return "unknown";
}

struct SearchResult {
  SolutionSet solutions;
  /// Every Newton run, in order, including the failing one.
  std::vector<NewtonResult> attempts;
  SearchStop stop = SearchStop::NewtonFailure;
};

/// Repeated deflated solves from one guess, appending to an existing deflation
/// state and solution set. Stops at the first failed, spurious or duplicate
/// solve, or once `solutions` holds max_roots entries.
inline SearchStop deflate_from(const NonlinearProblem& problem, DeflationOperator& deflation, SolutionSet& solutions,
                               const Guess& guess, NewtonConfig ncfg, const SearchOptions& opt,
                               std::vector<NewtonResult>* attempts = nullptr) {
  if (opt.max_roots < 1) throw UsageError("search: max_roots must be at least 1");
  const DeflatedSystem sys(problem, deflation);
  while (solutions.size() < opt.max_roots) {
    NewtonResult r = newton_solve(sys, guess.values, ncfg);
    const bool converged = r.converged;
    const bool spurious = r.spurious;
    Solution s{r.solution, guess.source, r.iterations, r.mean_krylov_iterations()};
    if (attempts) attempts->push_back(std::move(r));
    if (spurious) return SearchStop::Spurious;
    if (!converged) return SearchStop::NewtonFailure;
    if (solutions.contains(s.values)) {
      log_warning("deflated solve re-converged to a known solution; stopping");
      return SearchStop::Duplicate;
    }
    deflation.add_root(s.values);
    solutions.insert(std::move(s));
    ncfg.atol *= opt.atol_factor;
  }
  return SearchStop::MaxRoots;
}

/// Finds as many distinct solutions as deflation reaches from u0.
inline SearchResult deflation_search(const NonlinearProblem& problem, std::span<const double> u0,
                                     const DeflationConfig& dcfg, const NewtonConfig& ncfg,
                                     const SearchOptions& opt = {}) {
  require_same_size(u0.size(), problem.dimension(), "deflation_search");
  DeflationOperator deflation(problem.inner_product(), dcfg);
  SearchResult res{SolutionSet(problem.inner_product(), opt.dedup_tol), {}, SearchStop::NewtonFailure};
  const Guess guess{Vector(u0.begin(), u0.end()), "u0"};
  res.stop = deflate_from(problem, deflation, res.solutions, guess, ncfg, opt, &res.attempts);
  return res;
}

}  // namespace deflate
