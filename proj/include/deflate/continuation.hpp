#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <future>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "deflate/deflation.hpp"
#include "deflate/errors.hpp"
#include "deflate/newton.hpp"
#include "deflate/problem.hpp"
#include "deflate/search.hpp"

namespace deflate {

struct ContinuationConfig {
  std::string parameter = "lambda";
  double start = 0.0;
  double stop = 0.0;
  double step = 0.0;
  DeflationConfig deflation{};
  NewtonConfig newton = [] {
    NewtonConfig c;
    c.max_iterations = 20;
    return c;
  }();
  /// Extra guesses built from the previous step's solutions.
  std::vector<GuessGenerator> generators{MeanGuess{}};
  /// Initial guess for the first step; the problem's default when empty.
  std::optional<Vector> initial_guess;
  /// Also retry the initial guess at every later step.
  bool retry_initial_guess = true;
  std::string functional = "max";
  std::size_t max_roots = 16;
  double dedup_tol = 1e-4;
  /// Threads for the per-branch continuation solves; 1 = sequential.
  std::size_t jobs = 1;

  /// Parameter values of the sweep, start included, stop included when it
  /// lies on the step lattice.
  std::vector<double> values() const {
    if (!std::isfinite(start) || !std::isfinite(stop) || !std::isfinite(step))
      throw UsageError("continuation: non-finite range");
    if (start == stop) return {start};
    if (step == 0.0) throw UsageError("continuation: step must be nonzero");
    const double span = (stop - start) / step;
    if (!(span > 0.0)) throw UsageError("continuation: step points away from stop");
    const auto n = static_cast<std::size_t>(std::floor(span + 1e-9));
    std::vector<double> v;
    v.reserve(n + 1);
    for (std::size_t k = 0; k <= n; ++k) v.push_back(start + static_cast<double>(k) * step);
    return v;
  }
};

struct BranchRecord {
  double parameter = 0.0;
  std::size_t branch_id = 0;
  double functional = 0.0;
  /// Index into BifurcationDiagram::parameter_values.
  std::size_t step = 0;
  Vector solution;
};

struct BifurcationDiagram {
  std::string parameter;
  std::string functional;
  std::vector<double> parameter_values;
  /// Number of distinct solutions at each parameter value.
  std::vector<std::size_t> counts;
  /// Ordered by step, then branch id.
  std::vector<BranchRecord> records;
  std::string diagnostic;

  std::size_t branch_count() const {
    std::size_t n = 0;
    for (const auto& r : records) n = std::max(n, r.branch_id + 1);
    return n;
  }
};

namespace detail {

/// Greedy nearest-neighbour matching of current solutions to the previous
/// step's, ties broken by the smaller functional. Unmatched solutions open new
/// branches in order of increasing functional.
inline std::vector<std::size_t> match_branches(const InnerProduct& ip, const std::vector<Vector>& current,
                                               const std::vector<double>& functionals,
                                               const std::vector<Vector>& previous,
                                               const std::vector<std::size_t>& previous_ids,
                                               std::size_t& next_id) {
  struct Pair {
    double dist;
    double func;
    std::size_t cur;
    std::size_t prev;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < current.size(); ++i)
    for (std::size_t j = 0; j < previous.size(); ++j)
      pairs.push_back({ip.distance(current[i], previous[j]), functionals[i], i, j});
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.func < b.func;
  });

  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> ids(current.size(), none);
  std::vector<bool> taken(previous.size(), false);
  for (const auto& p : pairs) {
    if (ids[p.cur] != none || taken[p.prev]) continue;
    ids[p.cur] = previous_ids[p.prev];
    taken[p.prev] = true;
  }

  std::vector<std::size_t> fresh;
  for (std::size_t i = 0; i < current.size(); ++i)
    if (ids[i] == none) fresh.push_back(i);
  std::stable_sort(fresh.begin(), fresh.end(),
                   [&](std::size_t a, std::size_t b) { return functionals[a] < functionals[b]; });
  for (std::size_t i : fresh) ids[i] = next_id++;
  return ids;
}

}  // namespace detail

/// Natural-parameter deflated continuation.
///
/// At each parameter value every previous solution is first continued by a
/// plain Newton solve. The continued solutions are then deflated and the
/// previous solutions, the initial guess and the generator guesses are each
/// used for repeated deflated solves to pick up new branches.
inline BifurcationDiagram deflated_continuation(const NonlinearProblem& problem, const ContinuationConfig& cfg) {
  BifurcationDiagram diagram;
  diagram.parameter = cfg.parameter;
  diagram.functional = cfg.functional;
  diagram.parameter_values = cfg.values();
  cfg.deflation.validate();
  cfg.newton.validate();
  if (cfg.max_roots < 1) throw UsageError("continuation: max_roots must be at least 1");
  {
    const auto names = problem.parameter_names();
    if (std::find(names.begin(), names.end(), cfg.parameter) == names.end())
      throw UsageError(problem.name() + ": no parameter named '" + cfg.parameter + "'");
    branch_functional(problem, problem.initial_guess(), cfg.functional);
  }
  const Vector u0 = cfg.initial_guess.value_or(problem.initial_guess());
  require_same_size(u0.size(), problem.dimension(), "deflated_continuation");

  SearchOptions sopt;
  sopt.max_roots = cfg.max_roots;
  sopt.dedup_tol = cfg.dedup_tol;

  std::vector<Vector> previous;
  std::vector<std::size_t> previous_ids;
  std::size_t next_id = 0;

  for (std::size_t k = 0; k < diagram.parameter_values.size(); ++k) {
    const double value = diagram.parameter_values[k];
    const auto P = problem.with_parameter(cfg.parameter, value);
    const InnerProduct ip = P->inner_product();
    DeflationOperator deflation(ip, cfg.deflation);
    SolutionSet found(ip, cfg.dedup_tol);
    SolutionSet prev_set(ip, cfg.dedup_tol);
    for (const auto& v : previous) prev_set.insert({v, "previous", 0, 0.0});

    // Continue each known branch; independent solves, merged in order.
    std::vector<NewtonResult> continued(previous.size());
    if (cfg.jobs > 1 && previous.size() > 1) {
      for (std::size_t b = 0; b < previous.size(); b += cfg.jobs) {
        std::vector<std::future<NewtonResult>> batch;
        for (std::size_t j = b; j < std::min(previous.size(), b + cfg.jobs); ++j)
          batch.push_back(std::async(std::launch::async, [&, j] {
            return newton_solve(*P, previous[j], cfg.newton);
          }));
        for (std::size_t j = 0; j < batch.size(); ++j) continued[b + j] = batch[j].get();
      }
    } else {
      for (std::size_t j = 0; j < previous.size(); ++j) continued[j] = newton_solve(*P, previous[j], cfg.newton);
    }
    for (auto& r : continued) {
      if (!r.converged || found.size() >= cfg.max_roots) continue;
      if (found.contains(r.solution)) continue;
      deflation.add_root(r.solution);
      found.insert({std::move(r.solution), "continued", r.iterations, r.mean_krylov_iterations()});
    }

    std::vector<Guess> guesses;
    for (std::size_t j = 0; j < previous.size(); ++j) guesses.push_back({previous[j], "previous"});
    if (k == 0 || cfg.retry_initial_guess) guesses.push_back({u0, "u0"});
    for (auto& g : generate_guesses(*P, prev_set, cfg.generators)) guesses.push_back(std::move(g));
    for (const auto& g : guesses) {
      if (found.size() >= cfg.max_roots) break;
      deflate_from(*P, deflation, found, g, cfg.newton, sopt);
    }

    if (k == 0 && found.empty()) {
      diagram.counts.assign(diagram.parameter_values.size(), 0);
      diagram.diagnostic = "no solutions at the first parameter value";
      return diagram;
    }

    std::vector<Vector> current;
    std::vector<double> funcs;
    for (const auto& s : found) {
      current.push_back(s.values);
      funcs.push_back(branch_functional(*P, s.values, cfg.functional));
    }
    const auto ids = detail::match_branches(ip, current, funcs, previous, previous_ids, next_id);

    std::vector<std::size_t> order(current.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
    for (std::size_t i : order) diagram.records.push_back({value, ids[i], funcs[i], k, current[i]});
    diagram.counts.push_back(current.size());

    previous.clear();
    previous_ids.clear();
    for (std::size_t i : order) {
      previous.push_back(std::move(current[i]));
      previous_ids.push_back(ids[i]);
    }
  }
  diagram.diagnostic = "completed";
  return diagram;
}

}  // namespace deflate
