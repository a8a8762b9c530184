#pragma once

#include <cstddef>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "deflate/continuation.hpp"
#include "deflate/deflation.hpp"
#include "deflate/errors.hpp"
#include "deflate/io.hpp"
#include "deflate/log.hpp"
#include "deflate/newton.hpp"
#include "deflate/problems.hpp"
#include "deflate/search.hpp"

namespace deflate::cli {

enum ExitCode : int { Ok = 0, Usage = 1, Diverged = 2, Spurious = 3 };

/// Everything the three commands read from flags or a config file.
struct RunSpec {
  std::string command;
  std::string problem;
  std::optional<double> lambda;
  std::optional<double> delta;
  std::optional<double> x0;
  std::string guess_file;
  std::string mesh;
  double p = 1.0;
  double alpha = 1.0;
  std::string damping = "none";
  std::string linear_solver = "direct";
  std::string precond = "ilu0";
  double atol = 1e-10;
  std::optional<std::size_t> max_iter;
  double gmres_rtol = 1e-12;
  double gmres_atol = 1e-12;
  std::size_t gmres_max_iter = 200;
  std::vector<std::string> deflate;
  std::size_t max_roots = 16;
  double dedup_tol = 1e-4;
  std::string parameter;
  std::optional<double> start;
  std::optional<double> stop;
  std::optional<double> step;
  std::string functional = "max";
  std::vector<std::string> generators{"mean"};
  std::string out = ".";
  std::size_t jobs = 1;
};

inline std::pair<std::size_t, std::size_t> parse_mesh(const std::string& s) {
  if (s.empty()) return {0, 0};
  auto number = [&](const std::string& t) -> std::size_t {
    if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos)
      throw UsageError("malformed --mesh '" + s + "'");
    return std::stoul(t);
  };
  const auto x = s.find('x');
  if (x == std::string::npos) return {number(s), 0};
  return {number(s.substr(0, x)), number(s.substr(x + 1))};
}

/// Flags equivalent to the entries of a JSON config object. Keys are flag
/// names without the leading dashes; arrays expand to repeated flags.
inline std::vector<std::string> config_arguments(const Json& cfg) {
  if (!cfg.is_object()) throw UsageError("config file must hold a JSON object");
  std::vector<std::string> args;
  for (const auto& [key, value] : cfg.items()) {
    auto push = [&](const Json& v) {
      args.push_back("--" + key);
      if (v.is_string())
        args.push_back(v.get<std::string>());
      else if (v.is_number_integer() || v.is_number_unsigned())
        args.push_back(std::to_string(v.get<long long>()));
      else if (v.is_number())
        args.push_back(format_g17(v.get<double>()));
      else
        throw UsageError("config key '" + key + "' has an unsupported value");
    };
    if (value.is_array())
      for (const auto& v : value) push(v);
    else
      push(value);
  }
  return args;
}

inline void add_options(CLI::App& app, RunSpec& s) {
  app.add_option("--problem", s.problem, "sigmoid | bratu | painleve | hao | allen-cahn");
  app.add_option("--lambda", s.lambda, "Bratu/Hao parameter");
  app.add_option("--delta", s.delta, "Allen-Cahn interface width");
  app.add_option("--x0", s.x0, "constant initial guess");
  app.add_option("--guess", s.guess_file, "initial guess field (JSON)");
  app.add_option("--mesh", s.mesh, "cells per axis, N or NxM");
  app.add_option("--p", s.p, "deflation power");
  app.add_option("--alpha", s.alpha, "deflation shift");
  app.add_option("--damping", s.damping)->check(CLI::IsMember({"none", "nleq"}));
  app.add_option("--linear-solver", s.linear_solver)->check(CLI::IsMember({"direct", "gmres"}));
  app.add_option("--precond", s.precond)->check(CLI::IsMember({"none", "ilu0", "exact"}));
  app.add_option("--atol", s.atol, "Newton tolerance on the scaled residual");
  app.add_option("--max-iter", s.max_iter, "Newton iteration limit");
  app.add_option("--gmres-rtol", s.gmres_rtol);
  app.add_option("--gmres-atol", s.gmres_atol);
  app.add_option("--gmres-max-iter", s.gmres_max_iter);
  app.add_option("--deflate", s.deflate, "solution file to deflate (repeatable)");
  app.add_option("--max-roots", s.max_roots);
  app.add_option("--dedup-tol", s.dedup_tol);
  app.add_option("--parameter", s.parameter, "continuation parameter");
  app.add_option("--start", s.start);
  app.add_option("--stop", s.stop);
  app.add_option("--step", s.step);
  app.add_option("--functional", s.functional, "diagram ordinate");
  app.add_option("--generator", s.generators, "mean | negate | reflect0 | reflect1 (repeatable)");
  app.add_option("--out", s.out, "output directory");
  app.add_option("--jobs", s.jobs)->check(CLI::PositiveNumber);
  app.add_option("--config", "JSON file mirroring these flags");
}

inline std::unique_ptr<NonlinearProblem> build_problem(const RunSpec& s) {
  if (s.problem.empty()) throw UsageError("--problem is required");
  ProblemOptions opt;
  opt.lambda = s.lambda;
  opt.delta = s.delta;
  opt.x0 = s.x0;
  std::tie(opt.mesh, opt.mesh_y) = parse_mesh(s.mesh);
  return make_problem(s.problem, opt);
}

inline Vector initial_guess(const RunSpec& s, const NonlinearProblem& problem) {
  if (!s.guess_file.empty()) {
    Field f = read_field(s.guess_file);
    if (f.values.size() != problem.dimension()) throw UsageError("--guess does not match the problem size");
    return f.values;
  }
  if (s.x0) return Vector(problem.dimension(), *s.x0);
  return problem.initial_guess();
}

inline NewtonConfig newton_config(const RunSpec& s, std::size_t default_max_iter) {
  NewtonConfig c;
  c.atol = s.atol;
  c.max_iterations = s.max_iter.value_or(default_max_iter);
  c.damping = s.damping == "nleq" ? Damping::ErrorOriented : Damping::None;
  c.linear_solver = s.linear_solver == "gmres" ? LinearSolverKind::Gmres : LinearSolverKind::Direct;
  c.preconditioner = s.precond == "none"    ? PreconditionerKind::None
                     : s.precond == "exact" ? PreconditionerKind::Exact
                                            : PreconditionerKind::Ilu0;
  c.gmres.rtol = s.gmres_rtol;
  c.gmres.atol = s.gmres_atol;
  c.gmres.max_iter = s.gmres_max_iter;
  c.validate();
  return c;
}

inline std::vector<GuessGenerator> generators(const RunSpec& s) {
  std::vector<GuessGenerator> g;
  for (const auto& name : s.generators) {
    if (name == "mean") g.emplace_back(MeanGuess{});
    else if (name == "negate") g.emplace_back(NegateGuess{});
    else if (name == "reflect0") g.emplace_back(ReflectGuess{0});
    else if (name == "reflect1") g.emplace_back(ReflectGuess{1});
    else if (name != "none") throw UsageError("unknown generator '" + name + "'");
  }
  return g;
}

inline Json parameters_json(const NonlinearProblem& problem) {
  Json j = Json::object();
  for (const auto& name : problem.parameter_names()) j[name] = problem.parameter(name);
  return j;
}

inline Json history_json(const NewtonResult& r) {
  Json k = Json::array();
  for (const auto& s : r.krylov_history) k.push_back(s.iterations);
  return {{"converged", r.converged},
          {"spurious", r.spurious},
          {"iterations", r.iterations},
          {"diagnostic", r.diagnostic},
          {"residual_history", r.residual_history},
          {"deflated_residual_history", r.deflated_residual_history},
          {"damping_history", r.damping_history},
          {"krylov_iterations", k},
          {"mean_krylov_iterations", r.mean_krylov_iterations()}};
}

inline int cmd_solve(const RunSpec& s, std::ostream& out) {
  const auto problem = build_problem(s);
  const NewtonConfig ncfg = newton_config(s, 100);
  DeflationOperator deflation(problem->inner_product(), {s.p, s.alpha});
  for (const auto& file : s.deflate) {
    Field f = read_field(file);
    if (f.values.size() != problem->dimension()) throw UsageError(file + ": size does not match the problem");
    deflation.add_root(std::move(f.values));
  }
  const Vector u0 = initial_guess(s, *problem);
  const NewtonResult r = newton_solve(DeflatedSystem(*problem, deflation), u0, ncfg);

  Json meta = {{"problem", problem->name()},
               {"parameters", parameters_json(*problem)},
               {"p", s.p},
               {"alpha", s.alpha},
               {"deflated_roots", deflation.size()}};
  meta.update(history_json(r));
  write_field(std::filesystem::path(s.out) / "solution.json", problem->make_field(r.solution), meta);
  out << problem->name() << ": " << r.diagnostic << " after " << r.iterations << " iterations\n";
  if (r.converged) return Ok;
  return r.spurious ? Spurious : Diverged;
}

inline int cmd_search(const RunSpec& s, std::ostream& out) {
  const auto problem = build_problem(s);
  const NewtonConfig ncfg = newton_config(s, 100);
  SearchOptions opt;
  opt.max_roots = s.max_roots;
  opt.dedup_tol = s.dedup_tol;
  const Vector u0 = initial_guess(s, *problem);
  const SearchResult res = deflation_search(*problem, u0, {s.p, s.alpha}, ncfg, opt);

  const std::filesystem::path dir(s.out);
  for (std::size_t k = 0; k < res.solutions.size(); ++k) {
    const auto& sol = res.solutions[k];
    Json meta = {{"problem", problem->name()},
                 {"parameters", parameters_json(*problem)},
                 {"index", k},
                 {"source", sol.source},
                 {"iterations", sol.iterations},
                 {"mean_krylov_iterations", sol.mean_krylov_iterations}};
    write_field(dir / ("solution_" + std::to_string(k) + ".json"), problem->make_field(sol.values), meta);
  }
  Json solves = Json::array();
  Json krylov = Json::array();
  for (const auto& a : res.attempts) {
    solves.push_back({{"converged", a.converged},
                      {"spurious", a.spurious},
                      {"iterations", a.iterations},
                      {"diagnostic", a.diagnostic}});
    krylov.push_back(a.mean_krylov_iterations());
  }
  Json summary = {{"problem", problem->name()},
                  {"parameters", parameters_json(*problem)},
                  {"p", s.p},
                  {"alpha", s.alpha},
                  {"n_solutions", res.solutions.size()},
                  {"stop_reason", to_string(res.stop)},
                  {"iterations", solves},
                  {"krylov_averages", krylov}};
  write_json(dir / "summary.json", summary);
  out << problem->name() << ": " << res.solutions.size() << " solution(s), stopped on " << to_string(res.stop)
      << "\n";
  return res.solutions.empty() ? Diverged : Ok;
}

inline int cmd_continue(const RunSpec& s, std::ostream& out) {
  const auto problem = build_problem(s);
  ContinuationConfig cfg;
  const auto names = problem->parameter_names();
  if (names.empty()) throw UsageError(problem->name() + " has no continuation parameter");
  cfg.parameter = s.parameter.empty() ? names.front() : s.parameter;
  if (!s.start || !s.stop) throw UsageError("continue needs --start and --stop");
  cfg.start = *s.start;
  cfg.stop = *s.stop;
  cfg.step = s.step.value_or(0.0);
  cfg.deflation = {s.p, s.alpha};
  cfg.newton = newton_config(s, 20);
  cfg.generators = generators(s);
  cfg.initial_guess = initial_guess(s, *problem);
  cfg.functional = s.functional;
  cfg.max_roots = s.max_roots;
  cfg.dedup_tol = s.dedup_tol;
  cfg.jobs = s.jobs;
  const BifurcationDiagram d = deflated_continuation(*problem, cfg);

  const std::filesystem::path dir(s.out);
  std::vector<std::string> files;
  for (const auto& r : d.records) {
    const std::string name = "solution_s" + std::to_string(r.step) + "_b" + std::to_string(r.branch_id) + ".json";
    Json meta = {{"problem", problem->name()},
                 {"parameter", cfg.parameter},
                 {"value", r.parameter},
                 {"branch_id", r.branch_id},
                 {"functional", r.functional}};
    write_field(dir / name, problem->make_field(r.solution), meta);
    files.push_back(name);
  }
  write_text(dir / "diagram.csv", diagram_csv(d, [&](std::size_t i) { return files[i]; }));
  Json summary = {{"problem", problem->name()},
                  {"parameter", cfg.parameter},
                  {"values", d.parameter_values},
                  {"counts", d.counts},
                  {"branches", d.branch_count()},
                  {"diagnostic", d.diagnostic}};
  write_json(dir / "summary.json", summary);
  out << problem->name() << ": " << d.parameter_values.size() << " parameter values, " << d.branch_count()
      << " branch(es)\n";
  return Ok;
}

/// Entry point shared by the executable and the tests.
inline int run(const std::vector<std::string>& argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Deflated Newton solves, searches and continuation sweeps", "deflate-solve"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  RunSpec spec;
  add_options(app, spec);
  app.get_option("--deflate")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  app.get_option("--generator")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  app.require_subcommand(1);
  for (const char* name : {"solve", "search", "continue"}) app.add_subcommand(name)->fallthrough();

  // Config entries go first so that explicit flags override them.
  std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
  try {
    for (std::size_t i = 0; i + 1 < args.size(); ++i)
      if (args[i] == "--config") {
        auto extra = config_arguments(read_json(args[i + 1]));
        if (extra.size() > 0) {
          auto at = args.begin() + 1;
          if (!args.empty() && args[0].rfind("--", 0) == 0) at = args.begin();
          args.insert(at, extra.begin(), extra.end());
        }
        break;
      }
  } catch (const Error& e) {
    err << "deflate-solve: " << e.what() << "\n";
    return Usage;
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "deflate-solve: " << e.what() << "\n";
    return Usage;
  }
  for (const auto* sub : app.get_subcommands()) spec.command = sub->get_name();

  const LogSink previous = set_warning_sink([&err](std::string_view msg) { err << "deflate: warning: " << msg << "\n"; });
  int code = Usage;
  try {
    std::filesystem::create_directories(spec.out);
    if (spec.command == "solve") code = cmd_solve(spec, out);
    else if (spec.command == "search") code = cmd_search(spec, out);
    else code = cmd_continue(spec, out);
  } catch (const UsageError& e) {
    err << "deflate-solve: " << e.what() << "\n";
    code = Usage;
  } catch (const std::exception& e) {
    err << "deflate-solve: " << e.what() << "\n";
    code = Usage;
  }
  set_warning_sink(previous);
  return code;
}

}  // namespace deflate::cli
