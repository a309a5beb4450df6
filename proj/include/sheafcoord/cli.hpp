#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sheafcoord/cohomology.hpp"
#include "sheafcoord/distsim.hpp"
#include "sheafcoord/dynamics.hpp"
#include "sheafcoord/scenario.hpp"
#include "sheafcoord/trace_io.hpp"

#ifndef SHEAFCOORD_SCENARIO_DIR
#define SHEAFCOORD_SCENARIO_DIR "scenarios"
#endif

namespace sheafcoord::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kInvalidScenario = 2, kIoFailure = 3 };

inline std::filesystem::path scenario_dir() {
  if (const char* env = std::getenv("SHEAFCOORD_SCENARIO_DIR"); env && *env) return env;
  return SHEAFCOORD_SCENARIO_DIR;
}

/// A path to a JSON file, a built-in name, or a built-in family name plus --n.
inline std::filesystem::path resolve_scenario(const std::string& ref, std::optional<int> n) {
  namespace fs = std::filesystem;
  if (fs::is_regular_file(ref)) return ref;
  const fs::path dir = scenario_dir();
  if (n) {
    const fs::path p = dir / (ref + "-" + std::to_string(*n) + ".json");
    if (fs::is_regular_file(p)) return p;
    throw ScenarioError(ref, "no built-in scenario '" + ref + "' with n = " + std::to_string(*n));
  }
  const fs::path p = dir / (ref + ".json");
  if (fs::is_regular_file(p)) return p;
  throw ScenarioError(ref, "no such scenario file or built-in name");
}

inline std::vector<std::pair<std::string, std::string>> list_builtins() {
  std::vector<std::pair<std::string, std::string>> out;
  const auto dir = scenario_dir();
  if (!std::filesystem::is_directory(dir)) return out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    std::string desc;
    try {
      desc = load_scenario(entry.path().string()).description;
    } catch (const std::exception& e) {
      desc = std::string("(invalid: ") + e.what() + ")";
    }
    out.emplace_back(entry.path().stem().string(), desc);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline void print_blocks(std::ostream& os, const char* label, const Cochain0& x) {
  os << label << ":\n";
  for (std::size_t v = 0; v < x.blocks(); ++v) {
    os << "  [" << v << "]";
    for (double c : x.block(v)) os << ' ' << format_real(c);
    os << '\n';
  }
}

inline bool write_file(const std::string& path, const std::string& content, std::ostream& err) {
  std::ofstream f(path, std::ios::binary);
  if (!(f << content)) {
    err << "error: cannot write " << path << '\n';
    return false;
  }
  return true;
}

inline int cmd_cohomology(const Scenario& s, double null_tol, std::ostream& out) {
  const auto& sheaf = s.program.sheaf();
  const auto basis = global_section_basis(sheaf, null_tol);
  out << "scenario: " << s.name << '\n';
  out << "dim_h0: " << basis.dimension << '\n';
  out << "dim_h1: " << h1_dimension(sheaf, null_tol) << '\n';
  out << "section_basis:\n";
  for (const auto& b : basis.basis) {
    out << "  [";
    for (Eigen::Index i = 0; i < b.flat().size(); ++i) out << (i ? ", " : "") << format_real(b.flat()(i));
    out << "]\n";
  }
  return kOk;
}

struct FlowOptions {
  bool nonlinear = false;
  std::optional<std::size_t> steps;
  std::string out_prefix;
};

inline int cmd_flow(const Scenario& s, const FlowOptions& opt, std::ostream& out, std::ostream& err) {
  if (!s.initial_state) {
    err << "error: scenario '" << s.name << "' has no initial_state; flow needs one\n";
    return kInvalidScenario;
  }
  const auto& sheaf = s.program.sheaf();
  FlowConfig cfg = s.flow;
  if (opt.steps) cfg.max_steps = *opt.steps;
  if (!opt.out_prefix.empty()) cfg.record_every = 1;

  FlowTrace tr;
  Cochain1 targets = sheaf.zero_cochain1();
  if (opt.nonlinear) {
    tr = nonlinear_heat_flow(sheaf, s.program.potentials(), *s.initial_state, cfg);
    targets = s.program.targets();
  } else {
    tr = linear_heat_flow(sheaf, *s.initial_state, cfg);
  }
  const Cochain0& xf = tr.final_state();
  const std::string status = tr.converged ? "Converged" : "NotConverged";
  const double section_tol = std::max(1e-9, 10.0 * cfg.converge_tol);
  out << "scenario: " << s.name << '\n';
  out << "flow: " << (opt.nonlinear ? "nonlinear" : "linear") << '\n';
  out << "status: " << status << '\n';
  out << "steps: " << tr.steps_taken << '\n';
  out << "step_size: " << format_real(tr.step_size) << '\n';
  if (!tr.diagnostic.empty()) out << "diagnostic: " << tr.diagnostic << '\n';
  print_blocks(out, "final_state", xf);
  out << "global_section: " << (is_global_section(sheaf, xf, section_tol) ? "true" : "false") << '\n';
  if (opt.nonlinear) {
    out << "target_feasible: " << (tr.target_feasible.value_or(false) ? "true" : "false") << '\n';
    out << "target_residual: " << format_real(tr.target_residual) << '\n';
  }
  if (!opt.out_prefix.empty()) {
    std::ostringstream csv, js;
    write_flow_csv(csv, sheaf, targets, tr);
    write_terminal_json(js, status, sheaf, xf);
    if (!write_file(opt.out_prefix + ".csv", csv.str(), err) || !write_file(opt.out_prefix + ".json", js.str(), err))
      return kIoFailure;
  }
  return kOk;
}

struct SolveOptions {
  bool distributed = false;
  std::optional<double> rho;
  std::optional<std::size_t> max_iters;
  std::string out_prefix;
};

inline int cmd_solve(const Scenario& s, const SolveOptions& opt, std::ostream& out, std::ostream& err) {
  const auto& prog = s.program;
  const auto& sheaf = prog.sheaf();
  AdmmConfig cfg = s.solver;
  if (opt.rho) cfg.rho = *opt.rho;
  if (opt.max_iters) cfg.max_iters = *opt.max_iters;

  SolveTrace trace;
  Cochain0 x;
  std::size_t messages = 0;
  bool audit_ok = true;
  if (opt.distributed) {
    auto r = run_distributed(prog, cfg, s.initial_state);
    for (const auto& l : r.logs) messages += l.messages;
    audit_ok = audit_locality(sheaf.graph(), r.logs).ok();
    trace = std::move(r.trace);
    x = std::move(r.x);
  } else {
    auto r = admm_solve(prog, cfg, s.initial_state);
    trace = std::move(r.trace);
    x = std::move(r.x);
  }
  const std::string status = to_string(trace.status);
  out << "scenario: " << s.name << '\n';
  out << "solver: " << (opt.distributed ? "distributed" : "centralized") << '\n';
  out << "status: " << status << '\n';
  out << "iterations: " << trace.iterations() << '\n';
  if (!trace.records.empty()) {
    out << "primal_residual: " << format_real(trace.records.back().primal_residual) << '\n';
    out << "dual_residual: " << format_real(trace.records.back().dual_residual) << '\n';
  }
  const double objective = trace.records.empty() ? program_objective(prog, x) : trace.records.back().objective;
  out << "objective: " << format_real(objective) << '\n';
  print_blocks(out, "x", x);
  if (opt.distributed) {
    out << "messages: " << messages << '\n';
    out << "locality_audit: " << (audit_ok ? "ok" : "violation") << '\n';
  }
  if (!opt.out_prefix.empty()) {
    std::ostringstream csv, js;
    write_solve_csv(csv, trace);
    write_terminal_json(js, status, sheaf, x);
    if (!write_file(opt.out_prefix + ".csv", csv.str(), err) || !write_file(opt.out_prefix + ".json", js.str(), err))
      return kIoFailure;
  }
  return kOk;
}

/// Entry point. Exit codes: 0 completed (including MaxIters), 1 usage error,
/// 2 invalid scenario, 3 output I/O failure.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Cellular sheaves on graphs: cohomology, sheaf diffusion and distributed ADMM", "sheafcoord"};
  app.require_subcommand(1);

  std::string scenario_ref;
  std::optional<int> family_n;
  double null_tol = kDefaultNullTol;
  FlowOptions flow_opt;
  SolveOptions solve_opt;

  auto* coh = app.add_subcommand("cohomology", "Report dim H0, dim H1 and a global-section basis");
  coh->add_option("scenario", scenario_ref, "Scenario file or built-in name")->required();
  coh->add_option("--n", family_n, "Size parameter for built-in families (e.g. sign-cycle)");
  coh->add_option("--null-tol", null_tol, "Relative singular-value threshold")->check(CLI::PositiveNumber);

  auto* flow = app.add_subcommand("flow", "Run the linear or nonlinear sheaf heat flow");
  flow->add_option("scenario", scenario_ref, "Scenario file or built-in name")->required();
  flow->add_option("--n", family_n, "Size parameter for built-in families");
  flow->add_flag("--nonlinear", flow_opt.nonlinear, "Use the scenario's edge potentials");
  flow->add_option("--steps", flow_opt.steps, "Override max_steps")->check(CLI::PositiveNumber);
  flow->add_option("--out", flow_opt.out_prefix, "Write <prefix>.csv and <prefix>.json");

  auto* solve = app.add_subcommand("solve", "Solve the homological program with ADMM");
  solve->add_option("scenario", scenario_ref, "Scenario file or built-in name")->required();
  solve->add_option("--n", family_n, "Size parameter for built-in families");
  solve->add_flag("--distributed", solve_opt.distributed, "Run the message-passing simulator");
  solve->add_option("--rho", solve_opt.rho, "ADMM penalty")->check(CLI::PositiveNumber);
  solve->add_option("--max-iters", solve_opt.max_iters, "Iteration cap")->check(CLI::PositiveNumber);
  solve->add_option("--out", solve_opt.out_prefix, "Write <prefix>.csv and <prefix>.json");

  auto* scen = app.add_subcommand("scenarios", "Built-in scenarios");
  auto* scen_list = scen->add_subcommand("list", "List built-in scenarios");
  scen->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  }

  if (scen_list->parsed()) {
    for (const auto& [name, desc] : list_builtins()) out << name << "  " << desc << '\n';
    return kOk;
  }

  std::optional<Scenario> loaded;
  try {
    loaded = load_scenario(resolve_scenario(scenario_ref, family_n).string());
  } catch (const ScenarioError& e) {
    err << "invalid scenario: " << e.what() << '\n';
    return kInvalidScenario;
  } catch (const std::invalid_argument& e) {
    err << "invalid scenario: " << e.what() << '\n';
    return kInvalidScenario;
  }
  Scenario& s = *loaded;

  if (const char* seed = std::getenv("SHEAFCOORD_SEED"); seed && *seed) {
    std::uint64_t v = 0;
    const char* end = seed + std::char_traits<char>::length(seed);
    auto [ptr, ec] = std::from_chars(seed, end, v);
    if (ec != std::errc{} || ptr != end) {
      err << "usage error: SHEAFCOORD_SEED must be a non-negative integer\n";
      return kUsage;
    }
    s.solver.seed = v;
  }

  try {
    if (coh->parsed()) return cmd_cohomology(s, null_tol, out);
    if (flow->parsed()) return cmd_flow(s, flow_opt, out, err);
    if (solve->parsed()) return cmd_solve(s, solve_opt, out, err);
  } catch (const NonSmoothError& e) {
    err << "invalid scenario: " << e.what() << '\n';
    return kInvalidScenario;
  }
  return kUsage;
}

}  // namespace sheafcoord::cli
