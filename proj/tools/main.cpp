// mpgame: command-line front end for the multi-population GNE solver.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mpgame/analysis.hpp"
#include "mpgame/config_io.hpp"
#include "mpgame/engine.hpp"
#include "mpgame/ev_scenario.hpp"
#include "mpgame/mappings.hpp"
#include "mpgame/network.hpp"
#include "mpgame/validation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConverged = 0;
constexpr int kExitError = 1;
constexpr int kExitMaxIterations = 2;

struct GlobalOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::string scenario;
  bool paper_scale = false;
  std::string graph_kind;
  std::string graph_file;
  bool allow_invalid_graph = false;
  std::optional<std::size_t> max_iterations;
  std::optional<std::size_t> record_every;
  bool parallel = false;
  std::size_t threads = 0;
};

mpgame::ConfigDocument resolve_document(const GlobalOptions& g) {
  mpgame::ConfigDocument doc;
  if (!g.config_path.empty()) {
    doc = mpgame::load_config(g.config_path);
    if ((g.paper_scale || g.seed) && doc.scenario) {
      mpgame::EvScenarioParams params = *doc.scenario;
      if (g.paper_scale) params.agents_per_population = mpgame::kPaperAgentsPerPopulation;
      if (g.seed) params.seed = *g.seed;
      const mpgame::RunSettings run = doc.run;
      const mpgame::GraphSpec graph = doc.graph;
      doc = mpgame::scenario_document(params);
      doc.run = run;
      doc.graph = graph;
    } else if (g.paper_scale) {
      throw std::invalid_argument("--paper-scale needs a scenario document");
    }
  } else {
    if (!g.scenario.empty() && g.scenario != "ev-default") {
      throw std::invalid_argument("unknown scenario '" + g.scenario + "'");
    }
    mpgame::EvScenarioParams params = mpgame::build_default(g.paper_scale);
    if (g.seed) params.seed = *g.seed;
    doc = mpgame::scenario_document(params);
  }
  if (g.seed) doc.run.seed = *g.seed;
  if (g.max_iterations) doc.run.max_iterations = *g.max_iterations;
  if (g.record_every) doc.run.record_every = *g.record_every;
  if (g.parallel) doc.run.parallel = true;
  if (g.threads) doc.run.threads = g.threads;
  if (!g.graph_file.empty()) {
    doc.graph.kind = "file";
    doc.graph.file = g.graph_file;
  } else if (!g.graph_kind.empty()) {
    doc.graph.kind = g.graph_kind;
  }
  if (g.allow_invalid_graph) doc.graph.allow_invalid = true;
  doc.run.validate();
  return doc;
}

fs::path prepare_out(const GlobalOptions& g) {
  fs::path out(g.out_dir);
  fs::create_directories(out);
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text << '\n';
}

void write_trace(const fs::path& path, const mpgame::IterationTrace& trace) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  mpgame::write_trace_csv(trace, f);
}

int exit_code(const mpgame::RunResult& result) {
  return result.termination == mpgame::Termination::kConverged ? kExitConverged
                                                               : kExitMaxIterations;
}

void print_summary(const char* label, const mpgame::RunResult& result) {
  std::cout << label << ": " << mpgame::to_string(result.termination) << " after "
            << result.iterations << " iterations";
  if (!result.trace.empty()) {
    const auto& r = result.trace.back();
    std::cout << std::setprecision(3) << " (consensus " << r.consensus_residual
              << ", fixed point " << r.fixed_point_residual << ", violation "
              << r.constraint_violation << ")";
  }
  std::cout << '\n';
}

int cmd_run(const GlobalOptions& g) {
  const auto doc = resolve_document(g);
  const auto out = prepare_out(g);
  write_file(out / "config.json", mpgame::document_to_json(doc));
  const mpgame::OperatorContext context(doc.game);
  const auto seq = mpgame::make_graph(doc.graph, doc.game.num_populations());
  const auto result = mpgame::run_algorithm1(
      context, seq,
      mpgame::default_initial_states(doc.game, doc.game.num_populations(), doc.run),
      doc.run);
  write_trace(out / "trace.csv", result.trace);
  write_file(out / "result.json", mpgame::result_to_json(result, doc.game));
  print_summary("run", result);
  return exit_code(result);
}

int cmd_oracle(const GlobalOptions& g) {
  const auto doc = resolve_document(g);
  const auto out = prepare_out(g);
  write_file(out / "config.json", mpgame::document_to_json(doc));
  const mpgame::OperatorContext context(doc.game);
  const auto init = mpgame::average_state(
      mpgame::default_initial_states(doc.game, doc.game.num_populations(), doc.run));
  const auto result = mpgame::run_oracle(context, init, doc.run);
  write_trace(out / "trace.csv", result.trace);
  write_file(out / "result.json", mpgame::result_to_json(result, doc.game));
  print_summary("oracle", result);
  return exit_code(result);
}

int cmd_compare(const GlobalOptions& g) {
  const auto doc = resolve_document(g);
  const auto out = prepare_out(g);
  write_file(out / "config.json", mpgame::document_to_json(doc));
  const auto seq = mpgame::make_graph(doc.graph, doc.game.num_populations());
  const auto report = mpgame::compare_with_oracle(doc.game, seq, doc.run);
  write_trace(out / "trace.csv", report.algorithm.trace);
  write_file(out / "result.json", mpgame::result_to_json(report.algorithm, doc.game));
  {
    std::ofstream f(out / "gap.csv");
    f << "k,gap\n" << std::setprecision(17);
    for (const auto& p : report.gaps) f << p.k << ',' << p.gap << '\n';
  }
  json summary{{"terminal_gap", report.terminal_gap},
               {"lockstep_terminal_gap", report.lockstep_terminal_gap},
               {"algorithm_iterations", report.algorithm.iterations},
               {"reference_iterations", report.reference.iterations},
               {"reference_termination", mpgame::to_string(report.reference.termination)}};
  write_file(out / "compare.json", summary.dump(2));
  print_summary("algorithm", report.algorithm);
  std::cout << "terminal gap to reference fixed point: " << report.terminal_gap
            << "\nlockstep gap to oracle: " << report.lockstep_terminal_gap << '\n';
  return exit_code(report.algorithm);
}

int cmd_ablate(const GlobalOptions& g) {
  const auto doc = resolve_document(g);
  const auto out = prepare_out(g);
  write_file(out / "config.json", mpgame::document_to_json(doc));
  const auto seq = mpgame::make_graph(doc.graph, doc.game.num_populations());
  const auto report = mpgame::ablation_no_coupling(doc.game, seq, doc.run);
  write_trace(out / "trace.csv", report.constrained.trace);
  write_trace(out / "trace_uncoupled.csv", report.unconstrained.trace);
  write_file(out / "result.json", mpgame::result_to_json(report.constrained, doc.game));
  write_file(out / "result_uncoupled.json",
             mpgame::result_to_json(report.unconstrained, doc.game));
  const mpgame::Vector with = mpgame::profile_aggregate(doc.game, report.constrained.final_strategies);
  const mpgame::Vector without =
      mpgame::profile_aggregate(doc.game, report.unconstrained.final_strategies);
  std::ofstream f(out / "ablation.csv");
  f << "slot,cap,load_coupled,load_uncoupled,violation_coupled,violation_uncoupled\n"
    << std::setprecision(17);
  for (Eigen::Index t = 0; t < with.size(); ++t) {
    f << t + 1 << ',' << doc.game.coupling_upper(t) << ',' << with(t) << ',' << without(t)
      << ',' << report.constrained_violation(t) << ',' << report.unconstrained_violation(t)
      << '\n';
  }
  print_summary("coupled", report.constrained);
  print_summary("uncoupled", report.unconstrained);
  std::cout << "max slot violation: coupled " << report.constrained_violation.maxCoeff()
            << ", uncoupled " << report.unconstrained_violation.maxCoeff() << '\n';
  return exit_code(report.constrained);
}

int cmd_epsilon(const GlobalOptions& g, std::size_t sample, std::optional<double> lipschitz) {
  const auto doc = resolve_document(g);
  const auto out = prepare_out(g);
  write_file(out / "config.json", mpgame::document_to_json(doc));
  const mpgame::OperatorContext context(doc.game);
  const auto seq = mpgame::make_graph(doc.graph, doc.game.num_populations());
  const auto result = mpgame::run_algorithm1(
      context, seq,
      mpgame::default_initial_states(doc.game, doc.game.num_populations(), doc.run),
      doc.run);
  mpgame::EpsilonOptions options;
  options.sample = sample;
  options.seed = doc.run.seed;
  options.lipschitz = lipschitz;
  const auto report = mpgame::epsilon_nash_check(result, doc.game, options);
  write_trace(out / "trace.csv", result.trace);
  write_file(out / "result.json", mpgame::result_to_json(result, doc.game));
  std::ofstream f(out / "epsilon.csv");
  f << "population,agent,equilibrium_cost,deviation_cost,raw_gain,gain,deviation_distance\n"
    << std::setprecision(17);
  for (const auto& d : report.gains) {
    f << d.id.population << ',' << d.id.agent << ',' << d.equilibrium_cost << ','
      << d.deviation_cost << ',' << d.raw_gain << ',' << d.gain << ','
      << d.deviation_distance << '\n';
  }
  print_summary("run", result);
  std::cout << "max epsilon " << report.max_epsilon << " over " << report.gains.size()
            << " agents (" << report.distinct_problems << " distinct problems)\n";
  if (report.theoretical_bound) {
    std::cout << "theoretical bound " << *report.theoretical_bound << '\n';
  } else {
    std::cout << "theoretical bound unavailable (pass --lipschitz)\n";
  }
  return exit_code(result);
}

int cmd_sweep(const GlobalOptions& g, const std::vector<std::size_t>& sizes,
              std::size_t sample) {
  const auto doc = resolve_document(g);
  const auto out = prepare_out(g);
  write_file(out / "config.json", mpgame::document_to_json(doc));
  const auto seq = mpgame::make_graph(doc.graph, doc.game.num_populations());
  mpgame::EpsilonOptions options;
  options.sample = sample;
  options.seed = doc.run.seed;
  const auto rows = mpgame::sweep_population(doc.game, seq, sizes, doc.run, options);
  std::ofstream f(out / "sweep.csv");
  f << "N,max_epsilon,max_deviation_distance,iterations,termination,final_consensus,"
       "final_fixed_point\n"
    << std::setprecision(17);
  int code = kExitConverged;
  for (const auto& r : rows) {
    f << r.total_agents << ',' << r.max_epsilon << ',' << r.max_deviation_distance << ','
      << r.iterations << ',' << mpgame::to_string(r.termination) << ','
      << r.final_consensus << ',' << r.final_fixed_point << '\n';
    std::cout << "N=" << r.total_agents << " epsilon " << r.max_epsilon << " ("
              << mpgame::to_string(r.termination) << ", " << r.iterations << " iterations)\n";
    if (r.termination != mpgame::Termination::kConverged) code = kExitMaxIterations;
  }
  return code;
}

int cmd_validate(const GlobalOptions& g, std::size_t horizon, double mu, std::size_t window) {
  const auto doc = resolve_document(g);
  const auto game_report = mpgame::validate_game(doc.game);
  std::cout << "game:\n" << game_report.summary();
  mpgame::GraphSpec spec = doc.graph;
  spec.allow_invalid = true;  // report instead of throwing on load
  const auto seq = mpgame::make_graph(spec, doc.game.num_populations());
  const auto graph_report = mpgame::validate_sequence(seq, horizon, mu, window);
  std::cout << "graph " << seq.describe() << ":\n" << graph_report.summary();
  const mpgame::OperatorContext context(doc.game);
  std::cout << "resolvent norms: max column sum " << context.resolvent_column_norm()
            << ", max row sum " << context.resolvent_row_norm() << '\n';
  return game_report.ok() && graph_report.ok() ? kExitConverged : kExitError;
}

int cmd_probe_eta(const GlobalOptions& g, std::size_t pairs, double eta_max) {
  const auto doc = resolve_document(g);
  mpgame::ProbeOptions options;
  options.pairs = pairs;
  options.seed = doc.run.seed;
  const auto result = mpgame::probe_eta(doc.game, options, 1e-4, eta_max);
  const mpgame::OperatorContext context(doc.game);
  const auto at_config = mpgame::probe_nonexpansive(context, options);
  std::cout << "largest eta passing the probe: " << result.eta << " (worst ratio "
            << result.at_eta.worst_ratio << ")\nconfigured eta " << doc.game.eta << ": "
            << at_config.violations << " violations in " << at_config.pairs
            << " pairs, worst ratio " << at_config.worst_ratio << '\n';
  return kExitConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-population aggregative game GNE solver"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config_path, "Game/run configuration JSON")->check(CLI::ExistingFile);
  app.add_option("--out", g.out_dir, "Output directory")->capture_default_str();
  app.add_option("--seed", g.seed, "Seed for budgets, initial states and sampling");
  app.add_option("--scenario", g.scenario, "Built-in scenario (ev-default)")
      ->check(CLI::IsMember({"ev-default"}));
  app.add_flag("--paper-scale", g.paper_scale, "1000 agents per population");
  app.add_option("--graph", g.graph_kind, "Graph kind")
      ->check(CLI::IsMember({"path", "complete", "ring", "random", "static", "file"}));
  app.add_option("--graph-file", g.graph_file, "Custom graph sequence JSON")
      ->check(CLI::ExistingFile);
  app.add_flag("--allow-invalid-graph", g.allow_invalid_graph,
               "Skip the weight-matrix checks on custom graphs");
  app.add_option("--max-iterations", g.max_iterations, "Iteration cap");
  app.add_option("--record-every", g.record_every, "Diagnostics stride");
  app.add_flag("--parallel", g.parallel, "Evaluate populations on worker threads");
  app.add_option("--threads", g.threads, "Worker count (0 = hardware)");

  auto* run = app.add_subcommand("run", "Consensus + KM iteration");
  auto* oracle = app.add_subcommand("oracle", "Centralized KM iteration");
  auto* compare = app.add_subcommand("compare", "Algorithm vs centralized oracle");
  auto* ablate = app.add_subcommand("ablate", "Run with and without the coupling price");

  auto* epsilon = app.add_subcommand("epsilon", "Unilateral-deviation check");
  std::size_t sample = 100;
  std::optional<double> lipschitz;
  epsilon->add_option("--sample", sample, "Agents to check")->capture_default_str();
  epsilon->add_option("--lipschitz", lipschitz, "Lipschitz constant for the bound");

  auto* sweep = app.add_subcommand("sweep-n", "Epsilon vs population size");
  std::vector<std::size_t> sizes{100, 200, 400};
  sweep->add_option("--sizes", sizes, "Total agent counts")->delimiter(',')->capture_default_str();
  sweep->add_option("--sample", sample, "Agents to check per size")->capture_default_str();

  auto* validate = app.add_subcommand("validate", "Check game and graph assumptions");
  std::size_t horizon = 1000;
  double mu = mpgame::kDefaultMu;
  std::size_t window = 0;
  validate->add_option("--horizon", horizon, "Graph steps to check")->capture_default_str();
  validate->add_option("--mu", mu, "Weight lower bound")->capture_default_str();
  validate->add_option("--window", window, "Connectivity window (0 = L)")->capture_default_str();

  auto* probe = app.add_subcommand("probe-eta", "Largest eta passing the non-expansiveness probe");
  std::size_t pairs = 1000;
  double eta_max = 10.0;
  probe->add_option("--pairs", pairs, "Sampled pairs per eta")->capture_default_str();
  probe->add_option("--eta-max", eta_max, "Upper end of the search")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitError;
  }

  try {
    if (*run) return cmd_run(g);
    if (*oracle) return cmd_oracle(g);
    if (*compare) return cmd_compare(g);
    if (*ablate) return cmd_ablate(g);
    if (*epsilon) return cmd_epsilon(g, sample, lipschitz);
    if (*sweep) return cmd_sweep(g, sizes, sample);
    if (*validate) return cmd_validate(g, horizon, mu, window);
    if (*probe) return cmd_probe_eta(g, pairs, eta_max);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
