#include <benchmark/benchmark.h>

#include "mpgame/engine.hpp"
#include "mpgame/ev_scenario.hpp"
#include "mpgame/mappings.hpp"

namespace {

using namespace mpgame;

const GameConfig& desk_game() {
  static const GameConfig game = to_canonical(build_default());
  return game;
}

void BM_Knapsack(benchmark::State& state) {
  const auto& agent = desk_game().populations[0].agents[0];
  const Vector v = Vector::LinSpaced(14, -0.02, 0.03);
  Vector out(14);
  const Vector lin = agent.lin + v;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        solve_knapsack_into(agent.quad, lin, agent.lower, agent.upper, agent.budget, out));
  }
}
BENCHMARK(BM_Knapsack);

void BM_ApplyTLocal(benchmark::State& state) {
  const OperatorContext ctx(desk_game());
  const IncentiveState y(Vector::Constant(14, 0.05), Vector::LinSpaced(14, 0.0, 0.5));
  for (auto _ : state) benchmark::DoNotOptimize(apply_T_local(y, 0, ctx));
}
BENCHMARK(BM_ApplyTLocal);

void BM_Algorithm1Iterations(benchmark::State& state) {
  const auto& game = desk_game();
  const OperatorContext ctx(game);
  const auto seq = GraphSequence::path(game.num_populations());
  RunSettings s;
  s.max_iterations = static_cast<std::size_t>(state.range(0));
  s.record_every = s.max_iterations;
  const auto init = default_initial_states(game, game.num_populations(), s);
  for (auto _ : state) benchmark::DoNotOptimize(run_algorithm1(ctx, seq, init, s));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Algorithm1Iterations)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
