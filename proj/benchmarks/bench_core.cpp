#include <benchmark/benchmark.h>

#include "gfm/hinf_norm.hpp"
#include "gfm/hinf_synthesis.hpp"
#include "gfm/linear_analysis.hpp"
#include "gfm/time_sim.hpp"

using namespace gfm;

namespace {

StateSpaceModel proposed_loop()
{
    const PlantParams prm = PlantParams::table1();
    const Equilibrium eq = find_equilibrium(prm, Setpoints{}, Disturbance{});
    return close_loop(linearize(eq.x, eq.u, Disturbance{}, prm), GainSet::table2_proposed(), prm);
}

void BM_FrequencyResponse(benchmark::State& state)
{
    const StateSpaceModel ss = proposed_loop();
    const std::vector<double> grid = log_grid(1e-1, 1e6, static_cast<int>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(frequency_response(ss, "inj.e1", "omega_u", grid));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FrequencyResponse)->Arg(400)->Arg(4000);

void BM_HinfNorm(benchmark::State& state)
{
    const StateSpaceModel ss = generalized_closed_loop(GainSet::table2_proposed(),
                                                       SynthesisProblem::table1(ControllerKind::proposed));
    const auto method = state.range(0) == 0 ? HinfMethod::grid : HinfMethod::bisection;
    for (auto _ : state)
        benchmark::DoNotOptimize(hinf_norm(ss, method));
}
BENCHMARK(BM_HinfNorm)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_WeightedObjective(benchmark::State& state)
{
    const SynthesisProblem prob = SynthesisProblem::table1(ControllerKind::proposed);
    for (auto _ : state)
        benchmark::DoNotOptimize(weighted_objective(GainSet::table2_proposed(), prob));
}
BENCHMARK(BM_WeightedObjective)->Unit(benchmark::kMillisecond);

void BM_PrefStepScenario(benchmark::State& state)
{
    const PlantParams prm = PlantParams::table1();
    const Scenario sc = pref_step_scenario(0.5, 1.0, 1.0);
    for (auto _ : state)
        benchmark::DoNotOptimize(integrate(prm, GainSet::table2_proposed(), sc));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(sc.steps()));
}
BENCHMARK(BM_PrefStepScenario)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
