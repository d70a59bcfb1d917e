#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>

#include "opasis/cascade.hpp"
#include "opasis/dc_power.hpp"
#include "opasis/grid.hpp"
#include "opasis/oracle.hpp"
#include "opasis/sampling.hpp"

namespace {

using namespace opasis;

const Network& ieee300() {
    static const Network net =
        with_derived_flow_limits(load_case(std::filesystem::path(OPASIS_DATA_DIR) / "case300.m"), 1.5, 20.0);
    return net;
}

const Network& mesh6() {
    static const Network net = load_case(std::filesystem::path(OPASIS_FIXTURE_DIR) / "mesh6.json");
    return net;
}

// Random states with `trips` branches out, fixed seed.
std::vector<SystemState> random_states(const Network& net, std::size_t trips, std::size_t count) {
    std::mt19937_64 gen(17);
    std::uniform_int_distribution<std::size_t> pick(0, net.branch_count() - 1);
    std::vector<SystemState> out;
    for (std::size_t i = 0; i < count; ++i) {
        SystemState s = SystemState::intact(net);
        for (std::size_t t = 0; t < trips; ++t) s.status[pick(gen)] = ComponentStatus::Tripped;
        out.push_back(std::move(s));
    }
    return out;
}

void BM_Dispatch300(benchmark::State& state) {
    const Network& net = ieee300();
    auto states = random_states(net, static_cast<std::size_t>(state.range(0)), 64);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(dispatch(net, states[i++ % states.size()]));
    }
}
BENCHMARK(BM_Dispatch300)->Arg(0)->Arg(5)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_DcFlow300(benchmark::State& state) {
    const Network& net = ieee300();
    const SystemState intact = SystemState::intact(net);
    std::vector<double> injections(net.bus_count(), 0.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dc_flow(net, intact, injections));
    }
}
BENCHMARK(BM_DcFlow300)->Unit(benchmark::kMicrosecond);

void BM_Sample300(benchmark::State& state) {
    const Network& net = ieee300();
    const OutageModel model{1e-4, 0.05, 1e-5, 1.0};
    CascadeSampler sampler(net, model, SisConfig{static_cast<double>(state.range(0)), 0.999, 200});
    std::uint64_t index = 0;
    for (auto _ : state) {
        Philox4x32 rng = path_stream(2024, index++);
        benchmark::DoNotOptimize(sampler.sample(rng, PathDetail::Summary));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(index));
}
BENCHMARK(BM_Sample300)->Arg(1)->Arg(2)->Unit(benchmark::kMicrosecond);

void BM_SampleFixture(benchmark::State& state) {
    const OutageModel model{0.02, 0.2, 0.01, 1.0};
    CascadeSampler sampler(mesh6(), model, SisConfig{2.0, 0.999, 200});
    std::uint64_t index = 0;
    for (auto _ : state) {
        Philox4x32 rng = path_stream(7, index++);
        benchmark::DoNotOptimize(sampler.sample(rng, PathDetail::Summary));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(index));
}
BENCHMARK(BM_SampleFixture);

void BM_EnumerateFixture(benchmark::State& state) {
    const OutageModel model{0.02, 0.2, 0.01, 1.0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(enumerate(mesh6(), model, SisConfig{2.0, 0.999, 200}));
    }
}
BENCHMARK(BM_EnumerateFixture)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
