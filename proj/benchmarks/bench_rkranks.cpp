#include <benchmark/benchmark.h>

#include <cstdint>

#include "rkranks/rkranks.hpp"

namespace {

using rkranks::NormProfile;
using rkranks::Role;

struct Fixture {
    rkranks::VectorSet users;
    rkranks::VectorSet items;
    rkranks::RankTableIndex index;
};

Fixture make_fixture(std::size_t n, std::size_t m, std::size_t dim) {
    auto users = rkranks::generate_synthetic(n, dim, 11, NormProfile::gaussian, Role::users);
    auto items = rkranks::generate_synthetic(m, dim, 12, NormProfile::gaussian, Role::items);
    rkranks::BuildParams p;
    p.tau = 100;
    p.omega = 10;
    p.samples = 50;
    auto index = rkranks::build_index(users, items, p, 1);
    return {std::move(users), std::move(items), std::move(index)};
}

void BM_Query(benchmark::State& state) {
    const auto f = make_fixture(static_cast<std::size_t>(state.range(0)), 10000, 32);
    std::size_t row = 0;
    for (auto _ : state) {
        auto r = rkranks::query(f.index, f.users, f.items.row(row++ % f.items.size()), 50, 2.0);
        benchmark::DoNotOptimize(r.entries.data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Query)->RangeMultiplier(2)->Range(500, 8000)->Unit(benchmark::kMicrosecond)->Complexity(benchmark::oN);

void BM_Build(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto users = rkranks::generate_synthetic(n, 32, 21, NormProfile::gaussian, Role::users);
    const auto items = rkranks::generate_synthetic(10000, 32, 22, NormProfile::gaussian, Role::items);
    rkranks::BuildParams p;
    p.tau = 100;
    p.omega = 10;
    p.samples = 50;
    for (auto _ : state) {
        auto idx = rkranks::build_index(users, items, p, 1);
        benchmark::DoNotOptimize(idx.cells.data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Build)->RangeMultiplier(2)->Range(500, 4000)->Unit(benchmark::kMillisecond)->Complexity(benchmark::oN);

void BM_ExactReverseKRanks(benchmark::State& state) {
    const auto f = make_fixture(static_cast<std::size_t>(state.range(0)), 2000, 32);
    std::size_t row = 0;
    for (auto _ : state) {
        auto r = rkranks::exact_reverse_k_ranks(f.items.row(row++ % f.items.size()), 50, f.users, f.items);
        benchmark::DoNotOptimize(r.entries.data());
    }
}
BENCHMARK(BM_ExactReverseKRanks)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
