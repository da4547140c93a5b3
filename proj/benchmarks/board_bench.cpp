#include <benchmark/benchmark.h>

#include "fixtures.hpp"
#include "preprod/board_store.hpp"

using namespace fixtures;

namespace {

BoardStore filled(int n) {
    BoardStore store;
    std::optional<std::string> parent;
    for (int i = 0; i < n; ++i) {
        const auto& b = store.create_block(Stage::Ideation, ArtifactKind::StoryConcept, i % 3 ? parent : std::nullopt,
                                           valid_elements(ArtifactKind::StoryConcept, 3), "task", i);
        parent = b.block_id;
    }
    return store;
}

void BM_CreateBlock(benchmark::State& state) {
    const auto elements = valid_elements(ArtifactKind::StoryConcept, 3);
    for (auto _ : state) {
        state.PauseTiming();
        auto store = filled(static_cast<int>(state.range(0)));
        state.ResumeTiming();
        benchmark::DoNotOptimize(store.create_block(Stage::Ideation, ArtifactKind::StoryConcept, std::nullopt, elements, "t", 0));
    }
}
BENCHMARK(BM_CreateBlock)->Arg(10)->Arg(100)->Arg(500);

void BM_AddVersion(benchmark::State& state) {
    auto store = filled(static_cast<int>(state.range(0)));
    const auto id = store.board(Stage::Ideation).blocks.begin()->first;
    const auto elements = valid_elements(ArtifactKind::StoryConcept, 2);
    for (auto _ : state) benchmark::DoNotOptimize(store.add_version(id, elements, "t", 0));
}
BENCHMARK(BM_AddVersion)->Arg(10)->Arg(100);

void BM_BoardJsonRoundTrip(benchmark::State& state) {
    const auto store = filled(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        auto copy = json(store).get<BoardStore>();
        benchmark::DoNotOptimize(copy);
    }
}
BENCHMARK(BM_BoardJsonRoundTrip)->Arg(10)->Arg(100);

void BM_CheckInvariants(benchmark::State& state) {
    const auto store = filled(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(store.check_invariants());
}
BENCHMARK(BM_CheckInvariants)->Arg(100)->Arg(500);

} // namespace
