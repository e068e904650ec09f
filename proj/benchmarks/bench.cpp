#include <benchmark/benchmark.h>

#include "mimic/attack.hpp"
#include "mimic/dataset.hpp"
#include "mimic/rng.hpp"
#include "mimic/train.hpp"

using namespace mimic;

namespace {

Tensor random_tensor(std::vector<int> shape, std::uint64_t seed) {
    Rng rng(seed);
    Tensor t(std::move(shape));
    for (double& v : t.data) v = rng.uniform(-1.0, 1.0);
    return t;
}

void BM_Conv2dForward(benchmark::State& state) {
    const Tensor in = random_tensor({32, 32, 8}, 1);
    const Tensor k = random_tensor({3, 3, 8, 16}, 2);
    for (auto _ : state) {
        Tape tape;
        benchmark::DoNotOptimize(tape.value(tape.conv2d(tape.leaf(in), tape.leaf(k), -1, 2, 1)));
    }
}
BENCHMARK(BM_Conv2dForward);

void BM_ExtractorForward(benchmark::State& state) {
    const PlainCnnExtractor net(InputRange::unit, 32, 64, 101);
    const Tensor img = random_tensor({32, 32, 3}, 3);
    for (auto _ : state) benchmark::DoNotOptimize(net.extract_eval(img));
}
BENCHMARK(BM_ExtractorForward);

void BM_AttackIteration(benchmark::State& state) {
    // One forward+backward+Adam step, measured via a one-iteration attack.
    const PlainCnnExtractor net(InputRange::unit, 32, 64, 101);
    const auto sample = synth_dataset(1, 500, 32)[0];
    AttackConfig cfg;
    cfg.max_iter = 1;
    for (auto _ : state)
        benchmark::DoNotOptimize(run_attack(net, sample.image, std::nullopt, cfg));
}
BENCHMARK(BM_AttackIteration);

void BM_InvertibleRoundTrip(benchmark::State& state) {
    const InvertibleExtractor net(105);
    const Tensor x = to_byte_tensor(synth_dataset(1, 7, 16)[0].image);
    for (auto _ : state) benchmark::DoNotOptimize(net.invert(net.extract_eval(x)));
}
BENCHMARK(BM_InvertibleRoundTrip);

} // namespace

BENCHMARK_MAIN();
