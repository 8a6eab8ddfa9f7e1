#include <benchmark/benchmark.h>

#include "zstyle/attention.hpp"
#include "zstyle/pipeline.hpp"
#include "zstyle/rng.hpp"
#include "zstyle/textures.hpp"
#include "zstyle/toy_denoiser.hpp"

using namespace zstyle;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    Rng rng(seed);
    Tensor m({r, c});
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.next_gaussian();
    return m;
}

}  // namespace

static void BM_Attend(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    Tensor q = random_matrix(n, 32, 1), k = random_matrix(n, 32, 2), v = random_matrix(n, 32, 3);
    for (auto _ : state) benchmark::DoNotOptimize(attend(q, k, v));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Attend)->RangeMultiplier(2)->Range(16, 256)->Complexity();

static void BM_ReweightedAttention(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    Tensor q = random_matrix(n, 32, 1), kc = random_matrix(n, 32, 2), vc = random_matrix(n, 32, 3);
    Tensor ks = random_matrix(n, 32, 4), vs = random_matrix(n, 32, 5);
    for (auto _ : state) benchmark::DoNotOptimize(reweighted_attention(q, kc, vc, ks, vs, 1.2));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ReweightedAttention)->RangeMultiplier(2)->Range(16, 256)->Complexity();

static void BM_ToyForward(benchmark::State& state) {
    ToyDenoiserConfig cfg;
    ToyDenoiser model = ToyDenoiser::init(cfg, 7);
    Tensor x = make_texture(TextureKind::Stripes, 16, 3);
    for (auto _ : state) benchmark::DoNotOptimize(model.forward(x, 5));
}
BENCHMARK(BM_ToyForward);

static void BM_DdimInvert(benchmark::State& state) {
    NoiseSchedule s = make_schedule(static_cast<int>(state.range(0)), ScheduleKind::LinearAlpha, 0.01);
    Rng rng(11);
    Tensor mu({16, 16, 1});
    for (std::size_t i = 0; i < mu.size(); ++i) mu[i] = rng.next_gaussian() * 0.3;
    Denoiser d = analytic_gaussian_denoiser(mu, 0.5, s);
    Tensor x0 = make_texture(TextureKind::Dots, 16, 9);
    for (auto _ : state) benchmark::DoNotOptimize(ddim_invert(x0, d, s));
}
BENCHMARK(BM_DdimInvert)->Arg(10)->Arg(30);

static void BM_Stylize(benchmark::State& state) {
    ToyDenoiserConfig cfg;
    cfg.steps = 12;
    ToyDenoiser model = ToyDenoiser::init(cfg, 7);
    NoiseSchedule s = make_schedule(12, ScheduleKind::LinearAlpha, 0.01);
    auto data = make_texture_dataset({TextureKind::Stripes, TextureKind::Dots}, 4, 16, 3);
    train(model, data, s, 40, 0.005, 5);
    Tensor content = make_texture(TextureKind::Stripes, 16, 1);
    Tensor style = make_texture(TextureKind::Dots, 16, 2);
    InjectionConfig inj;
    inj.window_start = 2;
    inj.window_end = 12;
    for (auto _ : state) benchmark::DoNotOptimize(stylize(content, {style}, model, s, inj));
}
BENCHMARK(BM_Stylize);

BENCHMARK_MAIN();
