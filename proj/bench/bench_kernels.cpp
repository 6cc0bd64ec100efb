// OpenMP kernels against their serial references.

#include <benchmark/benchmark.h>

#include "dpo/costs.hpp"
#include "dpo/diffusion.hpp"
#include "dpo/linalg.hpp"
#include "dpo/network.hpp"
#include "dpo/rng.hpp"

namespace {

dpo::DenseMatrix random_matrix(std::size_t n, std::uint64_t seed) {
  dpo::NormalStream normal(seed);
  dpo::DenseMatrix a(n, n);
  for (double& x : a.entries()) x = normal();
  return a;
}

struct Network {
  dpo::CostEnsemble ensemble;
  dpo::DiffusionConfig config;
  dpo::NetworkState state;
};

Network make_network(std::size_t n) {
  const auto topo = dpo::generate_topology(n, 4.0, 11);
  auto ensemble = dpo::sample_ensemble(n, 4, 6, 12);
  const auto a = dpo::build_A(topo, dpo::WeightRule::metropolis);
  auto c = dpo::build_C(topo, dpo::WeightRule::averaging);
  auto config =
      dpo::make_config(dpo::preset_atc(a), c, dpo::DenseVector(n, 1e-3));
  return {std::move(ensemble), std::move(config), dpo::initial_state(n, 4)};
}

void BM_MatMulSerial(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, 1);
  const auto b = random_matrix(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(dpo::serial::mat_mul(a, b));
}

void BM_MatMulParallel(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, 1);
  const auto b = random_matrix(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(dpo::mat_mul(a, b));
}

void BM_StepSerial(benchmark::State& state) {
  auto net = make_network(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(dpo::serial::step(net.state, net.config, net.ensemble));
}

void BM_StepParallel(benchmark::State& state) {
  auto net = make_network(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(dpo::step(net.state, net.config, net.ensemble));
}

}  // namespace

BENCHMARK(BM_MatMulSerial)->Arg(50)->Arg(200)->Arg(400);
BENCHMARK(BM_MatMulParallel)->Arg(50)->Arg(200)->Arg(400);
BENCHMARK(BM_StepSerial)->Arg(50)->Arg(500)->Arg(2000);
BENCHMARK(BM_StepParallel)->Arg(50)->Arg(500)->Arg(2000);

BENCHMARK_MAIN();
