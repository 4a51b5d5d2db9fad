// Serial reference against the OpenMP kernels. Run with
// OMP_NUM_THREADS set to compare thread counts.
#include <benchmark/benchmark.h>

#include <map>
#include <random>

#include "foldlab/geometry.hpp"
#include "foldlab/kernels.hpp"
#include "foldlab/sphere.hpp"

using namespace foldlab;

namespace {

const geometry::Mesh& disk_mesh(double h) {
  static std::map<double, geometry::Mesh> cache;
  auto it = cache.find(h);
  if (it == cache.end()) it = cache.emplace(h, geometry::generate_mesh(geometry::parse_domain("disk:1"), h)).first;
  return it->second;
}

std::vector<double> random_values(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

void BM_AssembleSerial(benchmark::State& state) {
  const auto& mesh = disk_mesh(1.0 / state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::assemble_p1_serial(mesh));
  state.counters["triangles"] = mesh.num_triangles();
}

void BM_AssembleParallel(benchmark::State& state) {
  const auto& mesh = disk_mesh(1.0 / state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::assemble_p1_parallel(mesh));
  state.counters["triangles"] = mesh.num_triangles();
  state.counters["threads"] = kernels::max_threads();
}

void BM_WeightedSumSerial(benchmark::State& state) {
  const auto v = random_values(state.range(0), 1), w = random_values(state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::weighted_sum_serial(v.data(), w.data(), v.size()));
}

void BM_WeightedSumParallel(benchmark::State& state) {
  const auto v = random_values(state.range(0), 1), w = random_values(state.range(0), 2);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::weighted_sum_parallel(v.data(), w.data(), v.size()));
}

// Mass matrix of the sphere Galerkin solver: harmonics of degree <= L on its grid.
struct GramInput {
  Eigen::MatrixXd y;
  Eigen::VectorXd w;
};

GramInput gram_input(int L) {
  const auto grid = sphere::galerkin_grid(L);
  GramInput g{sphere::real_sh_matrix(L, grid.nodes), Eigen::Map<const Eigen::VectorXd>(grid.weights.data(), grid.weights.size())};
  return g;
}

void BM_GramSerial(benchmark::State& state) {
  const auto g = gram_input(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::weighted_gram_serial(g.y, g.w));
}

void BM_GramParallel(benchmark::State& state) {
  const auto g = gram_input(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::weighted_gram_parallel(g.y, g.w));
}

}  // namespace

BENCHMARK(BM_AssembleSerial)->Arg(20)->Arg(40)->Arg(80)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssembleParallel)->Arg(20)->Arg(40)->Arg(80)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WeightedSumSerial)->Arg(1 << 12)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_WeightedSumParallel)->Arg(1 << 12)->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(BM_GramSerial)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramParallel)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
