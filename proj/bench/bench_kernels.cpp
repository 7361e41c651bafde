// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <random>

#include "isoforge/kernels.hpp"

using namespace isoforge;

namespace {

Matrix gaussian(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal;
  Matrix m(n, d);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(engine);
  return m;
}

Matrix unit_rows(Matrix m) {
  m.rowwise().normalize();
  return m;
}

template <auto Kernel>
void partition_logs(benchmark::State& state) {
  const Matrix w = gaussian(state.range(0), 128, 1);
  const Matrix dirs = unit_rows(gaussian(128, 128, 2));
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(w, dirs, true));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 256);
}

template <auto Kernel>
void assign_nearest(benchmark::State& state) {
  const Matrix w = gaussian(state.range(0), 64, 3);
  const Matrix centroids = gaussian(27, 64, 4);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(w, centroids));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Kernel>
void cross_sq_distances(benchmark::State& state) {
  const Matrix q = gaussian(state.range(0), 64, 5);
  const Matrix p = gaussian(state.range(0), 64, 6);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(q, p));
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

template <auto Kernel>
void log_sum_exp(benchmark::State& state) {
  std::mt19937_64 engine(7);
  std::uniform_real_distribution<double> uniform(-50.0, 50.0);
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (auto& x : v) x = uniform(engine);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(v));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(partition_logs<kernels::serial::partition_logs>)->Name("partition_logs/serial")->Arg(1000)->Arg(10000);
BENCHMARK(partition_logs<kernels::parallel::partition_logs>)->Name("partition_logs/parallel")->Arg(1000)->Arg(10000);
BENCHMARK(assign_nearest<kernels::serial::assign_nearest>)->Name("assign_nearest/serial")->Arg(10000)->Arg(100000);
BENCHMARK(assign_nearest<kernels::parallel::assign_nearest>)->Name("assign_nearest/parallel")->Arg(10000)->Arg(100000);
BENCHMARK(cross_sq_distances<kernels::serial::cross_sq_distances>)->Name("cross_sq_distances/serial")->Arg(500)->Arg(2000);
BENCHMARK(cross_sq_distances<kernels::parallel::cross_sq_distances>)->Name("cross_sq_distances/parallel")->Arg(500)->Arg(2000);
BENCHMARK(log_sum_exp<kernels::serial::log_sum_exp>)->Name("log_sum_exp/serial")->Arg(1 << 16)->Arg(1 << 20);
BENCHMARK(log_sum_exp<kernels::parallel::log_sum_exp>)->Name("log_sum_exp/parallel")->Arg(1 << 16)->Arg(1 << 20);

BENCHMARK_MAIN();
