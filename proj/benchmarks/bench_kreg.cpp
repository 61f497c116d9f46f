#include <benchmark/benchmark.h>

#include <random>

#include "kreg/fft.hpp"
#include "kreg/geometry.hpp"
#include "kreg/nufft.hpp"
#include "kreg/registration.hpp"

namespace {

using namespace kreg;

ComplexVolume random_volume(const Dims3& d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  ComplexVolume v(d);
  for (auto& z : v.values()) z = {g(rng), g(rng)};
  return v;
}

geometry::KSpaceLocations random_locations(std::size_t count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3.14, 3.14);
  geometry::KSpaceLocations out(count);
  for (auto& l : out) l = {u(rng), u(rng), u(rng)};
  return out;
}

// Matrix size n^3 with n^3 nonuniform samples.
void BM_NufftType2(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  const ComplexVolume image = random_volume({n, n, n}, rng);
  const auto locs = random_locations(n * n * n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(nufft::nufft_type2(image, locs, {}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(locs.size()));
}
BENCHMARK(BM_NufftType2)->Arg(16)->Arg(32)->Arg(48)->Unit(benchmark::kMillisecond);

void BM_NufftType1(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  const auto locs = random_locations(n * n * n, rng);
  nufft::KSpaceSamples s{locs, random_volume({n, n, n}, rng).values()};
  for (auto _ : state) benchmark::DoNotOptimize(nufft::nufft_adjoint_type1(s, {n, n, n}, {}, 1.0));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(locs.size()));
}
BENCHMARK(BM_NufftType1)->Arg(16)->Arg(32)->Arg(48)->Unit(benchmark::kMillisecond);

// Oblique anisotropic protocol registered onto an n^3 reference grid.
void BM_KSpaceRegister(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  geometry::ProtocolDescriptor p;
  p.rotation = geometry::rotation_from_euler(20, 10, 0);
  p.voxel_sizes = {1, 1, 2};
  p.matrix_dims = {n, n, n / 2};
  p.fov_mm = static_cast<double>(n);
  p.echo_times_s = {0.01};
  const ComplexVolume k = random_volume(p.matrix_dims, rng);
  const geometry::ReferenceProtocol ref{1.0, n};
  for (auto _ : state)
    benchmark::DoNotOptimize(registration::kspace_register(std::span<const ComplexVolume>(&k, 1), p, ref, {}));
}
BENCHMARK(BM_KSpaceRegister)->Arg(32)->Arg(48)->Unit(benchmark::kMillisecond);

void BM_LaplacianUnwrap(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  ScalarVolume phase({n, n, n});
  for (auto& x : phase.values()) x = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(registration::laplacian_unwrap(phase));
}
BENCHMARK(BM_LaplacianUnwrap)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

// The distro's libbenchmark_main.a is built with a different LTO version, so
// the shared library plus our own main is used instead.
BENCHMARK_MAIN();
