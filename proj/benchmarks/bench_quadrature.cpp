#include <benchmark/benchmark.h>

#include "fracsob/atlas.hpp"
#include "fracsob/builtin_meshes.hpp"
#include "fracsob/extension.hpp"
#include "fracsob/sobolev.hpp"

using namespace fracsob;

namespace {

geometry::ManifoldPtr share(geometry::SimplicialManifold m) {
  return std::make_shared<const geometry::SimplicialManifold>(std::move(m));
}

sobolev::ScalarField first_coordinate(const geometry::Region& r) {
  return sobolev::ScalarField::sample(r, [](const geometry::Point& x) { return x.x(); });
}

void BM_SeminormCircle(benchmark::State& state) {
  const auto mesh = share(geometry::circle_polygon(static_cast<int>(state.range(0))));
  const auto whole = geometry::Region::whole(mesh);
  const auto u = first_coordinate(whole);
  const auto prm = sobolev::SobolevParams::make(0.5, 2.0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(sobolev::gagliardo_seminorm(u, whole, prm).value);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SeminormCircle)->RangeMultiplier(2)->Range(32, 256)->Unit(benchmark::kMillisecond)->Complexity();

void BM_SeminormIcosphere(benchmark::State& state) {
  const auto mesh = share(geometry::icosphere(static_cast<int>(state.range(0))));
  const auto whole = geometry::Region::whole(mesh);
  const auto u = first_coordinate(whole);
  const auto prm = sobolev::SobolevParams::make(0.5, 2.0, 2);
  for (auto _ : state) benchmark::DoNotOptimize(sobolev::gagliardo_seminorm(u, whole, prm).value);
}
BENCHMARK(BM_SeminormIcosphere)->DenseRange(0, 1)->Unit(benchmark::kMillisecond);

void BM_Oracle(benchmark::State& state) {
  const auto mesh = share(geometry::circle_polygon(64));
  const auto whole = geometry::Region::whole(mesh);
  const auto u = first_coordinate(whole);
  const auto prm = sobolev::SobolevParams::make(0.5, 2.0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(sobolev::oracle_seminorm(u, whole, prm, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_Oracle)->RangeMultiplier(2)->Range(256, 2048)->Unit(benchmark::kMillisecond);

void BM_Atlas(benchmark::State& state) {
  const auto mesh = share(geometry::icosphere(static_cast<int>(state.range(0))));
  const double eps = atlas::select_epsilon(mesh);
  for (auto _ : state) benchmark::DoNotOptimize(atlas::build_atlas(mesh, eps).size());
}
BENCHMARK(BM_Atlas)->DenseRange(1, 2)->Unit(benchmark::kMillisecond);

void BM_ExtendArc(benchmark::State& state) {
  const auto mesh = share(geometry::circle_polygon(static_cast<int>(state.range(0))));
  const auto omega = geometry::make_region(mesh, geometry::ArcSelector{0.0, 1.5707963267948966});
  const auto u = first_coordinate(omega);
  const auto prm = sobolev::SobolevParams::make(0.5, 2.0, 1);
  extension::ExtensionOptions opt;
  opt.norms = false;
  for (auto _ : state) benchmark::DoNotOptimize(extension::extend(u, omega, prm, opt).report.agreement_residual);
}
BENCHMARK(BM_ExtendArc)->RangeMultiplier(2)->Range(64, 256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
