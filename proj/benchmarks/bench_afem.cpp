// Copyright The afem-pgmres Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <memory>
#include <vector>

#include <benchmark/benchmark.h>

#include "afem/adaptive.hpp"

namespace
{

using namespace afem;

PdeData benchmark_data()
{
  return PdeData::constant_data({}, {1.0, 25.0}, 0.0, 1.0);
}

// Hierarchy of meshes graded towards the reentrant corner.
struct Graded
{
  std::vector<std::shared_ptr<const Triangulation>> meshes;

  explicit Graded(int levels)
  {
    meshes.push_back(std::make_shared<const Triangulation>(initial_mesh_lshape()));
    for (int j = 0; j < levels; j++)
    {
      const auto &m = *meshes.back();
      std::vector<Index> marks;
      for (Index e = 0; e < m.num_elements(); e++)
      {
        const Point c = m.centroid(e);
        if (std::hypot(c.x, c.y) < 4.0 * m.diameter(e) || j % 4 == 0)
        {
          marks.push_back(e);
        }
      }
      meshes.push_back(std::make_shared<const Triangulation>(refine(m, marks)));
    }
  }
};

void BM_PreconditionerApply(benchmark::State &state, PreconditionerType type)
{
  const Graded g(static_cast<int>(state.range(0)));
  MultilevelHierarchy hierarchy(benchmark_data());
  for (const auto &m : g.meshes)
  {
    hierarchy.push_level(m);
  }
  const FeSpace space(g.meshes.back(), 2);
  const auto sys = assemble_system(space, benchmark_data());
  const Preconditioner P(hierarchy, space, sys.A, {type, true});
  Vector r(space.size(), 1.0), s(space.size());
  for (auto _ : state)
  {
    P.apply(r, s);
    benchmark::DoNotOptimize(s.data());
  }
  state.counters["N"] = static_cast<double>(space.size());
  state.counters["levels"] = static_cast<double>(hierarchy.num_levels());
  state.SetComplexityN(space.size());
}
BENCHMARK_CAPTURE(BM_PreconditionerApply, as, PreconditionerType::AdditiveSchwarz)
    ->DenseRange(8, 20, 4)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_PreconditionerApply, smg, PreconditionerType::SymmetricMultigrid)
    ->DenseRange(8, 20, 4)
    ->Unit(benchmark::kMillisecond);

void BM_Refine(benchmark::State &state)
{
  const Graded g(static_cast<int>(state.range(0)));
  const auto &mesh = *g.meshes.back();
  std::vector<Index> marks;
  for (Index e = 0; e < mesh.num_elements(); e += 5)
  {
    marks.push_back(e);
  }
  for (auto _ : state)
  {
    auto fine = refine(mesh, marks);
    benchmark::DoNotOptimize(fine.num_elements());
  }
  state.counters["T"] = static_cast<double>(mesh.num_elements());
}
BENCHMARK(BM_Refine)->DenseRange(8, 20, 4)->Unit(benchmark::kMillisecond);

void BM_Estimator(benchmark::State &state)
{
  const Graded g(static_cast<int>(state.range(0)));
  const FeSpace space(g.meshes.back(), 2);
  const ResidualEstimator estimator(space, benchmark_data());
  const Vector x(space.size(), 0.1);
  for (auto _ : state)
  {
    benchmark::DoNotOptimize(estimator.eta(x));
  }
  state.counters["T"] = static_cast<double>(space.mesh().num_elements());
}
BENCHMARK(BM_Estimator)->DenseRange(8, 20, 4)->Unit(benchmark::kMillisecond);

void BM_Assemble(benchmark::State &state)
{
  const Graded g(static_cast<int>(state.range(0)));
  const FeSpace space(g.meshes.back(), 2);
  for (auto _ : state)
  {
    auto sys = assemble_system(space, benchmark_data());
    benchmark::DoNotOptimize(sys.d.data());
  }
  state.counters["N"] = static_cast<double>(space.size());
}
BENCHMARK(BM_Assemble)->DenseRange(8, 20, 4)->Unit(benchmark::kMillisecond);

void BM_DorflerMark(benchmark::State &state)
{
  EstimatorData data;
  data.indicators.resize(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < data.indicators.size(); i++)
  {
    data.indicators[i] = std::pow(std::sin(0.37 * static_cast<double>(i)), 2) / (1.0 + i % 97);
  }
  for (auto _ : state)
  {
    benchmark::DoNotOptimize(dorfler_mark(data, 0.5).size());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DorflerMark)->RangeMultiplier(4)->Range(1 << 10, 1 << 18)->Complexity();

}  // namespace

BENCHMARK_MAIN();
