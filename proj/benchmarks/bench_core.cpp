// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------


#include <benchmark/benchmark.h>

#include <random>

#include "isac/session.hpp"

using namespace isac;

namespace
{

const SessionConfig &demo()
{
    static const SessionConfig cfg = load_session_config(std::filesystem::path(ISAC_DATA_DIR) / "demo" / "demo.cfg");
    return cfg;
}

const SceneBundle &demo_scene()
{
    static const SceneBundle b = build_scene(demo());
    return b;
}

Transceiver at(const Vec3 &p)
{
    Transceiver t;
    t.pose.translation = p;
    return t;
}

void BM_BvhBuild(benchmark::State &state)
{
    const auto &mesh = demo_scene().asset.mesh;
    for (auto _ : state)
        benchmark::DoNotOptimize(Bvh(mesh));
    state.counters["triangles"] = double(mesh.size());
}
BENCHMARK(BM_BvhBuild)->Unit(benchmark::kMillisecond);

void BM_BvhFirstHit(benchmark::State &state)
{
    const Bvh bvh(demo_scene().asset.mesh);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n;
    std::vector<Ray> rays;
    for (int i = 0; i < 4096; ++i)
    {
        Vec3 d{n(rng), n(rng), n(rng)};
        rays.push_back(Ray::make({0, -30, 10}, d / norm(d)));
    }
    std::size_t i = 0;
    for (auto _ : state)
        benchmark::DoNotOptimize(bvh.first_hit(rays[i++ % rays.size()]));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
BENCHMARK(BM_BvhFirstHit);

void BM_ComputePaths(benchmark::State &state)
{
    const auto &b = demo_scene();
    const RtScene scene(b.rt, b.materials);
    RtConfig cfg = demo().link.rt;
    cfg.max_order = static_cast<int>(state.range(0));
    const PathSolver solver(scene, cfg, demo().tx());
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> ux(-45, 45), uy(-35, 50);
    for (auto _ : state)
        benchmark::DoNotOptimize(solver.solve(at({ux(rng), uy(rng), 1.5})));
    state.counters["images"] = double(solver.image_count());
}
BENCHMARK(BM_ComputePaths)->Arg(1)->Arg(2)->Arg(3)->Unit(benchmark::kMicrosecond);

void BM_Simplify(benchmark::State &state)
{
    const auto cfg = load_session_config(std::filesystem::path(ISAC_DATA_DIR) / "city" / "city.cfg");
    const auto asset = build_scene(cfg).asset;
    for (auto _ : state)
        benchmark::DoNotOptimize(simplify_mesh(asset, cfg.simplify));
    state.counters["triangles"] = double(asset.mesh.size());
}
BENCHMARK(BM_Simplify)->Unit(benchmark::kMillisecond);

void BM_EvaluateLink(benchmark::State &state)
{
    const auto &b = demo_scene();
    const RtScene scene(b.rt, b.materials);
    const auto &setup = demo().link;
    const auto tx = demo().tx();
    const auto paths = compute_paths(tx, at({-10, 20, 1.5}), scene, setup.rt);
    const Cfr h = cir_to_cfr(assemble_cir(paths, SimTime{0}, "tx", "rx"), setup.array, tx.pose, setup.ofdm);
    const auto cb = DftCodebook::make(setup.array);
    for (auto _ : state)
        benchmark::DoNotOptimize(evaluate_link(h, cb, setup.ofdm, setup.tx_power_dbm));
}
BENCHMARK(BM_EvaluateLink)->Unit(benchmark::kMicrosecond);

} // namespace

BENCHMARK_MAIN();
