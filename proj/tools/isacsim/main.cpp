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

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include "isac/bag.hpp"
#include "isac/session.hpp"
#include "isac/text.hpp"

namespace fs = std::filesystem;
using namespace isac;

namespace
{

fs::path or_default(const std::string &given, const fs::path &fallback)
{
    return given.empty() ? fallback : fs::path(given);
}

void ensure_parent(const fs::path &p)
{
    if (p.has_parent_path())
        fs::create_directories(p.parent_path());
}

int cmd_run(const std::string &config, const std::string &replay, const std::string &out)
{
    const auto cfg = load_session_config(config);
    const fs::path bag = or_default(out, cfg.output_dir / "session.bag");
    ensure_parent(bag);
    std::optional<fs::path> input;
    if (!replay.empty())
        input = replay;
    const auto r = run_session(cfg, bag, input);
    std::cout << (input ? "replay" : "online") << " session: " << r.ticks << " ticks, " << r.cirs << " cir, "
              << r.kpis << " kpi, " << r.records << " records -> " << bag.string() << "\n";
    return 0;
}

int cmd_trajectory_record(const std::string &config, const std::string &out)
{
    const auto cfg = load_session_config(config);
    const fs::path bag = or_default(out, cfg.output_dir / "trajectory.bag");
    ensure_parent(bag);
    const auto r = record_trajectory(cfg, bag);
    std::cout << "trajectory: " << r.ticks << " ticks, " << r.records << " records -> " << bag.string() << "\n";
    return 0;
}

int cmd_scene(const std::string &config, const std::string &out, bool write)
{
    const auto cfg = load_session_config(config);
    const auto b = build_scene(cfg);
    const double factor = b.rt.mesh.empty() ? 0.0 : double(b.asset.mesh.size()) / double(b.rt.mesh.size());
    std::cout << "scene: " << b.asset.objects.size() << " objects, " << b.asset.mesh.size() << " triangles\n"
              << "rtmesh: " << b.rt.mesh.size() << " triangles (after filter " << b.stats.after_filter
              << ", removed objects " << b.stats.removed_objects << "), reduction " << fmt_double(factor) << "x\n";
    if (write)
    {
        const fs::path dir = or_default(out, cfg.output_dir / "scene");
        export_assets(b.asset, b.rt, dir);
        std::cout << "wrote " << (dir / "scene.simmesh").string() << " and " << (dir / "rtmesh.simmesh").string()
                  << "\n";
    }
    return 0;
}

int cmd_ckm(const std::string &config, const std::string &out, unsigned workers)
{
    auto cfg = load_session_config(config);
    if (workers > 0)
        cfg.workers = workers;
    const auto ckm = run_ckm(cfg, build_scene(cfg));
    const fs::path dir = or_default(out, cfg.output_dir / "ckm");
    write_outputs(ckm, dir);
    char digest[17];
    std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(ckm.digest));
    std::cout << "ckm " << ckm.grid.nx << "x" << ckm.grid.ny << " digest " << digest << " -> " << dir.string()
              << "\n";
    return 0;
}

int cmd_bag_inspect(const std::string &bag)
{
    print_bag_summary(std::cout, inspect_bag(bag));
    return 0;
}

int cmd_bag_replay(const std::string &bag, const std::string &out)
{
    Bus bus;
    SimClock clock;
    auto all = bus.subscribe_all();
    std::optional<BagRecorder> rec;
    if (!out.empty())
    {
        ensure_parent(out);
        rec.emplace(bus, out);
    }
    std::map<std::string, std::size_t> counts;
    const auto n = bag_replay(bag, bus, clock, [&](SimTime) {
        for (const auto &e : all->drain())
            ++counts[e.topic];
        if (rec)
            rec->flush();
    });
    if (rec)
        rec->close();
    std::cout << "replayed " << n << " records, end " << fmt_double(clock.now().seconds()) << " s\n";
    for (const auto &[topic, c] : counts)
        std::cout << "  " << topic << " " << c << "\n";
    return 0;
}

int cmd_beampred(const std::string &config, const std::string &bag, const std::string &exp)
{
    const auto cfg = load_session_config(config);
    std::optional<fs::path> input;
    if (!bag.empty())
        input = bag;
    const auto r = run_beampred(cfg, input);
    if (!exp.empty())
    {
        ensure_parent(exp);
        std::ofstream os(exp);
        if (!os)
            throw std::runtime_error("cannot write " + exp);
        write_dataset(os, r.dataset);
    }
    std::cout << "samples " << r.dataset.size() << " (test " << r.report.samples << "), k=" << cfg.knn_k << "\n";
    for (std::size_t i = 0; i < r.report.ks.size(); ++i)
        std::cout << "  top-" << r.report.ks[i] << " " << fmt_double(r.report.accuracy[i]) << "\n";
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"isacsim: sensing and channel simulation sessions"};
    app.require_subcommand(1);

    std::string config, replay, out, bag, exp;
    unsigned workers = 0;

    auto *run = app.add_subcommand("run", "Run a session (online, or replay of a trajectory bag)");
    run->add_option("config", config, "Session config")->required()->check(CLI::ExistingFile);
    run->add_option("--replay", replay, "Trajectory or session bag to replay")->check(CLI::ExistingFile);
    run->add_option("--out", out, "Session bag path");

    auto *traj = app.add_subcommand("trajectory", "Trajectory tools");
    traj->require_subcommand(1);
    auto *traj_rec = traj->add_subcommand("record", "Record platform and navigation topics to a bag");
    traj_rec->add_option("config", config)->required()->check(CLI::ExistingFile);
    traj_rec->add_option("--out", out, "Bag path");

    auto *scene = app.add_subcommand("scene", "Scene asset tools");
    scene->require_subcommand(1);
    auto *scene_build = scene->add_subcommand("build", "Extrude, simplify and export SimMesh files");
    scene_build->add_option("config", config)->required()->check(CLI::ExistingFile);
    scene_build->add_option("--out", out, "Output directory");
    auto *scene_simplify = scene->add_subcommand("simplify", "Report triangle counts before and after");
    scene_simplify->add_option("config", config)->required()->check(CLI::ExistingFile);

    auto *ckm = app.add_subcommand("ckm", "Channel knowledge maps");
    ckm->require_subcommand(1);
    auto *ckm_gen = ckm->add_subcommand("generate", "Grid scan to rasters and heatmaps");
    ckm_gen->add_option("config", config)->required()->check(CLI::ExistingFile);
    ckm_gen->add_option("--out", out, "Output directory");
    ckm_gen->add_option("--workers", workers, "Worker threads (overrides config)");

    auto *bagc = app.add_subcommand("bag", "Bag tools");
    bagc->require_subcommand(1);
    auto *bag_inspect = bagc->add_subcommand("inspect", "Topic table and counts");
    bag_inspect->add_option("bag", bag)->required()->check(CLI::ExistingFile);
    auto *bag_replay_cmd = bagc->add_subcommand("replay", "Play a bag on a fresh bus");
    bag_replay_cmd->add_option("bag", bag)->required()->check(CLI::ExistingFile);
    bag_replay_cmd->add_option("--out", out, "Re-record everything to this bag");

    auto *bp = app.add_subcommand("beampred", "Beam prediction case study");
    bp->require_subcommand(1);
    auto *bp_eval = bp->add_subcommand("eval", "k-NN top-k evaluation");
    bp_eval->add_option("config", config)->required()->check(CLI::ExistingFile);
    bp_eval->add_option("--bag", bag, "Session bag (default: grid-scan dataset)")->check(CLI::ExistingFile);
    bp_eval->add_option("--export", exp, "Write the dataset as text");

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (*run)
            return cmd_run(config, replay, out);
        if (*traj_rec)
            return cmd_trajectory_record(config, out);
        if (*scene_build)
            return cmd_scene(config, out, true);
        if (*scene_simplify)
            return cmd_scene(config, out, false);
        if (*ckm_gen)
            return cmd_ckm(config, out, workers);
        if (*bag_inspect)
            return cmd_bag_inspect(bag);
        if (*bag_replay_cmd)
            return cmd_bag_replay(bag, out);
        if (*bp_eval)
            return cmd_beampred(config, bag, exp);
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
