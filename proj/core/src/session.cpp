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

#include "isac/session.hpp"

#include <cmath>
#include <fstream>
#include <istream>

#include "isac/bag.hpp"
#include "isac/messages.hpp"
#include "isac/text.hpp"

namespace isac
{

namespace
{

std::string line_tag(int line) { return "config line " + std::to_string(line) + ": "; }

struct Values
{
    const ConfigFile::Entry &e;
    const std::string &key;

    [[noreturn]] void bad(const std::string &why) const
    {
        throw ConfigError(line_tag(e.line) + "bad value for '" + key + "': " + why);
    }
    std::vector<std::string> words(std::size_t n) const
    {
        auto w = split_words(e.value);
        if (w.size() != n)
            bad("expected " + std::to_string(n) + " value(s)");
        return w;
    }
    double num() const
    {
        try
        {
            return parse_double(words(1)[0]);
        }
        catch (const std::invalid_argument &ex)
        {
            bad(ex.what());
        }
    }
    double positive() const
    {
        const double v = num();
        if (!(v > 0))
            bad("must be positive");
        return v;
    }
    std::int64_t integer(std::int64_t lo) const
    {
        std::int64_t v = 0;
        try
        {
            v = parse_int(words(1)[0]);
        }
        catch (const std::invalid_argument &ex)
        {
            bad(ex.what());
        }
        if (v < lo)
            bad("must be >= " + std::to_string(lo));
        return v;
    }
    std::uint32_t u32(std::int64_t lo = 0) const { return static_cast<std::uint32_t>(integer(lo)); }
    Vec3 vec3() const
    {
        const auto w = words(3);
        try
        {
            return {parse_double(w[0]), parse_double(w[1]), parse_double(w[2])};
        }
        catch (const std::invalid_argument &ex)
        {
            bad(ex.what());
        }
    }
    bool flag() const
    {
        const auto w = words(1)[0];
        if (w == "on" || w == "true" || w == "1")
            return true;
        if (w == "off" || w == "false" || w == "0")
            return false;
        bad("expected on/off");
    }
    std::string word() const { return words(1)[0]; }
};

using Setter = std::function<void(SessionConfig &, const Values &)>;

const std::map<std::string, Setter> &setters()
{
    static const std::map<std::string, Setter> table{
        {"scene.footprints", [](SessionConfig &c, const Values &v) { c.footprints = c.base_dir / v.word(); }},
        {"scene.rtmesh", [](SessionConfig &c, const Values &v) { c.rtmesh = c.base_dir / v.word(); }},
        {"scene.facade_cell", [](SessionConfig &c, const Values &v) { c.extrude.facade_cell = v.num(); }},
        {"simplify.ratio", [](SessionConfig &c, const Values &v) { c.simplify.ratio = v.positive(); }},
        {"simplify.size_threshold",
         [](SessionConfig &c, const Values &v) { c.simplify.size_threshold = v.num(); }},
        {"simplify.sharp_angle_deg",
         [](SessionConfig &c, const Values &v) { c.simplify.sharp_angle_deg = v.positive(); }},
        {"simplify.detail_classes",
         [](SessionConfig &c, const Values &v) { c.simplify.detail_classes = split_words(v.e.value); }},
        {"trajectory.file", [](SessionConfig &c, const Values &v) { c.trajectory = c.base_dir / v.word(); }},
        {"trajectory.frame", [](SessionConfig &c, const Values &v) { c.platform = v.word(); }},
        {"sensors.camera", [](SessionConfig &c, const Values &v) { c.sensors.camera_enabled = v.flag(); }},
        {"sensors.lidar", [](SessionConfig &c, const Values &v) { c.sensors.lidar_enabled = v.flag(); }},
        {"sensors.camera_rate_hz",
         [](SessionConfig &c, const Values &v) { c.sensors.camera_rate_hz = v.positive(); }},
        {"sensors.lidar_rate_hz", [](SessionConfig &c, const Values &v) { c.sensors.lidar_rate_hz = v.positive(); }},
        {"sensors.gnss_rate_hz", [](SessionConfig &c, const Values &v) { c.sensors.gnss_rate_hz = v.positive(); }},
        {"sensors.imu_rate_hz", [](SessionConfig &c, const Values &v) { c.sensors.imu_rate_hz = v.positive(); }},
        {"sensors.pose_rate_hz", [](SessionConfig &c, const Values &v) { c.sensors.pose_rate_hz = v.positive(); }},
        {"sensors.gnss_sigma_m", [](SessionConfig &c, const Values &v) { c.sensors.noise.gnss_sigma = v.vec3(); }},
        {"sensors.accel_sigma", [](SessionConfig &c, const Values &v) { c.sensors.noise.accel_sigma = v.num(); }},
        {"sensors.gyro_sigma", [](SessionConfig &c, const Values &v) { c.sensors.noise.gyro_sigma = v.num(); }},
        {"session.seed", [](SessionConfig &c, const Values &v) { c.seed = static_cast<std::uint64_t>(v.integer(0)); }},
        {"session.tick_ms",
         [](SessionConfig &c, const Values &v) { c.tick = Nanos(static_cast<std::int64_t>(v.integer(1)) * 1'000'000); }},
        {"session.cir_rate_hz", [](SessionConfig &c, const Values &v) { c.cir_rate_hz = v.positive(); }},
        {"session.output_dir", [](SessionConfig &c, const Values &v) { c.output_dir = c.base_dir / v.word(); }},
        {"tx.id", [](SessionConfig &c, const Values &v) { c.tx_id = v.word(); }},
        {"tx.position", [](SessionConfig &c, const Values &v) { c.tx_position = v.vec3(); }},
        {"tx.power_dbm", [](SessionConfig &c, const Values &v) { c.link.tx_power_dbm = v.num(); }},
        {"array.nx", [](SessionConfig &c, const Values &v) { c.link.array.nx = v.u32(1); }},
        {"array.ny", [](SessionConfig &c, const Values &v) { c.link.array.ny = v.u32(1); }},
        {"array.spacing", [](SessionConfig &c, const Values &v) { c.link.array.spacing = v.positive(); }},
        {"array.boresight",
         [](SessionConfig &c, const Values &v) {
             const Vec3 b = v.vec3();
             if (!(norm(b) > 0))
                 v.bad("zero vector");
             c.array_boresight = normalized(b);
         }},
        {"rt.carrier_hz", [](SessionConfig &c, const Values &v) { c.link.rt.carrier_hz = v.positive(); }},
        {"rt.max_order",
         [](SessionConfig &c, const Values &v) {
             const auto k = v.integer(0);
             if (k > 3)
                 v.bad("at most 3 supported");
             c.link.rt.max_order = static_cast<int>(k);
         }},
        {"ofdm.subcarriers", [](SessionConfig &c, const Values &v) { c.link.ofdm.subcarriers = v.u32(1); }},
        {"ofdm.spacing_hz", [](SessionConfig &c, const Values &v) { c.link.ofdm.spacing_hz = v.positive(); }},
        {"ofdm.noise_figure_db", [](SessionConfig &c, const Values &v) { c.link.ofdm.noise_figure_db = v.num(); }},
        {"bler.threshold_db", [](SessionConfig &c, const Values &v) { c.link.bler.threshold_db = v.num(); }},
        {"bler.slope_per_db", [](SessionConfig &c, const Values &v) { c.link.bler.slope_per_db = v.positive(); }},
        {"grid.x0", [](SessionConfig &c, const Values &v) { c.grid.x0 = v.num(); }},
        {"grid.y0", [](SessionConfig &c, const Values &v) { c.grid.y0 = v.num(); }},
        {"grid.nx", [](SessionConfig &c, const Values &v) { c.grid.nx = v.u32(1); }},
        {"grid.ny", [](SessionConfig &c, const Values &v) { c.grid.ny = v.u32(1); }},
        {"grid.cell", [](SessionConfig &c, const Values &v) { c.grid.cell = v.positive(); }},
        {"grid.rx_height", [](SessionConfig &c, const Values &v) { c.grid.rx_height = v.num(); }},
        {"ckm.workers", [](SessionConfig &c, const Values &v) { c.workers = v.u32(1); }},
        {"beampred.k", [](SessionConfig &c, const Values &v) { c.knn_k = v.u32(1); }},
        {"beampred.train_fraction",
         [](SessionConfig &c, const Values &v) {
             const double f = v.num();
             if (!(f > 0 && f < 1))
                 v.bad("must be in (0, 1)");
             c.train_fraction = f;
         }},
        {"beampred.split_seed",
         [](SessionConfig &c, const Values &v) { c.split_seed = static_cast<std::uint64_t>(v.integer(0)); }},
        {"beampred.slop_ms",
         [](SessionConfig &c, const Values &v) {
             c.sync_slop = Nanos(static_cast<std::int64_t>(std::llround(v.num() * 1e6)));
         }},
        {"beampred.camera_position",
         [](SessionConfig &c, const Values &v) {
             Pose p = c.bs_camera.value_or(Pose{});
             p.translation = v.vec3();
             c.bs_camera = p;
         }},
        {"beampred.camera_yaw_deg",
         [](SessionConfig &c, const Values &v) {
             Pose p = c.bs_camera.value_or(Pose{});
             p.rotation = Quat::from_yaw(v.num() * M_PI / 180.0);
             c.bs_camera = p;
         }},
    };
    return table;
}

const std::vector<std::string> kRequired{"rt.carrier_hz", "scene.footprints", "tx.position"};

bool due(SimTime t, double rate_hz)
{
    const auto period = static_cast<std::uint64_t>(std::llround(1e9 / rate_hz));
    return period > 0 && t.ns % period == 0;
}

// Ray tracer node: tracks the latest platform pose, emits a CIR whenever
// its rate divides the tick stamp.
class ChannelNode
{
  public:
    ChannelNode(const SessionConfig &cfg, const RtScene &scene, Bus &bus)
        : cfg_(cfg), bus_(bus), solver_(scene, cfg.link.rt, cfg.tx()), poses_(bus.subscribe(cfg.pose_topic()))
    {
    }

    std::size_t on_tick(SimTime t)
    {
        for (auto &e : poses_->drain())
            latest_ = decode_message<OdometryMsg>(e);
        if (!latest_ || !due(t, cfg_.cir_rate_hz))
            return 0;
        Transceiver rx{latest_->pose, latest_->twist};
        const Cir cir = assemble_cir(solver_.solve(rx), t, cfg_.tx_id, cfg_.platform);
        publish_message(bus_, kCirTopic, cir);
        return 1;
    }

  private:
    const SessionConfig &cfg_;
    Bus &bus_;
    PathSolver solver_;
    std::shared_ptr<Subscription> poses_;
    std::optional<OdometryMsg> latest_;
};

class LinkNode
{
  public:
    LinkNode(const SessionConfig &cfg, Bus &bus)
        : cfg_(cfg), bus_(bus), cb_(DftCodebook::make(cfg.link.array)), cirs_(bus.subscribe(kCirTopic))
    {
    }

    std::size_t on_tick()
    {
        std::size_t n = 0;
        const Pose tx_pose = cfg_.tx().pose;
        for (auto &e : cirs_->drain())
        {
            const Cir cir = decode_message<Cir>(e);
            const Cfr h = cir_to_cfr(cir, cfg_.link.array, tx_pose, cfg_.link.ofdm);
            LinkKpi kpi = evaluate_link(h, cb_, cfg_.link.ofdm, cfg_.link.tx_power_dbm, {}, cfg_.link.bler);
            kpi.header = cir.header;
            kpi.tx_id = cir.tx_id;
            kpi.rx_id = cir.rx_id;
            publish_message(bus_, kKpiTopic, kpi);
            ++n;
        }
        return n;
    }

  private:
    const SessionConfig &cfg_;
    Bus &bus_;
    DftCodebook cb_;
    std::shared_ptr<Subscription> cirs_;
};

Trajectory session_trajectory(const SessionConfig &cfg)
{
    if (!cfg.trajectory)
        throw ConfigError("config: missing required key 'trajectory.file'");
    return load_trajectory(*cfg.trajectory, cfg.platform);
}

// Shared online loop; channel nodes are optional.
SessionResult drive_online(const SessionConfig &cfg, const std::filesystem::path &out_bag, bool channel,
                           const SessionHooks &hooks)
{
    const SceneBundle scene = build_scene(cfg);
    const Bvh sensing_bvh(scene.asset.mesh);
    const Trajectory traj = session_trajectory(cfg);

    Bus bus;
    SimClock clock(&bus);
    FrameTree tree;
    BagRecorder recorder(bus, out_bag);
    if (hooks.on_start)
        hooks.on_start(bus);

    FrontEnd fe(traj, cfg.sensors, &sensing_bvh, cfg.seed);
    std::optional<RtScene> rt_scene;
    std::optional<ChannelNode> rt_node;
    std::optional<LinkNode> link_node;
    if (channel)
    {
        rt_scene.emplace(scene.rt, scene.materials);
        rt_node.emplace(cfg, *rt_scene, bus);
        link_node.emplace(cfg, bus);
    }

    SessionResult res;
    clock.jump_to(traj.start());
    publish_message(bus, kClockTopic, ClockMsg{traj.start()});
    for (SimTime t = traj.start(); t <= traj.end();)
    {
        fe.on_tick(t, bus, tree);
        if (rt_node)
        {
            res.cirs += rt_node->on_tick(t);
            res.kpis += link_node->on_tick();
        }
        if (hooks.after_tick)
            hooks.after_tick(t, tree);
        recorder.flush();
        ++res.ticks;
        if (t + cfg.tick > traj.end())
            break;
        t = clock.advance(cfg.tick);
    }
    res.records = recorder.record_count();
    recorder.close();
    return res;
}

} // namespace

ConfigFile ConfigFile::parse(std::istream &in, std::filesystem::path base_dir)
{
    ConfigFile f;
    f.base_dir = std::move(base_dir);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw))
    {
        ++line;
        const auto body = trim(strip_comment(raw));
        if (body.empty())
            continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(line_tag(line) + "expected 'key = value'");
        const std::string key(trim(body.substr(0, eq)));
        const std::string value(trim(body.substr(eq + 1)));
        if (key.empty() || key.find('.') == std::string::npos)
            throw ConfigError(line_tag(line) + "key must look like section.name");
        if (value.empty())
            throw ConfigError(line_tag(line) + "missing value for '" + key + "'");
        if (const auto it = f.entries.find(key); it != f.entries.end())
            throw ConfigError(line_tag(line) + "duplicate key '" + key + "' (first on line " +
                              std::to_string(it->second.line) + ")");
        f.entries.emplace(key, Entry{value, line});
    }
    return f;
}

ConfigFile ConfigFile::load(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config " + path.string());
    return parse(in, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

SessionConfig SessionConfig::from(const ConfigFile &file)
{
    SessionConfig c;
    c.base_dir = file.base_dir;
    c.output_dir = c.base_dir / "out";
    for (const auto &key : kRequired)
        if (!file.entries.count(key))
            throw ConfigError("config: missing required key '" + key + "'");

    const auto &table = setters();
    for (const auto &[key, entry] : file.entries)
    {
        const Values v{entry, key};
        if (key.rfind("material.", 0) == 0)
        {
            // material.<name> = eps_r sigma
            const auto w = v.words(2);
            try
            {
                c.extra_materials.push_back({key.substr(9), parse_double(w[0]), parse_double(w[1])});
            }
            catch (const std::invalid_argument &ex)
            {
                v.bad(ex.what());
            }
            continue;
        }
        if (key.rfind("rule.", 0) == 0)
        {
            c.material_rules.emplace_back(key.substr(5), v.word());
            continue;
        }
        const auto it = table.find(key);
        if (it == table.end())
            throw ConfigError(line_tag(entry.line) + "unknown key '" + key + "'");
        it->second(c, v);
    }
    c.link.array.mount.rotation = Quat::between({0, 0, 1}, c.array_boresight);
    return c;
}

Transceiver SessionConfig::tx() const
{
    Transceiver t;
    t.pose.translation = tx_position;
    return t;
}

SessionConfig load_session_config(const std::filesystem::path &path)
{
    return SessionConfig::from(ConfigFile::load(path));
}

SceneBundle build_scene(const SessionConfig &cfg)
{
    if (!std::filesystem::exists(cfg.footprints))
        throw ConfigError("missing asset: " + cfg.footprints.string());
    SceneBundle b;
    b.materials = MaterialLibrary::defaults();
    for (const auto &m : cfg.extra_materials)
        b.materials.add(m);
    MaterialRules rules = MaterialRules::defaults();
    for (const auto &r : cfg.material_rules)
        rules.rules.push_back(r);

    b.asset = extrude_footprints(load_footprints(cfg.footprints), cfg.extrude);
    assign_materials(b.asset, rules, b.materials);
    if (cfg.rtmesh)
    {
        if (!std::filesystem::exists(*cfg.rtmesh))
            throw ConfigError("missing asset: " + cfg.rtmesh->string());
        b.rt = load_simmesh(*cfg.rtmesh);
        const auto report = verify_alignment(b.asset, b.rt);
        if (!report.ok)
            throw SceneError("rtmesh does not align with the scene asset: " + report.reason);
        b.stats.input_triangles = b.asset.mesh.size();
        b.stats.output_triangles = b.rt.mesh.size();
    }
    else
        b.rt = simplify_mesh(b.asset, cfg.simplify, &b.stats);
    return b;
}

SessionResult run_session(const SessionConfig &cfg, const std::filesystem::path &out_bag,
                          const std::optional<std::filesystem::path> &replay_bag, const SessionHooks &hooks)
{
    if (!replay_bag)
        return drive_online(cfg, out_bag, true, hooks);

    if (!std::filesystem::exists(*replay_bag))
        throw ConfigError("missing replay bag: " + replay_bag->string());
    const SceneBundle scene = build_scene(cfg);
    const RtScene rt_scene(scene.rt, scene.materials);

    Bus bus;
    SimClock clock(&bus);
    FrameTree tree;
    BagRecorder recorder(bus, out_bag);
    if (hooks.on_start)
        hooks.on_start(bus);
    ChannelNode rt_node(cfg, rt_scene, bus);
    LinkNode link_node(cfg, bus);
    auto tf_sub = bus.subscribe(kTfTopic);

    SessionResult res;
    bag_replay(
        *replay_bag, bus, clock,
        [&](SimTime t) {
            for (auto &e : tf_sub->drain())
                for (const auto &tf : decode_message<TfMsg>(e).transforms)
                    tree.set_transform(tf);
            res.cirs += rt_node.on_tick(t);
            res.kpis += link_node.on_tick();
            if (hooks.after_tick)
                hooks.after_tick(t, tree);
            recorder.flush();
            ++res.ticks;
        },
        [](const std::string &topic) { return topic == kCirTopic || topic == kKpiTopic; });
    res.records = recorder.record_count();
    recorder.close();
    return res;
}

SessionResult record_trajectory(const SessionConfig &cfg, const std::filesystem::path &out_bag)
{
    return drive_online(cfg, out_bag, false, {});
}

Ckm run_ckm(const SessionConfig &cfg, const SceneBundle &scene)
{
    const RtScene rt(scene.rt, scene.materials);
    return generate_ckm(rt, cfg.tx(), cfg.grid, cfg.link, cfg.workers);
}

BeampredResult run_beampred(const SessionConfig &cfg, const std::optional<std::filesystem::path> &bag)
{
    BeampredResult r;
    if (bag)
    {
        DatasetOptions opt;
        opt.slop = cfg.sync_slop;
        if (cfg.bs_camera)
            opt.camera = DatasetCamera{cfg.sensors.camera, *cfg.bs_camera, cfg.pose_topic()};
        r.dataset = build_dataset(*bag, opt);
    }
    else
        r.dataset = dataset_from_ckm(run_ckm(cfg, build_scene(cfg)));
    if (r.dataset.size() < 2)
        throw DatasetError("beampred: dataset has fewer than two samples");
    const auto [train, test] = split_dataset(r.dataset, cfg.train_fraction, cfg.split_seed);
    if (train.empty() || test.empty())
        throw DatasetError("beampred: split left an empty train or test set");
    const std::size_t k = cfg.knn_k;
    r.report = evaluate_topk([&](const Sample &s) { return knn_predict(train, s.position, k); }, test);
    return r;
}

} // namespace isac
