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

#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "isac/beampred.hpp"
#include "isac/ckm.hpp"
#include "isac/linksys.hpp"
#include "isac/raytracer.hpp"
#include "isac/scene.hpp"
#include "isac/sensing.hpp"
#include "isac/timebase.hpp"

namespace isac
{

class ConfigError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

// Flat `section.key = value` file, `#` comments. Duplicate keys and
// malformed lines are errors carrying the line number.
struct ConfigFile
{
    struct Entry
    {
        std::string value;
        int line = 0;
    };
    std::map<std::string, Entry> entries;
    std::filesystem::path base_dir; // relative paths resolve against this

    static ConfigFile parse(std::istream &in, std::filesystem::path base_dir = ".");
    static ConfigFile load(const std::filesystem::path &path);
};

struct SessionConfig
{
    std::filesystem::path base_dir;

    // scene
    std::filesystem::path footprints;
    std::optional<std::filesystem::path> rtmesh; // precomputed RtMesh
    ExtrudeOptions extrude;
    SimplifyConfig simplify;
    std::vector<Material> extra_materials;
    std::vector<std::pair<std::string, std::string>> material_rules; // class -> material

    // platform and sensing
    std::optional<std::filesystem::path> trajectory;
    std::string platform = "uav";
    SensorSuite sensors;
    std::uint64_t seed = 1;
    Nanos tick = kDefaultTick;

    // base station and link
    std::string tx_id = "bs0";
    Vec3 tx_position;
    Vec3 array_boresight{0, 0, 1};
    LinkSetup link;
    double cir_rate_hz = 10.0;

    // grid scan
    GridSpec grid;
    unsigned workers = 1;

    // beam prediction
    std::size_t knn_k = 5;
    double train_fraction = 0.8;
    std::uint64_t split_seed = 1;
    Nanos sync_slop{0};
    std::optional<Pose> bs_camera; // pixel features when set

    std::filesystem::path output_dir = "out";

    static SessionConfig from(const ConfigFile &file);

    Transceiver tx() const;
    std::string pose_topic() const { return "/platform/" + platform + "/pose"; }
};

SessionConfig load_session_config(const std::filesystem::path &path);

struct SceneBundle
{
    SceneAsset asset;
    RtMesh rt;
    MaterialLibrary materials;
    SimplifyStats stats;
};

// Extrudes footprints, assigns materials and simplifies (or loads and
// verifies a precomputed RtMesh). Throws SceneError / ConfigError.
SceneBundle build_scene(const SessionConfig &cfg);

// Observers for audits and tests.
struct SessionHooks
{
    std::function<void(Bus &)> on_start;
    std::function<void(SimTime, const FrameTree &)> after_tick;
};

struct SessionResult
{
    std::size_t ticks = 0;
    std::size_t cirs = 0;
    std::size_t kpis = 0;
    std::size_t records = 0;
};

// Online: drives clock, front end, ray tracer and link evaluator tick by
// tick. Replay: plays `replay_bag` (channel topics in it are regenerated,
// not copied) and stops at its end. Everything is recorded to `out_bag`.
SessionResult run_session(const SessionConfig &cfg, const std::filesystem::path &out_bag,
                          const std::optional<std::filesystem::path> &replay_bag = std::nullopt,
                          const SessionHooks &hooks = {});

// Front end only; the result is a trajectory bag for replay sessions.
SessionResult record_trajectory(const SessionConfig &cfg, const std::filesystem::path &out_bag);

Ckm run_ckm(const SessionConfig &cfg, const SceneBundle &scene);

struct BeampredResult
{
    std::vector<Sample> dataset;
    TopKReport report;
};

// Dataset from a session bag when given, else from a grid scan.
BeampredResult run_beampred(const SessionConfig &cfg, const std::optional<std::filesystem::path> &bag);

} // namespace isac
