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

#include <atomic>
#include <map>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "isac/bus.hpp"
#include "isac/geometry.hpp"
#include "isac/time.hpp"

namespace isac
{

inline constexpr std::string_view kClockTopic = "/clock";
inline constexpr std::string_view kTfTopic = "/tf";
inline constexpr Nanos kDefaultTick{10'000'000}; // 10 ms

// Simulated clock. One driver advances it; each advance is broadcast on
// /clock when a bus is attached. Wall-clock speed is irrelevant.
class SimClock
{
  public:
    explicit SimClock(Bus *bus = nullptr) : bus_(bus) {}

    SimTime now() const { return {now_.load()}; }

    // Throws std::invalid_argument for dt <= 0.
    SimTime advance(Nanos dt);

    // Moves to `t` without broadcasting (bag playback re-publishes the
    // recorded /clock stream itself). Throws if `t` is in the past.
    void jump_to(SimTime t);

  private:
    Bus *bus_;
    std::atomic<std::uint64_t> now_{0};
};

struct StampedTransform
{
    SimTime stamp;
    std::string parent;
    std::string child;
    Pose pose;              // child frame expressed in the parent frame
    bool is_static = false; // holds for every time once set
    bool operator==(const StampedTransform &) const = default;
};

class FrameTreeError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

// Rooted tree of named frames with time-indexed edge transforms. Readers
// may query concurrently with a writer.
class FrameTree
{
  public:
    explicit FrameTree(std::string root = "world", Nanos extrapolation_slack = kDefaultTick);

    const std::string &root() const { return root_; }

    // Inserts or extends the parent->child edge. The parent must already be
    // registered (the root always is). Throws FrameTreeError on a cycle, a
    // second parent for `child`, or an unknown parent.
    void set_transform(const StampedTransform &tf);

    // Pose of `target` expressed in `source` at time t: maps target-frame
    // coordinates into source-frame coordinates. Edges interpolate
    // linearly in translation and spherically in rotation between stored
    // stamps; queries up to the slack past an edge's newest stamp hold its
    // last pose. Throws FrameTreeError for unknown frames or times outside
    // the stored history.
    Pose lookup_transform(std::string_view source, std::string_view target, SimTime t) const;
    bool can_transform(std::string_view source, std::string_view target, SimTime t) const;

    bool has_frame(std::string_view name) const;
    std::vector<std::string> frames() const;
    std::optional<std::string> parent_of(std::string_view child) const;

    // Drops samples older than `window` behind each edge's newest stamp
    // (at least one sample is kept). Unbounded by default.
    void set_retention(std::optional<Nanos> window) { retention_ = window; }

  private:
    struct Edge
    {
        std::string parent;
        bool is_static = false;
        std::vector<std::pair<SimTime, Pose>> history; // sorted by stamp
    };

    Pose edge_pose(const std::string &child, const Edge &e, SimTime t) const;
    Pose to_root(std::string_view frame, SimTime t) const;

    std::string root_;
    Nanos slack_;
    std::optional<Nanos> retention_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, Edge, std::less<>> edges_; // keyed by child
};

} // namespace isac
