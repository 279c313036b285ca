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

#include "isac/timebase.hpp"

#include <algorithm>
#include <mutex>

#include "isac/messages.hpp"

namespace isac
{

SimTime SimClock::advance(Nanos dt)
{
    if (dt.count() <= 0)
        throw std::invalid_argument("SimClock::advance: dt must be positive");
    const SimTime t{now_.fetch_add(static_cast<std::uint64_t>(dt.count())) + static_cast<std::uint64_t>(dt.count())};
    if (bus_)
        publish_message(*bus_, kClockTopic, ClockMsg{t});
    return t;
}

void SimClock::jump_to(SimTime t)
{
    if (t.ns < now_.load())
        throw std::invalid_argument("SimClock::jump_to: time would go backwards");
    now_.store(t.ns);
}

FrameTree::FrameTree(std::string root, Nanos extrapolation_slack)
    : root_(std::move(root)), slack_(extrapolation_slack)
{
    if (root_.empty())
        throw std::invalid_argument("FrameTree: root frame name is empty");
}

void FrameTree::set_transform(const StampedTransform &tf)
{
    validate_pose(tf.pose);
    if (tf.child.empty() || tf.parent.empty())
        throw FrameTreeError("empty frame name");
    if (tf.child == tf.parent)
        throw FrameTreeError("frame '" + tf.child + "' cannot be its own parent");

    std::unique_lock lock(mutex_);
    if (tf.parent != root_ && !edges_.count(tf.parent))
        throw FrameTreeError("unknown parent frame '" + tf.parent + "'");

    // The child must not be an ancestor of (or equal to) the parent.
    for (std::string f = tf.parent;;)
    {
        if (f == tf.child)
            throw FrameTreeError("edge " + tf.parent + "->" + tf.child + " would create a cycle");
        if (f == root_)
            break;
        f = edges_.at(f).parent;
    }

    auto [it, inserted] = edges_.try_emplace(tf.child);
    Edge &e = it->second;
    if (inserted)
        e.parent = tf.parent;
    else if (e.parent != tf.parent)
        throw FrameTreeError("frame '" + tf.child + "' already has parent '" + e.parent + "'");

    if (tf.is_static)
    {
        e.is_static = true;
        e.history.assign(1, {tf.stamp, tf.pose});
        return;
    }
    e.is_static = false;
    auto pos = std::lower_bound(e.history.begin(), e.history.end(), tf.stamp,
                                [](const auto &h, SimTime s) { return h.first < s; });
    if (pos != e.history.end() && pos->first == tf.stamp)
        pos->second = tf.pose;
    else
        e.history.insert(pos, {tf.stamp, tf.pose});

    if (retention_ && e.history.size() > 1)
    {
        const SimTime newest = e.history.back().first;
        const auto keep_from = std::find_if(e.history.begin(), e.history.end(),
                                            [&](const auto &h) { return newest - h.first <= *retention_; });
        e.history.erase(e.history.begin(), keep_from);
    }
}

Pose FrameTree::edge_pose(const std::string &child, const Edge &e, SimTime t) const
{
    if (e.is_static)
        return e.history.front().second;
    const auto &h = e.history;
    if (t < h.front().first)
        throw FrameTreeError("lookup of '" + child + "' at " + std::to_string(t.ns) + " ns precedes its history");
    if (t >= h.back().first)
    {
        if (t - h.back().first > slack_)
            throw FrameTreeError("lookup of '" + child + "' at " + std::to_string(t.ns) +
                                 " ns is beyond its history plus slack");
        return h.back().second;
    }
    auto hi = std::upper_bound(h.begin(), h.end(), t, [](SimTime s, const auto &x) { return s < x.first; });
    auto lo = std::prev(hi);
    if (lo->first == t)
        return lo->second;
    const double s = static_cast<double>((t - lo->first).count()) / static_cast<double>((hi->first - lo->first).count());
    return pose_interpolate(lo->second, hi->second, s);
}

Pose FrameTree::to_root(std::string_view frame, SimTime t) const
{
    Pose acc = Pose::identity();
    std::string f(frame);
    while (f != root_)
    {
        auto it = edges_.find(f);
        if (it == edges_.end())
            throw FrameTreeError("unknown frame '" + f + "'");
        acc = pose_compose(edge_pose(it->first, it->second, t), acc);
        f = it->second.parent;
    }
    return acc;
}

Pose FrameTree::lookup_transform(std::string_view source, std::string_view target, SimTime t) const
{
    std::shared_lock lock(mutex_);
    if (source != root_ && !edges_.count(source))
        throw FrameTreeError("unknown frame '" + std::string(source) + "'");
    if (target != root_ && !edges_.count(target))
        throw FrameTreeError("unknown frame '" + std::string(target) + "'");
    if (source == target)
        return Pose::identity();
    const Pose root_source = to_root(source, t);
    const Pose root_target = to_root(target, t);
    return pose_compose(pose_inverse(root_source), root_target);
}

bool FrameTree::can_transform(std::string_view source, std::string_view target, SimTime t) const
{
    try
    {
        lookup_transform(source, target, t);
        return true;
    }
    catch (const FrameTreeError &)
    {
        return false;
    }
}

bool FrameTree::has_frame(std::string_view name) const
{
    std::shared_lock lock(mutex_);
    return name == root_ || edges_.count(name) > 0;
}

std::vector<std::string> FrameTree::frames() const
{
    std::shared_lock lock(mutex_);
    std::vector<std::string> out{root_};
    for (const auto &[child, e] : edges_)
        out.push_back(child);
    return out;
}

std::optional<std::string> FrameTree::parent_of(std::string_view child) const
{
    std::shared_lock lock(mutex_);
    auto it = edges_.find(child);
    if (it == edges_.end())
        return std::nullopt;
    return it->second.parent;
}

} // namespace isac
