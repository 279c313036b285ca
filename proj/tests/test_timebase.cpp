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

#include <gtest/gtest.h>

#include <random>

#include "isac/messages.hpp"
#include "isac/timebase.hpp"
#include "test_support.hpp"

using namespace isac;
using namespace std::chrono_literals;

namespace
{

SimTime at_ms(std::int64_t ms) { return SimTime{static_cast<std::uint64_t>(ms) * 1'000'000u}; }

void expect_pose_near(const Pose &a, const Pose &b, double tol)
{
    EXPECT_NEAR(distance(a.translation, b.translation), 0.0, tol);
    // q and -q are the same rotation.
    const double d = std::abs(a.rotation.w * b.rotation.w + a.rotation.x * b.rotation.x +
                              a.rotation.y * b.rotation.y + a.rotation.z * b.rotation.z);
    EXPECT_NEAR(d, 1.0, tol);
}

} // namespace

TEST(Clock, AdvanceTenMillis)
{
    SimClock clock;
    EXPECT_EQ(clock.now().ns, 0u);
    EXPECT_EQ(clock.advance(10ms).ns, 10'000'000u);
}

TEST(Clock, Additivity)
{
    SimClock a, b;
    a.advance(5ms);
    a.advance(5ms);
    b.advance(10ms);
    EXPECT_EQ(a.now(), b.now());
}

TEST(Clock, RejectsNonPositiveStep)
{
    SimClock clock;
    EXPECT_THROW(clock.advance(0ns), std::invalid_argument);
    EXPECT_THROW(clock.advance(-1ns), std::invalid_argument);
}

TEST(Clock, PublishesStrictlyIncreasingTimes)
{
    Bus bus;
    auto sub = bus.subscribe(kClockTopic);
    SimClock clock(&bus);
    for (int i = 0; i < 50; ++i)
        clock.advance(Nanos{1 + i % 7});
    std::uint64_t prev = 0;
    std::uint32_t seq = 0;
    for (const auto &e : sub->drain())
    {
        const auto msg = decode_message<ClockMsg>(e);
        EXPECT_GT(msg.time.ns, prev);
        EXPECT_EQ(msg.time, e.header.stamp);
        EXPECT_EQ(e.seq, seq++);
        prev = msg.time.ns;
    }
    EXPECT_EQ(seq, 50u);
}

TEST(FrameTree, InsertAndLookup)
{
    FrameTree tree;
    const Pose p{{1, 2, 3}, Quat::from_yaw(0.3)};
    tree.set_transform({at_ms(0), "world", "tx", p, false});
    expect_pose_near(tree.lookup_transform("world", "tx", at_ms(0)), p, 1e-15);
}

TEST(FrameTree, CycleRejected)
{
    FrameTree tree;
    tree.set_transform({at_ms(0), "world", "tx", Pose::identity(), false});
    EXPECT_THROW(tree.set_transform({at_ms(0), "tx", "world", Pose::identity(), false}), FrameTreeError);
}

TEST(FrameTree, SecondParentRejected)
{
    FrameTree tree;
    tree.set_transform({at_ms(0), "world", "a", Pose::identity(), false});
    tree.set_transform({at_ms(0), "world", "b", Pose::identity(), false});
    tree.set_transform({at_ms(0), "a", "c", Pose::identity(), false});
    EXPECT_THROW(tree.set_transform({at_ms(0), "b", "c", Pose::identity(), false}), FrameTreeError);
    EXPECT_THROW(tree.set_transform({at_ms(0), "nowhere", "d", Pose::identity(), false}), FrameTreeError);
}

TEST(FrameTree, IdentityForSameFrame)
{
    FrameTree tree;
    tree.set_transform({at_ms(0), "world", "a", {{4, 5, 6}, Quat::from_yaw(1.0)}, false});
    expect_pose_near(tree.lookup_transform("a", "a", at_ms(0)), Pose::identity(), 0.0);
    expect_pose_near(tree.lookup_transform("world", "world", at_ms(123)), Pose::identity(), 0.0);
}

TEST(FrameTree, MidpointInterpolation)
{
    FrameTree tree;
    tree.set_transform({at_ms(0), "world", "a", {{1, 0, 0}, Quat::identity()}, false});
    tree.set_transform({at_ms(1000), "world", "a", {{3, 0, 0}, Quat::identity()}, false});
    const Pose p = tree.lookup_transform("world", "a", at_ms(500));
    EXPECT_NEAR(distance(p.translation, {2, 0, 0}), 0.0, 1e-12);
}

// Out-of-order inserts are sorted; between stamps the result equals a
// manual lerp/slerp of the bracketing samples.
TEST(FrameTree, OutOfOrderMatchesManualInterpolation)
{
    std::mt19937_64 rng(7);
    FrameTree tree;
    std::vector<std::pair<SimTime, Pose>> samples;
    for (int i : {4, 1, 3, 0, 2})
    {
        const Pose p = testing_support::random_pose(rng, 10.0);
        samples.push_back({at_ms(100 * i), p});
        tree.set_transform({at_ms(100 * i), "world", "a", p, false});
    }
    std::sort(samples.begin(), samples.end(), [](auto &x, auto &y) { return x.first < y.first; });
    std::uniform_int_distribution<std::int64_t> pick(0, 399'999'999);
    for (int n = 0; n < 200; ++n)
    {
        const SimTime t{static_cast<std::uint64_t>(pick(rng))};
        const std::size_t k = t.ns / 100'000'000u;
        const auto &[t0, p0] = samples[k];
        const auto &[t1, p1] = samples[k + 1];
        const double s = static_cast<double>(t.ns - t0.ns) / static_cast<double>(t1.ns - t0.ns);
        const Pose expect{p0.translation * (1 - s) + p1.translation * s, slerp(p0.rotation, p1.rotation, s)};
        expect_pose_near(tree.lookup_transform("world", "a", t), expect, 1e-9);
    }
}

TEST(FrameTree, ExactStampReturnsStoredPose)
{
    std::mt19937_64 rng(3);
    FrameTree tree;
    std::vector<Pose> poses;
    for (int i = 0; i < 5; ++i)
    {
        poses.push_back(testing_support::random_pose(rng, 5.0));
        tree.set_transform({at_ms(10 * i), "world", "a", poses.back(), false});
    }
    for (int i = 0; i < 5; ++i)
    {
        const Pose p = tree.lookup_transform("world", "a", at_ms(10 * i));
        EXPECT_EQ(p.translation, poses[i].translation);
        EXPECT_EQ(p.rotation, poses[i].rotation);
    }
}

TEST(FrameTree, ExtrapolationSlack)
{
    FrameTree tree; // slack = one 10 ms tick
    tree.set_transform({at_ms(100), "world", "a", {{1, 0, 0}, Quat::identity()}, false});
    EXPECT_NO_THROW(tree.lookup_transform("world", "a", at_ms(110)));
    EXPECT_THROW(tree.lookup_transform("world", "a", at_ms(111)), FrameTreeError);
    EXPECT_THROW(tree.lookup_transform("world", "a", at_ms(99)), FrameTreeError);
    EXPECT_THROW(tree.lookup_transform("world", "nope", at_ms(100)), FrameTreeError);
}

TEST(FrameTree, StaticEdgeHoldsForAllTimes)
{
    FrameTree tree;
    tree.set_transform({at_ms(500), "world", "mount", {{0, 0, 1}, Quat::identity()}, true});
    EXPECT_NO_THROW(tree.lookup_transform("world", "mount", at_ms(0)));
    EXPECT_NO_THROW(tree.lookup_transform("world", "mount", at_ms(100000)));
}

// Random trees: lookup along world->...->leaf equals hand-composed edges,
// and lookup(a,b) is the inverse of lookup(b,a).
TEST(FrameTree, ManualChainOracleAndInverse)
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial)
    {
        FrameTree tree;
        std::vector<std::string> names{"world"};
        std::vector<int> parent{-1};
        std::vector<std::array<Pose, 2>> edge{{}};
        for (int i = 1; i < 8; ++i)
        {
            const int p = std::uniform_int_distribution<int>(0, i - 1)(rng);
            names.push_back("f" + std::to_string(i));
            parent.push_back(p);
            edge.push_back({testing_support::random_pose(rng, 3.0), testing_support::random_pose(rng, 3.0)});
            tree.set_transform({at_ms(0), names[p], names[i], edge[i][0], false});
            tree.set_transform({at_ms(1000), names[p], names[i], edge[i][1], false});
        }
        const double s = std::uniform_real_distribution<double>(0, 1)(rng);
        const SimTime t{static_cast<std::uint64_t>(s * 1e9)};
        const double sf = static_cast<double>(t.ns) / 1e9;
        auto manual_root = [&](int f) {
            Pose acc = Pose::identity();
            for (; f != 0; f = parent[f])
                acc = pose_compose(pose_interpolate(edge[f][0], edge[f][1], sf), acc);
            return acc;
        };
        for (int a = 0; a < 8; ++a)
            for (int b = 0; b < 8; ++b)
            {
                const Pose got = tree.lookup_transform(names[a], names[b], t);
                const Pose want = pose_compose(pose_inverse(manual_root(a)), manual_root(b));
                expect_pose_near(got, want, 1e-9);
                const Pose back = tree.lookup_transform(names[b], names[a], t);
                expect_pose_near(pose_compose(got, back), Pose::identity(), 1e-9);
            }
    }
}

TEST(FrameTree, RetentionKeepsNewest)
{
    FrameTree tree;
    tree.set_retention(Nanos{20'000'000});
    for (int i = 0; i < 10; ++i)
        tree.set_transform({at_ms(10 * i), "world", "a", {{double(i), 0, 0}, Quat::identity()}, false});
    EXPECT_THROW(tree.lookup_transform("world", "a", at_ms(50)), FrameTreeError);
    EXPECT_NEAR(tree.lookup_transform("world", "a", at_ms(75)).translation.x, 7.5, 1e-12);
}
