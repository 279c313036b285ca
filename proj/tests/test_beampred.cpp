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

#include <map>
#include <random>
#include <sstream>

#include "ckm_oracle.hpp"
#include "isac/bag.hpp"
#include "isac/beampred.hpp"
#include "isac/messages.hpp"

using namespace isac;
using namespace std::chrono_literals;

namespace
{

Envelope fix_at(Bus &bus, SimTime t, const Vec3 &p)
{
    GnssFixMsg m;
    m.header = {t, "world"};
    m.position = p;
    return publish_message(bus, "/gnss", m);
}

Envelope kpi_at(Bus &bus, SimTime t, std::uint16_t beam)
{
    LinkKpi k;
    k.header = {t, "world"};
    k.best_beam = beam;
    k.beam_sinr_db = {1.0};
    return publish_message(bus, kKpiTopic, k);
}

Envelope pose_at(Bus &bus, SimTime t, const Vec3 &p)
{
    OdometryMsg o;
    o.header = {t, "world"};
    o.child_frame = "uav";
    o.pose.translation = p;
    return publish_message(bus, "/platform/uav/pose", o);
}

SimTime ms(std::uint64_t v) { return SimTime{v * 1'000'000}; }

std::vector<Sample> random_samples(std::mt19937_64 &rng, int n, std::uint32_t beams)
{
    std::uniform_real_distribution<double> u(-50, 50);
    std::vector<Sample> s(n);
    for (int i = 0; i < n; ++i)
    {
        s[i].stamp = SimTime{std::uint64_t(i)};
        s[i].position = {u(rng), u(rng), 1.5};
        s[i].label = static_cast<std::uint32_t>(rng() % beams);
    }
    return s;
}

// Full sort of every training point, then vote counting from scratch.
std::vector<std::uint32_t> oracle_rank(const std::vector<Sample> &train, const Vec3 &q, std::size_t k)
{
    std::vector<std::size_t> idx(train.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return distance(train[a].position, q) < distance(train[b].position, q);
    });
    std::vector<std::uint32_t> beams;
    std::vector<double> votes, dsum;
    for (std::size_t n = 0; n < std::min(k, idx.size()); ++n)
    {
        const auto &s = train[idx[n]];
        auto it = std::find(beams.begin(), beams.end(), s.label);
        if (it == beams.end())
        {
            beams.push_back(s.label);
            votes.push_back(0);
            dsum.push_back(0);
            it = beams.end() - 1;
        }
        const auto j = static_cast<std::size_t>(it - beams.begin());
        votes[j] += 1;
        dsum[j] += distance(s.position, q);
    }
    std::vector<std::size_t> order(beams.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (votes[a] != votes[b])
            return votes[a] > votes[b];
        if (dsum[a] / votes[a] != dsum[b] / votes[b])
            return dsum[a] / votes[a] < dsum[b] / votes[b];
        return beams[a] < beams[b];
    });
    std::vector<std::uint32_t> out;
    for (auto i : order)
        out.push_back(beams[i]);
    // Every other label, by its closest training sample, then label.
    std::map<std::uint32_t, double> rest;
    for (const auto &s : train)
        if (std::find(out.begin(), out.end(), s.label) == out.end())
        {
            const double dl = distance(s.position, q);
            if (!rest.count(s.label) || dl < rest[s.label])
                rest[s.label] = dl;
        }
    std::vector<std::pair<double, std::uint32_t>> tail;
    for (const auto &[label, dl] : rest)
        tail.emplace_back(dl, label);
    std::sort(tail.begin(), tail.end());
    for (const auto &p : tail)
        out.push_back(p.second);
    return out;
}

} // namespace

TEST(Dataset, AlignedStampsGiveOneSamplePerKpi)
{
    Bus bus;
    std::vector<Envelope> env;
    for (std::uint64_t i = 0; i < 10; ++i)
    {
        env.push_back(fix_at(bus, ms(100 * i), {double(i), 0, 20}));
        env.push_back(kpi_at(bus, ms(100 * i), static_cast<std::uint16_t>(i % 4)));
    }
    DatasetOptions opt;
    const auto ds = build_dataset(env, opt);
    ASSERT_EQ(ds.size(), 10u);
    for (std::size_t i = 0; i < ds.size(); ++i)
    {
        EXPECT_EQ(ds[i].label, i % 4);
        EXPECT_EQ(ds[i].position.x, double(i));
        EXPECT_FALSE(ds[i].pixel);
    }
}

TEST(Dataset, ZeroSlopWithOffsetsIsEmpty)
{
    Bus bus;
    std::vector<Envelope> env;
    for (std::uint64_t i = 0; i < 10; ++i)
    {
        env.push_back(fix_at(bus, ms(100 * i), {}));
        env.push_back(kpi_at(bus, ms(100 * i + 1), 0));
    }
    EXPECT_TRUE(build_dataset(env, DatasetOptions{}).empty());
}

TEST(Dataset, SlopAudit)
{
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<std::uint64_t> jitter(0, 30);
    Bus bus;
    std::vector<Envelope> fixes, kpis;
    for (std::uint64_t i = 0; i < 200; ++i)
    {
        fixes.push_back(fix_at(bus, ms(100 * i + jitter(rng)), {double(i), 0, 0}));
        kpis.push_back(kpi_at(bus, ms(100 * i + jitter(rng)), 1));
    }
    std::vector<Envelope> all = fixes;
    all.insert(all.end(), kpis.begin(), kpis.end());
    DatasetOptions opt;
    opt.slop = 10ms;
    const auto ds = build_dataset(all, opt);
    EXPECT_GT(ds.size(), 50u);
    EXPECT_LT(ds.size(), 200u);
    for (const auto &s : ds)
    {
        const SimTime fix_stamp = fixes[static_cast<std::size_t>(s.position.x)].header.stamp;
        const auto gap = std::max(fix_stamp.ns, s.stamp.ns) - std::min(fix_stamp.ns, s.stamp.ns);
        EXPECT_LE(gap, 10'000'000u);
    }
}

TEST(Dataset, MissingTopicThrows)
{
    Bus bus;
    EXPECT_THROW(build_dataset({fix_at(bus, ms(0), {})}, DatasetOptions{}), DatasetError);
}

TEST(Dataset, CameraProjectsGroundTruthPose)
{
    Bus bus;
    DatasetCamera cam;
    cam.pose_topic = "/platform/uav/pose";
    std::vector<Envelope> env;
    for (std::uint64_t i = 0; i < 5; ++i)
    {
        const Vec3 truth{30, -2.0 + i, 1.0};
        env.push_back(fix_at(bus, ms(100 * i), truth + Vec3{0.3, 0.1, 0}));
        env.push_back(kpi_at(bus, ms(100 * i), 2));
        env.push_back(pose_at(bus, ms(100 * i), truth));
    }
    DatasetOptions opt;
    opt.camera = cam;
    const auto ds = build_dataset(env, opt);
    ASSERT_EQ(ds.size(), 5u);
    for (std::size_t i = 0; i < ds.size(); ++i)
    {
        const auto want = project_point(cam.intrinsics, cam.pose, {30, -2.0 + double(i), 1.0});
        ASSERT_TRUE(want);
        ASSERT_TRUE(ds[i].pixel);
        EXPECT_EQ(*ds[i].pixel, *want);
    }
    std::ostringstream os;
    write_dataset(os, {ds[0]});
    EXPECT_EQ(os.str().substr(0, 8), "0 30.3 -");
}

TEST(Dataset, FromBagFile)
{
    Bus bus;
    const auto path = std::filesystem::temp_directory_path() / "isac_dataset.bag";
    {
        BagWriter w(path);
        for (std::uint64_t i = 0; i < 4; ++i)
        {
            w.add(fix_at(bus, ms(100 * i), {double(i), 1, 2}));
            w.add(kpi_at(bus, ms(100 * i), 7));
        }
        w.close();
    }
    const auto ds = build_dataset(path, DatasetOptions{});
    ASSERT_EQ(ds.size(), 4u);
    std::ostringstream os;
    write_dataset(os, ds);
    EXPECT_EQ(os.str(), "0 0 1 2 7\n0.1 1 1 2 7\n0.2 2 1 2 7\n0.3 3 1 2 7\n");
}

TEST(Knn, Examples)
{
    std::mt19937_64 rng(1);
    auto train = random_samples(rng, 50, 8);
    EXPECT_EQ(knn_predict(train, train[17].position, 1).front(), train[17].label);
    for (auto &s : train)
        s.label = 5;
    EXPECT_EQ(knn_predict(train, {3, 4, 0}, 5), std::vector<std::uint32_t>{5});
    train[3].label = 2;
    train[9].label = 1;
    const auto ranked = knn_predict(train, train[0].position, 1);
    EXPECT_EQ(ranked.size(), 3u);
    EXPECT_EQ(ranked.front(), 5u);
    EXPECT_THROW(knn_predict({}, {}, 1), DatasetError);
    EXPECT_THROW(knn_predict(train, {}, 0), DatasetError);
}

TEST(Knn, MatchesExhaustiveOracle)
{
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial)
    {
        const auto train = random_samples(rng, 80, 6);
        const auto queries = random_samples(rng, 10, 1);
        for (std::size_t k : {1u, 3u, 5u, 9u})
            for (const auto &q : queries)
                EXPECT_EQ(knn_predict(train, q.position, k), oracle_rank(train, q.position, k));
    }
}

TEST(TopK, TrainEqualsTestAndMonotone)
{
    std::mt19937_64 rng(4);
    const auto data = random_samples(rng, 300, 16);
    const auto self = evaluate_topk([&](const Sample &s) { return knn_predict(data, s.position, 1); }, data);
    EXPECT_EQ(self.at(1), 1.0);
    EXPECT_EQ(self.samples, 300u);

    const auto [train, test] = split_dataset(data, 0.8, 42);
    const auto r = evaluate_topk([&](const Sample &s) { return knn_predict(train, s.position, 5); }, test);
    EXPECT_LE(r.at(1), r.at(3));
    EXPECT_LE(r.at(3), r.at(5));
    EXPECT_LE(r.at(5), 1.0);
    EXPECT_THROW(r.at(2), std::out_of_range);
}

TEST(Split, SeededAndSized)
{
    std::mt19937_64 rng(6);
    const auto data = random_samples(rng, 101, 4);
    const auto a = split_dataset(data, 0.8, 9);
    const auto b = split_dataset(data, 0.8, 9);
    const auto c = split_dataset(data, 0.8, 10);
    EXPECT_EQ(a.first.size(), 80u);
    EXPECT_EQ(a.second.size(), 21u);
    EXPECT_EQ(a, b);
    EXPECT_NE(a.first, c.first);
    // A permutation: every stamp appears exactly once.
    std::vector<std::uint64_t> stamps;
    for (const auto *part : {&a.first, &a.second})
        for (const auto &s : *part)
            stamps.push_back(s.stamp.ns);
    std::sort(stamps.begin(), stamps.end());
    for (std::size_t i = 0; i < stamps.size(); ++i)
        EXPECT_EQ(stamps[i], i);
}

TEST(TopK, CkmDenseDatasetReproducible)
{
    const testing_support::AbsorberScene s;
    const RtScene scene(testing_support::absorber_mesh(s), testing_support::absorber_library());
    LinkSetup setup;
    setup.rt.max_order = 1;
    setup.array.nx = setup.array.ny = 4;
    setup.ofdm.subcarriers = 8;
    Transceiver tx;
    tx.pose.translation = {0, -40, 25};
    const GridSpec g{-50, -50, 50, 50, 2, 1.5};
    const auto ckm = generate_ckm(scene, tx, g, setup);
    const auto data = dataset_from_ckm(ckm);
    EXPECT_GE(data.size(), 2000u);
    auto run = [&] {
        const auto [train, test] = split_dataset(data, 0.8, 1234);
        return evaluate_topk([&](const Sample &q) { return knn_predict(train, q.position, 5); }, test);
    };
    const auto r1 = run();
    const auto r2 = run();
    EXPECT_EQ(r1, r2);
    EXPECT_GT(r1.at(1), 0.5);
}
