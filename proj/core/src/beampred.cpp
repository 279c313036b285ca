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

#include "isac/beampred.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

#include "isac/bag.hpp"
#include "isac/messages.hpp"
#include "isac/prng.hpp"
#include "isac/text.hpp"

namespace isac
{

std::vector<Sample> build_dataset(const std::vector<Envelope> &envelopes, const DatasetOptions &opt)
{
    std::vector<std::string> topics{opt.gnss_topic, opt.kpi_topic};
    if (opt.camera)
        topics.push_back(opt.camera->pose_topic);
    std::vector<std::vector<Envelope>> streams(topics.size());
    for (const auto &e : envelopes)
        for (std::size_t s = 0; s < topics.size(); ++s)
            if (e.topic == topics[s])
                streams[s].push_back(e);
    for (std::size_t s = 0; s < topics.size(); ++s)
        if (streams[s].empty())
            throw DatasetError("dataset: topic " + topics[s] + " missing");

    std::vector<Sample> out;
    for (const auto &tuple : approx_sync(streams, opt.slop))
    {
        const auto fix = decode_message<GnssFixMsg>(tuple[0]);
        const auto kpi = decode_message<LinkKpi>(tuple[1]);
        Sample s;
        s.stamp = kpi.header.stamp;
        s.position = fix.position;
        s.label = kpi.best_beam;
        if (opt.camera)
        {
            const auto odo = decode_message<OdometryMsg>(tuple[2]);
            s.pixel = project_point(opt.camera->intrinsics, opt.camera->pose, odo.pose.translation);
        }
        out.push_back(s);
    }
    return out;
}

std::vector<Sample> build_dataset(const std::filesystem::path &bag, const DatasetOptions &opt)
{
    return build_dataset(read_bag(bag), opt);
}

std::vector<Sample> dataset_from_ckm(const Ckm &ckm)
{
    std::vector<Sample> out;
    const auto &beam = ckm.layer(kLayerNames[kBestBeam]).values;
    for (std::uint32_t j = 0; j < ckm.grid.ny; ++j)
        for (std::uint32_t i = 0; i < ckm.grid.nx; ++i)
        {
            const std::size_t c = std::size_t(j) * ckm.grid.nx + i;
            if (!std::isfinite(beam[c]))
                continue;
            Sample s;
            s.stamp = SimTime{c};
            s.position = ckm.grid.center(i, j);
            s.label = static_cast<std::uint32_t>(beam[c]);
            out.push_back(s);
        }
    return out;
}

void write_dataset(std::ostream &os, const std::vector<Sample> &samples)
{
    for (const auto &s : samples)
    {
        os << fmt_double(s.stamp.seconds()) << ' ' << fmt_double(s.position.x) << ' ' << fmt_double(s.position.y)
           << ' ' << fmt_double(s.position.z);
        if (s.pixel)
            os << ' ' << fmt_double((*s.pixel)[0]) << ' ' << fmt_double((*s.pixel)[1]);
        os << ' ' << s.label << '\n';
    }
}

std::vector<std::uint32_t> knn_predict(const std::vector<Sample> &train, const Vec3 &query, std::size_t k)
{
    if (train.empty())
        throw DatasetError("knn: empty training set");
    if (k == 0)
        throw DatasetError("knn: k must be >= 1");
    k = std::min(k, train.size());

    std::vector<std::pair<double, std::size_t>> d(train.size());
    for (std::size_t i = 0; i < train.size(); ++i)
        d[i] = {distance(train[i].position, query), i};
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());

    struct Tally
    {
        std::size_t votes = 0;
        double dist = 0;
    };
    std::map<std::uint32_t, Tally> tally;
    for (std::size_t n = 0; n < k; ++n)
    {
        auto &t = tally[train[d[n].second].label];
        ++t.votes;
        t.dist += d[n].first;
    }
    std::vector<std::uint32_t> ranked;
    for (const auto &[beam, t] : tally)
        ranked.push_back(beam);
    std::stable_sort(ranked.begin(), ranked.end(), [&](std::uint32_t a, std::uint32_t b) {
        const auto &ta = tally[a], &tb = tally[b];
        if (ta.votes != tb.votes)
            return ta.votes > tb.votes;
        return ta.dist / double(ta.votes) < tb.dist / double(tb.votes);
    });

    // Tail: unvoted beams by nearest occurrence.
    std::map<std::uint32_t, double> nearest;
    for (const auto &[dist, i] : d)
    {
        const auto label = train[i].label;
        if (tally.count(label))
            continue;
        auto [it, fresh] = nearest.emplace(label, dist);
        if (!fresh)
            it->second = std::min(it->second, dist);
    }
    std::vector<std::pair<double, std::uint32_t>> tail;
    for (const auto &[beam, dist] : nearest)
        tail.emplace_back(dist, beam);
    std::sort(tail.begin(), tail.end());
    for (const auto &[dist, beam] : tail)
        ranked.push_back(beam);
    return ranked;
}

double TopKReport::at(std::size_t k) const
{
    for (std::size_t i = 0; i < ks.size(); ++i)
        if (ks[i] == k)
            return accuracy[i];
    throw std::out_of_range("top-k report has no k = " + std::to_string(k));
}

TopKReport evaluate_topk(const Predictor &predict, const std::vector<Sample> &test, const std::vector<std::size_t> &ks)
{
    if (test.empty())
        throw DatasetError("top-k: empty test set");
    TopKReport r{ks, std::vector<double>(ks.size(), 0.0), test.size()};
    std::vector<std::size_t> hits(ks.size(), 0);
    for (const auto &s : test)
    {
        const auto ranked = predict(s);
        const auto pos = std::find(ranked.begin(), ranked.end(), s.label);
        const auto rank = static_cast<std::size_t>(pos - ranked.begin());
        for (std::size_t i = 0; i < ks.size(); ++i)
            if (pos != ranked.end() && rank < ks[i])
                ++hits[i];
    }
    for (std::size_t i = 0; i < ks.size(); ++i)
        r.accuracy[i] = double(hits[i]) / double(test.size());
    return r;
}

std::pair<std::vector<Sample>, std::vector<Sample>> split_dataset(std::vector<Sample> samples, double train_fraction,
                                                                  std::uint64_t seed)
{
    if (!(train_fraction >= 0 && train_fraction <= 1))
        throw DatasetError("split: fraction must be in [0, 1]");
    Prng rng(seed);
    for (std::size_t i = samples.size(); i > 1; --i)
        std::swap(samples[i - 1], samples[rng.below(i)]);
    const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * double(samples.size())));
    std::vector<Sample> train(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<Sample> test(samples.begin() + static_cast<std::ptrdiff_t>(n_train), samples.end());
    return {std::move(train), std::move(test)};
}

} // namespace isac
