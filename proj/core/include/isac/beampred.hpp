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

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "isac/bus.hpp"
#include "isac/ckm.hpp"
#include "isac/sensing.hpp"

namespace isac
{

class DatasetError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

struct Sample
{
    SimTime stamp;
    Vec3 position;
    std::optional<std::array<double, 2>> pixel;
    std::uint32_t label = 0;
    bool operator==(const Sample &) const = default;
};

// Fixed camera observing the platform; its ground-truth pose comes from
// `pose_topic` (nav_msgs/Odometry) synchronized with the other streams.
struct DatasetCamera
{
    CameraIntrinsics intrinsics;
    Pose pose;
    std::string pose_topic;
};

struct DatasetOptions
{
    Nanos slop{0};
    std::string gnss_topic = "/gnss";
    std::string kpi_topic = std::string(kKpiTopic);
    std::optional<DatasetCamera> camera;
};

// Joins GNSS fixes and link KPIs (plus platform poses with a camera) by
// approximate time. Throws DatasetError if a required topic is absent.
std::vector<Sample> build_dataset(const std::vector<Envelope> &envelopes, const DatasetOptions &opt);
std::vector<Sample> build_dataset(const std::filesystem::path &bag, const DatasetOptions &opt);

// One sample per cell with a finite best beam, positioned at the cell
// centre; stamps count cells in row-major order.
std::vector<Sample> dataset_from_ckm(const Ckm &ckm);

// `t x y z [u v] beam` per line.
void write_dataset(std::ostream &os, const std::vector<Sample> &samples);

// Beams voted by the k nearest training positions, ranked by votes, then
// smaller mean neighbour distance, then lower index. Every other beam seen
// in training follows, ordered by its nearest training position, then index.
// Equidistant neighbours resolve to the earlier training sample. Throws
// DatasetError on an empty training set or k = 0.
std::vector<std::uint32_t> knn_predict(const std::vector<Sample> &train, const Vec3 &query, std::size_t k);

using Predictor = std::function<std::vector<std::uint32_t>(const Sample &)>;

struct TopKReport
{
    std::vector<std::size_t> ks;
    std::vector<double> accuracy; // parallel to ks
    std::size_t samples = 0;

    double at(std::size_t k) const;
    bool operator==(const TopKReport &) const = default;
};

TopKReport evaluate_topk(const Predictor &predict, const std::vector<Sample> &test,
                         const std::vector<std::size_t> &ks = {1, 3, 5});

// Seeded Fisher-Yates shuffle, then the first floor(fraction * n) samples
// train and the rest test.
std::pair<std::vector<Sample>, std::vector<Sample>> split_dataset(std::vector<Sample> samples, double train_fraction,
                                                                  std::uint64_t seed);

} // namespace isac
