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
#include <stdexcept>
#include <string>
#include <vector>

#include "isac/linksys.hpp"
#include "isac/raytracer.hpp"

namespace isac
{

class CkmError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

struct GridSpec
{
    double x0 = 0, y0 = 0;
    std::uint32_t nx = 1, ny = 1;
    double cell = 1.0;
    double rx_height = 1.5;

    void validate() const;
    std::size_t cells() const { return std::size_t(nx) * ny; }
    Vec3 center(std::uint32_t i, std::uint32_t j) const
    {
        return {x0 + (i + 0.5) * cell, y0 + (j + 0.5) * cell, rx_height};
    }
    bool operator==(const GridSpec &) const = default;
};

inline constexpr std::size_t kLayerCount = 7;
enum LayerIndex : std::size_t
{
    kPathLoss,
    kRxPower,
    kDelaySpread,
    kAngularSpread,
    kSinrEff,
    kRate,
    kBestBeam
};
inline constexpr std::array<const char *, kLayerCount> kLayerNames{
    "path_loss_db", "rx_power_dbm", "rms_delay_spread_s", "angular_spread_rad", "sinr_eff_db", "rate_bpshz",
    "best_beam"};
inline constexpr std::array<const char *, kLayerCount> kLayerUnits{"dB", "dBm", "s", "rad", "dB", "bit/s/Hz",
                                                                   "index"};

using CellValues = std::array<double, kLayerCount>;

struct CkmLayer
{
    std::string name, units;
    std::vector<float> values; // j * nx + i, NaN = nodata
};

struct LinkSetup
{
    RtConfig rt;
    ArrayConfig array;
    OfdmConfig ofdm;
    BlerCurve bler;
    double tx_power_dbm = 30.0;
};

struct Ckm
{
    GridSpec grid;
    Pose tx_pose;
    std::uint64_t digest = 0;
    std::vector<CkmLayer> layers; // kLayerNames order

    const CkmLayer &layer(const std::string &name) const;
    CellValues cell(std::uint32_t i, std::uint32_t j) const;
};

// mean_k |w^H H[:, k]|^2 / sum_p |a_p|^2 (linear).
double beam_gain(const Cfr &h, const std::vector<cplx> &w, const std::vector<PropPath> &paths);

// Path loss and rx power use incoherent combining over paths. Arrival
// azimuths point back towards the source. Empty paths give all NaN.
CellValues reduce_cell(const std::vector<PropPath> &paths, const LinkKpi &kpi, double beam_gain_db,
                       double tx_power_dbm);

// FNV-1a over the scene geometry/materials, tx, grid and link settings.
std::uint64_t ckm_digest(const RtScene &scene, const Transceiver &tx, const GridSpec &grid, const LinkSetup &s);

// Odd crossing count along a fixed upward ray.
bool point_inside_geometry(const Bvh &bvh, const Vec3 &p);

// Parallel over cells with results written back by cell index, so the
// output does not depend on `workers`. Throws CkmError when the TX lies
// inside closed geometry.
Ckm generate_ckm(const RtScene &scene, const Transceiver &tx, const GridSpec &grid, const LinkSetup &setup,
                 unsigned workers = 1);

// One cell evaluated standalone (also used by generate_ckm).
CellValues evaluate_cell(const PathSolver &solver, const Transceiver &rx, const Pose &tx_pose,
                         const LinkSetup &setup, const DftCodebook &cb);

// Header line `CKM1 <layer> <nx> <ny> <x0> <y0> <cell> <rx_h> <units>\n`
// then nx*ny little-endian float32.
void write_raster(const std::filesystem::path &path, const GridSpec &g, const CkmLayer &layer);
struct Raster
{
    GridSpec grid;
    CkmLayer layer;
};
Raster read_raster(const std::filesystem::path &path);

// Binary PPM through a 5-stop ramp (dark purple, blue, teal, green,
// yellow) scaled min..max over finite cells; NaN is black. Row 0 of the
// image is the northmost grid row.
void write_heatmap(const std::filesystem::path &path, const GridSpec &g, const CkmLayer &layer);
std::array<std::uint8_t, 3> ramp_color(double t);

// <dir>/<layer>.ckm and <dir>/<layer>.ppm for every layer.
void write_outputs(const Ckm &ckm, const std::filesystem::path &dir);

// Values of the containing cell; points on the outer boundary map to the
// nearest cell. Throws std::out_of_range outside the grid.
CellValues lookup(const Ckm &ckm, double x, double y);

} // namespace isac
