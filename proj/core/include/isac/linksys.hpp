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

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "isac/raytracer.hpp"

namespace isac
{

// Uniform planar array in its own frame: element (mx, my) sits at
// (mx*d, my*d, 0) wavelengths, boresight +z, flat index n = mx*ny + my.
struct ArrayConfig
{
    std::uint32_t nx = 8, ny = 8;
    double spacing = 0.5; // wavelengths
    Pose mount;           // array frame relative to the transceiver pose

    std::size_t size() const { return std::size_t(nx) * ny; }
    void validate() const;
};

// Beam b = bx*ny + by: w_b[n] = exp(j 2 pi (mx bx/nx + my by/ny)) / sqrt(N).
struct DftCodebook
{
    std::uint32_t nx = 0, ny = 0;
    std::vector<std::vector<cplx>> beams;

    static DftCodebook make(const ArrayConfig &a);
    std::size_t size() const { return beams.size(); }
};

struct OfdmConfig
{
    std::uint32_t subcarriers = 64;
    double spacing_hz = 30e3;
    double noise_figure_db = 7.0;
    double temperature_k = 290.0;

    double noise_power_w() const;
    void validate() const;
};

struct BlerCurve
{
    double threshold_db = 5.0;
    double slope_per_db = 1.0;

    double operator()(double sinr_db) const;
};

// Unit-norm response for a unit direction in the array frame.
std::vector<cplx> steering_vector(const ArrayConfig &a, const Vec3 &direction);

// Direction expressed in the array frame of a transceiver at `tx_pose`.
Vec3 to_array_frame(const ArrayConfig &a, const Pose &tx_pose, const Vec3 &world_dir);

// h[k * elements + n].
struct Cfr
{
    std::size_t elements = 0, subcarriers = 0;
    std::vector<cplx> h;

    cplx at(std::size_t n, std::size_t k) const { return h[k * elements + n]; }
};

Cfr cir_to_cfr(const Cir &cir, const ArrayConfig &a, const Pose &tx_pose, const OfdmConfig &ofdm);

// w_b^H H[:, k].
cplx beam_response(const Cfr &h, const std::vector<cplx> &w, std::size_t k);

struct Interferer
{
    Cfr h;
    std::uint32_t beam = 0;
    double tx_power_dbm = 30.0;
};

inline constexpr std::string_view kKpiTopic = "/channel/kpi";

// Wire layout after the header: str tx_id, str rx_id, u16 best_beam, f64
// sinr_eff_db, f64 bler, f64 rate, u32 count + f64 per-beam sinr_eff_db.
struct LinkKpi
{
    static constexpr std::string_view kSchema = "isac_msgs/LinkKpi";
    Header header;
    std::string tx_id, rx_id;
    std::uint16_t best_beam = 0;
    double sinr_eff_db = 0;
    double bler = 1;
    double rate = 0; // bit/s/Hz
    std::vector<double> beam_sinr_db;

    void encode(ByteWriter &w) const;
    static LinkKpi decode(ByteReader &r);
    Header header_view() const { return header; }
    bool operator==(const LinkKpi &) const = default;
};

// Throws std::invalid_argument for an empty codebook or mismatched sizes.
// Header and ids are left for the caller.
LinkKpi evaluate_link(const Cfr &h, const DftCodebook &cb, const OfdmConfig &ofdm, double tx_power_dbm,
                      const std::vector<Interferer> &interferers = {}, const BlerCurve &bler = {});

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }
inline double dbm_to_watt(double dbm) { return db_to_linear(dbm - 30.0); }

} // namespace isac
