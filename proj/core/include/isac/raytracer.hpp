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

#include <complex>
#include <optional>
#include <string_view>
#include <cstdint>
#include <string>
#include <vector>

#include "isac/bus.hpp"
#include "isac/bvh.hpp"
#include "isac/bytes.hpp"
#include "isac/geometry.hpp"
#include "isac/scene.hpp"

// Specular image-method ray tracer. Amplitudes use the isotropic-element
// Friis convention a = lambda/(4 pi L) * prod(Gamma_i) * exp(-j 2 pi f tau);
// diffraction and diffuse scattering are not modelled.

namespace isac
{

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kVacuumPermittivity = 8.8541878128e-12;

using cplx = std::complex<double>;

struct RtConfig
{
    double carrier_hz = 3.5e9;
    int max_order = 2; // 0..3
    double tx_power_dbm = 30.0;

    double wavelength() const { return kSpeedOfLight / carrier_hz; }
    void validate() const;
};

struct PropPath
{
    int order = 0;                        // 0 = line of sight
    std::vector<Vec3> vertices;           // tx, reflection points..., rx
    std::vector<std::uint32_t> triangles; // reflecting triangle per bounce
    double length = 0;                    // m
    double delay = 0;                     // s
    cplx amplitude;
    Vec3 departure; // unit, leaving the tx
    Vec3 arrival;   // unit, propagation direction at the rx
    double doppler = 0; // Hz

    bool operator==(const PropPath &) const = default;
};

// Azimuth/elevation of a direction (radians, z up).
double azimuth(const Vec3 &d);
double elevation(const Vec3 &d);

struct Transceiver
{
    Pose pose; // antenna phase centre and array orientation
    Twist twist;
};

// Propagation twin prepared for tracing: BVH plus per-triangle planes and
// materials. Immutable, safe to share across workers.
class RtScene
{
  public:
    RtScene(const RtMesh &mesh, const MaterialLibrary &lib);

    const TriangleMesh &mesh() const { return mesh_; }
    const Bvh &bvh() const { return bvh_; }
    const Material &material(std::uint32_t tri) const { return materials_[tri]; }
    std::size_t size() const { return mesh_.size(); }

    struct Face
    {
        Vec3 a, e0, e1; // corner and edges
        Vec3 normal;    // unit
        double d00, d01, d11, inv_den;
    };
    const Face &face(std::uint32_t tri) const { return faces_[tri]; }

  private:
    TriangleMesh mesh_;
    Bvh bvh_;
    std::vector<Material> materials_;
    std::vector<Face> faces_;
};

// Vertical (TM) polarisation with eps = eps_r - j sigma/(2 pi f eps0).
cplx fresnel_gamma(const Material &m, double theta, double f);

double path_doppler(const Vec3 &departure, const Vec3 &arrival, const Vec3 &v_tx, const Vec3 &v_rx, double f);

// Images of one transmitter for every admissible triangle sequence up to
// the configured order, reusable across receivers (grid scans).
class PathSolver
{
  public:
    PathSolver(const RtScene &scene, const RtConfig &cfg, const Transceiver &tx);

    // Paths sorted by delay, then by triangle sequence.
    std::vector<PropPath> solve(const Transceiver &rx) const;

    std::size_t image_count() const { return nodes_.size(); }

  private:
    struct Node
    {
        Vec3 image;
        std::uint32_t triangle;
        std::int32_t parent; // -1 for first-order nodes
        int order;
    };
    void expand(std::int32_t parent, const Vec3 &source_side_point, int order);
    std::optional<PropPath> trace(std::size_t node, const Vec3 &rx) const;
    void finish(PropPath &p, const Transceiver &rx) const;

    const RtScene &scene_;
    RtConfig cfg_;
    Transceiver tx_;
    std::vector<Node> nodes_;
};

std::vector<PropPath> compute_paths(const Transceiver &tx, const Transceiver &rx, const RtScene &scene,
                                    const RtConfig &cfg);

inline constexpr std::string_view kCirTopic = "/channel/cir";

// Channel impulse response for one (tx, rx, stamp). Wire layout after the
// header: str tx_id, str rx_id, u32 count, then per path u8 order, f64
// length, f64 delay, f64 re, f64 im, vec3 departure, vec3 arrival, f64
// doppler, u32 vertex count + vec3 each, u32 triangle each (order of them).
struct Cir
{
    static constexpr std::string_view kSchema = "isac_msgs/Cir";
    Header header;
    std::string tx_id, rx_id;
    std::vector<PropPath> paths;

    void encode(ByteWriter &w) const;
    static Cir decode(ByteReader &r);
    Header header_view() const { return header; }
    bool operator==(const Cir &) const = default;
};

// Sorts by delay (stable); an empty path list marks an outage.
Cir assemble_cir(std::vector<PropPath> paths, SimTime stamp, std::string tx_id, std::string rx_id,
                 std::string frame = "world");

} // namespace isac
