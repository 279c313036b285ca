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

#include "isac/raytracer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "isac/messages.hpp"

namespace isac
{

namespace
{

constexpr double kBaryTol = 1e-9;
constexpr double kPlaneTol = 1e-12;
constexpr double kDedupTol = 1e-9;

double signed_distance(const RtScene::Face &f, const Vec3 &p) { return dot(f.normal, p - f.a); }

bool inside(const RtScene::Face &f, const Vec3 &p)
{
    const Vec3 v2 = p - f.a;
    const double d20 = dot(v2, f.e0), d21 = dot(v2, f.e1);
    const double v = (f.d11 * d20 - f.d01 * d21) * f.inv_den;
    const double w = (f.d00 * d21 - f.d01 * d20) * f.inv_den;
    return v >= -kBaryTol && w >= -kBaryTol && 1.0 - v - w >= -kBaryTol;
}

bool path_order(const PropPath &a, const PropPath &b)
{
    if (a.delay != b.delay)
        return a.delay < b.delay;
    if (a.order != b.order)
        return a.order < b.order;
    return a.triangles < b.triangles;
}

bool same_vertices(const PropPath &a, const PropPath &b)
{
    if (a.vertices.size() != b.vertices.size())
        return false;
    for (std::size_t i = 0; i < a.vertices.size(); ++i)
        if (distance(a.vertices[i], b.vertices[i]) > kDedupTol)
            return false;
    return true;
}

} // namespace

void RtConfig::validate() const
{
    if (!(carrier_hz > 0) || !std::isfinite(carrier_hz))
        throw std::invalid_argument("rt: carrier frequency must be positive");
    if (max_order < 0 || max_order > 3)
        throw std::invalid_argument("rt: max reflection order must be in 0..3");
}

double azimuth(const Vec3 &d) { return std::atan2(d.y, d.x); }
double elevation(const Vec3 &d) { return std::atan2(d.z, std::hypot(d.x, d.y)); }

RtScene::RtScene(const RtMesh &rt, const MaterialLibrary &lib) : mesh_(rt.mesh), bvh_(rt.mesh)
{
    mesh_.validate();
    materials_.reserve(mesh_.size());
    faces_.reserve(mesh_.size());
    for (std::size_t t = 0; t < mesh_.size(); ++t)
    {
        const std::string &name = rt.material_of(t);
        if (!lib.contains(name))
            throw std::invalid_argument("rt: unknown material '" + name + "'");
        materials_.push_back(lib.at(name));

        Face f;
        f.a = mesh_.vertex(t, 0);
        f.e0 = mesh_.vertex(t, 1) - f.a;
        f.e1 = mesh_.vertex(t, 2) - f.a;
        f.normal = normalized(cross(f.e0, f.e1));
        f.d00 = dot(f.e0, f.e0);
        f.d01 = dot(f.e0, f.e1);
        f.d11 = dot(f.e1, f.e1);
        f.inv_den = 1.0 / (f.d00 * f.d11 - f.d01 * f.d01);
        faces_.push_back(f);
    }
}

cplx fresnel_gamma(const Material &m, double theta, double f)
{
    if (!(f > 0))
        throw std::invalid_argument("fresnel: frequency must be positive");
    const cplx eps(m.eps_r, -m.sigma / (2.0 * M_PI * f * kVacuumPermittivity));
    const double c = std::cos(theta), s = std::sin(theta);
    const cplx root = std::sqrt(eps - s * s);
    return (root - eps * c) / (root + eps * c);
}

double path_doppler(const Vec3 &departure, const Vec3 &arrival, const Vec3 &v_tx, const Vec3 &v_rx, double f)
{
    return f / kSpeedOfLight * (dot(departure, v_tx) - dot(arrival, v_rx));
}

PathSolver::PathSolver(const RtScene &scene, const RtConfig &cfg, const Transceiver &tx)
    : scene_(scene), cfg_(cfg), tx_(tx)
{
    cfg_.validate();
    if (cfg_.max_order > 0)
        expand(-1, tx_.pose.translation, 1);
}

// Depth-first in ascending triangle order, so node order is the
// lexicographic order of triangle sequences.
void PathSolver::expand(std::int32_t parent, const Vec3 &prev_source, int order)
{
    const Vec3 source = parent < 0 ? tx_.pose.translation : nodes_[parent].image;
    for (std::uint32_t t = 0; t < scene_.size(); ++t)
    {
        const auto &f = scene_.face(t);
        const double ds = signed_distance(f, source);
        if (std::abs(ds) <= kPlaneTol)
            continue;
        if (parent >= 0)
        {
            // The wave leaving the previous triangle stays on the side of
            // its own source; t must reach into that half-space.
            const std::uint32_t pt = nodes_[parent].triangle;
            if (pt == t)
                continue;
            const auto &pf = scene_.face(pt);
            const double side = signed_distance(pf, prev_source);
            bool reach = false;
            for (int c = 0; c < 3 && !reach; ++c)
                reach = signed_distance(pf, scene_.mesh().vertex(t, c)) * side > kPlaneTol * std::abs(side);
            if (!reach)
                continue;
        }
        nodes_.push_back({source - f.normal * (2.0 * ds), t, parent, order});
        if (order < cfg_.max_order)
            expand(static_cast<std::int32_t>(nodes_.size() - 1), source, order + 1);
    }
}

std::optional<PropPath> PathSolver::trace(std::size_t node, const Vec3 &rx) const
{
    const int k = nodes_[node].order;
    PropPath p;
    p.order = k;
    p.vertices.assign(static_cast<std::size_t>(k) + 2, Vec3{});
    p.triangles.assign(static_cast<std::size_t>(k), 0);
    p.vertices.front() = tx_.pose.translation;
    p.vertices.back() = rx;

    Vec3 target = rx;
    std::int32_t n = static_cast<std::int32_t>(node);
    for (int i = k; i >= 1; --i)
    {
        const Node &nd = nodes_[n];
        const auto &f = scene_.face(nd.triangle);
        const double dt = signed_distance(f, target);
        const double di = signed_distance(f, nd.image);
        if (!(dt * di < 0))
            return std::nullopt;
        const Vec3 hit = target + (nd.image - target) * (dt / (dt - di));
        if (!inside(f, hit))
            return std::nullopt;
        p.vertices[i] = hit;
        p.triangles[i - 1] = nd.triangle;
        target = hit;
        n = nd.parent;
    }

    for (std::size_t s = 0; s + 1 < p.vertices.size(); ++s)
    {
        const Vec3 &a = p.vertices[s], &b = p.vertices[s + 1];
        if (distance(a, b) <= kDedupTol)
            return std::nullopt;
        std::uint32_t skip[2];
        std::size_t ns = 0;
        if (s > 0)
            skip[ns++] = p.triangles[s - 1];
        if (s < p.triangles.size())
            skip[ns++] = p.triangles[s];
        if (scene_.bvh().occluded(a, b, std::span<const std::uint32_t>(skip, ns)))
            return std::nullopt;
    }
    return p;
}

void PathSolver::finish(PropPath &p, const Transceiver &rx) const
{
    const double f = cfg_.carrier_hz;
    p.length = 0;
    cplx gamma = 1.0;
    for (std::size_t s = 0; s + 1 < p.vertices.size(); ++s)
    {
        const Vec3 seg = p.vertices[s + 1] - p.vertices[s];
        p.length += norm(seg);
        if (s > 0)
        {
            const auto &face = scene_.face(p.triangles[s - 1]);
            const Vec3 in = normalized(p.vertices[s] - p.vertices[s - 1]);
            const double cos_theta = std::min(1.0, std::abs(dot(in, face.normal)));
            gamma *= fresnel_gamma(scene_.material(p.triangles[s - 1]), std::acos(cos_theta), f);
        }
    }
    p.delay = p.length / kSpeedOfLight;
    p.departure = normalized(p.vertices[1] - p.vertices[0]);
    p.arrival = normalized(p.vertices.back() - p.vertices[p.vertices.size() - 2]);
    p.amplitude = cfg_.wavelength() / (4.0 * M_PI * p.length) * gamma *
                  std::polar(1.0, -2.0 * M_PI * f * p.delay);
    p.doppler = path_doppler(p.departure, p.arrival, tx_.twist.linear, rx.twist.linear, f);
}

std::vector<PropPath> PathSolver::solve(const Transceiver &rx) const
{
    const Vec3 tx_pos = tx_.pose.translation, rx_pos = rx.pose.translation;
    std::vector<PropPath> out;
    if (distance(tx_pos, rx_pos) > kDedupTol && !scene_.bvh().occluded(tx_pos, rx_pos))
    {
        PropPath los;
        los.vertices = {tx_pos, rx_pos};
        out.push_back(std::move(los));
    }
    for (std::size_t n = 0; n < nodes_.size(); ++n)
    {
        auto p = trace(n, rx_pos);
        if (!p)
            continue;
        // A point on an edge shared by coplanar triangles is found once per
        // triangle; keep the lexicographically first sequence.
        bool dup = false;
        for (const auto &q : out)
            if (q.order == p->order && same_vertices(q, *p))
            {
                dup = true;
                break;
            }
        if (!dup)
            out.push_back(std::move(*p));
    }
    for (auto &p : out)
        finish(p, rx);
    std::sort(out.begin(), out.end(), path_order);
    return out;
}

std::vector<PropPath> compute_paths(const Transceiver &tx, const Transceiver &rx, const RtScene &scene,
                                    const RtConfig &cfg)
{
    return PathSolver(scene, cfg, tx).solve(rx);
}

void Cir::encode(ByteWriter &w) const
{
    encode_header(w, header);
    w.str(tx_id);
    w.str(rx_id);
    w.u32(static_cast<std::uint32_t>(paths.size()));
    for (const auto &p : paths)
    {
        w.u8(static_cast<std::uint8_t>(p.order));
        w.f64(p.length);
        w.f64(p.delay);
        w.f64(p.amplitude.real());
        w.f64(p.amplitude.imag());
        w.vec3(p.departure);
        w.vec3(p.arrival);
        w.f64(p.doppler);
        w.u32(static_cast<std::uint32_t>(p.vertices.size()));
        for (const auto &v : p.vertices)
            w.vec3(v);
        for (auto t : p.triangles)
            w.u32(t);
    }
}

Cir Cir::decode(ByteReader &r)
{
    Cir c;
    c.header = decode_header(r);
    c.tx_id = r.str();
    c.rx_id = r.str();
    const std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i)
    {
        PropPath p;
        p.order = r.u8();
        p.length = r.f64();
        p.delay = r.f64();
        const double re = r.f64();
        p.amplitude = {re, r.f64()};
        p.departure = r.vec3();
        p.arrival = r.vec3();
        p.doppler = r.f64();
        const std::uint32_t nv = r.u32();
        if (nv != static_cast<std::uint32_t>(p.order) + 2)
            throw DecodeError("cir: vertex count does not match order");
        for (std::uint32_t v = 0; v < nv; ++v)
            p.vertices.push_back(r.vec3());
        for (int t = 0; t < p.order; ++t)
            p.triangles.push_back(r.u32());
        c.paths.push_back(std::move(p));
    }
    return c;
}

Cir assemble_cir(std::vector<PropPath> paths, SimTime stamp, std::string tx_id, std::string rx_id,
                 std::string frame)
{
    std::stable_sort(paths.begin(), paths.end(),
                     [](const PropPath &a, const PropPath &b) { return a.delay < b.delay; });
    Cir c;
    c.header = {stamp, std::move(frame)};
    c.tx_id = std::move(tx_id);
    c.rx_id = std::move(rx_id);
    c.paths = std::move(paths);
    return c;
}

} // namespace isac
