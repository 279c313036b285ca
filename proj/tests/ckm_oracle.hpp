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

// Ground plane plus one box with absorbing (Gamma = 0) walls and roof. The
// only energy-carrying paths are then LOS and the single ground bounce,
// whose sum has a closed form; shadowing is decided by a slab test
// against the box, independent of the BVH.

#include <algorithm>
#include <cmath>
#include <optional>

#include "isac/raytracer.hpp"

namespace testing_support
{

struct AbsorberScene
{
    isac::Vec3 box_lo{-10, 5, 0}, box_hi{10, 20, 15};
    double ground_half = 500;
};

inline void add_grid_quad(isac::RtMesh &rt, const isac::Vec3 &a, const isac::Vec3 &b, const isac::Vec3 &d, int nu,
                          int nv, std::uint32_t obj)
{
    const auto base = static_cast<std::uint32_t>(rt.mesh.vertices.size());
    for (int j = 0; j <= nv; ++j)
        for (int i = 0; i <= nu; ++i)
            rt.mesh.vertices.push_back(a + (b - a) * (double(i) / nu) + (d - a) * (double(j) / nv));
    auto at = [&](int i, int j) { return base + static_cast<std::uint32_t>(j * (nu + 1) + i); };
    for (int j = 0; j < nv; ++j)
        for (int i = 0; i < nu; ++i)
        {
            rt.mesh.triangles.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1)});
            rt.mesh.triangles.push_back({at(i, j), at(i + 1, j + 1), at(i, j + 1)});
            rt.mesh.object_ids.push_back(obj);
            rt.mesh.object_ids.push_back(obj);
        }
}

inline isac::MaterialLibrary absorber_library()
{
    auto lib = isac::MaterialLibrary::defaults();
    lib.add({"absorber", 1.0, 0.0});
    return lib;
}

// 2 ground + 4 walls * 24 + roof * 32 = 130 triangles.
inline isac::RtMesh absorber_mesh(const AbsorberScene &s)
{
    isac::RtMesh rt;
    rt.objects = {{"ground", "ground", "medium_dry_ground"}, {"box", "building", "absorber"}};
    const double g = s.ground_half;
    add_grid_quad(rt, {-g, -g, 0}, {g, -g, 0}, {-g, g, 0}, 1, 1, 0);
    const auto &lo = s.box_lo;
    const auto &hi = s.box_hi;
    const isac::Vec3 c[4] = {{lo.x, lo.y, 0}, {hi.x, lo.y, 0}, {hi.x, hi.y, 0}, {lo.x, hi.y, 0}};
    for (int k = 0; k < 4; ++k)
        add_grid_quad(rt, c[k], c[(k + 1) % 4], c[k] + isac::Vec3{0, 0, hi.z}, 4, 3, 1);
    add_grid_quad(rt, {lo.x, lo.y, hi.z}, {hi.x, lo.y, hi.z}, {lo.x, hi.y, hi.z}, 4, 4, 1);
    return rt;
}

// Does segment a-b meet the box inflated by `margin` (negative shrinks)?
inline bool segment_hits_box(const isac::Vec3 &a, const isac::Vec3 &b, const isac::Vec3 &lo, const isac::Vec3 &hi,
                             double margin)
{
    double t0 = 0, t1 = 1;
    for (int k = 0; k < 3; ++k)
    {
        const double o = a[k], d = b[k] - a[k];
        const double l = lo[k] - margin, h = hi[k] + margin;
        if (std::abs(d) < 1e-15)
        {
            if (o < l || o > h)
                return false;
            continue;
        }
        double ta = (l - o) / d, tb = (h - o) / d;
        if (ta > tb)
            std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1)
            return false;
    }
    return true;
}

enum class Shadow
{
    Clear,     // LOS and ground bounce both unobstructed (with margin)
    Ambiguous, // within the margin of the box
    Other
};

struct TwoRay
{
    Shadow shadow = Shadow::Other;
    double path_loss_db = 0; // valid when Clear
};

// Friis + ground reflection (incoherent sum), TM coefficient of the ground.
inline TwoRay two_ray_oracle(const AbsorberScene &s, const isac::Vec3 &tx, const isac::Vec3 &rx, double f,
                             const isac::Material &ground)
{
    constexpr double margin = 0.05;
    const isac::Vec3 img{tx.x, tx.y, -tx.z};
    const isac::Vec3 g = img + (rx - img) * (tx.z / (tx.z + rx.z));
    auto hits = [&](double m) {
        return segment_hits_box(tx, rx, s.box_lo, s.box_hi, m) || segment_hits_box(tx, g, s.box_lo, s.box_hi, m) ||
               segment_hits_box(g, rx, s.box_lo, s.box_hi, m);
    };
    TwoRay out;
    if (!hits(margin))
        out.shadow = Shadow::Clear;
    else if (hits(-margin))
        out.shadow = Shadow::Other;
    else
        out.shadow = Shadow::Ambiguous;

    const double lambda = isac::kSpeedOfLight / f;
    const double d1 = isac::distance(tx, rx), d2 = isac::distance(img, rx);
    const double theta = std::acos((tx.z + rx.z) / d2);
    const double gamma = std::abs(isac::fresnel_gamma(ground, theta, f));
    const double p1 = std::pow(lambda / (4 * M_PI * d1), 2), p2 = std::pow(lambda / (4 * M_PI * d2) * gamma, 2);
    out.path_loss_db = -10.0 * std::log10(p1 + p2);
    return out;
}

} // namespace testing_support
