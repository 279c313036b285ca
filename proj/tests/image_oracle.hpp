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

// Exhaustive mirror enumeration over every triangle sequence, with a
// brute-force occlusion test. Independent of the BVH and the image tree.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "isac/raytracer.hpp"
#include "test_support.hpp"

namespace testing_support
{

using namespace isac;

struct SceneBuilder
{
    RtMesh rt;

    std::uint32_t object(const std::string &material)
    {
        rt.objects.push_back({"o" + std::to_string(rt.objects.size()), "building", material});
        return static_cast<std::uint32_t>(rt.objects.size() - 1);
    }

    // Quad a-b-c-d split into nu x nv cells of two triangles each.
    void quad(const Vec3 &a, const Vec3 &b, const Vec3 &d, int nu, int nv, std::uint32_t obj)
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
};

// Corridor: walls y=0 and y=10 over x in [0, 60], z in [0, 8], plus ground.
inline RtMesh corridor()
{
    SceneBuilder s;
    const auto w = s.object("concrete");
    const auto g = s.object("medium_dry_ground");
    s.quad({0, 0, 0}, {60, 0, 0}, {0, 0, 8}, 4, 2, w);
    s.quad({0, 10, 0}, {60, 10, 0}, {0, 10, 8}, 4, 2, w);
    s.quad({-5, -5, 0}, {65, -5, 0}, {-5, 15, 0}, 1, 1, g);
    return s.rt;
}

// ---- independent oracle: exhaustive mirror enumeration ----

struct OraclePath
{
    std::vector<std::uint32_t> seq;
    std::vector<Vec3> vertices;
    double length = 0;
};

inline bool oracle_blocked(const TriangleMesh &m, const Vec3 &a, const Vec3 &b, const std::vector<std::uint32_t> &skip)
{
    const double len = distance(a, b);
    const Vec3 d = (b - a) / len;
    for (std::uint32_t i = 0; i < m.size(); ++i)
    {
        if (std::find(skip.begin(), skip.end(), i) != skip.end())
            continue;
        const auto t = moller_trumbore(a, d, m.vertex(i, 0), m.vertex(i, 1), m.vertex(i, 2));
        if (t && *t >= 1e-6 && *t <= len - 1e-6)
            return true;
    }
    return false;
}

// Point-in-triangle by same-side cross products (p is on the plane).
inline bool oracle_inside(const TriangleMesh &m, std::uint32_t t, const Vec3 &p)
{
    const Vec3 a = m.vertex(t, 0), b = m.vertex(t, 1), c = m.vertex(t, 2);
    const Vec3 n = cross(b - a, c - a);
    const double s = dot(n, n);
    return dot(cross(b - a, p - a), n) / s >= -1e-9 && dot(cross(c - b, p - b), n) / s >= -1e-9 &&
           dot(cross(a - c, p - c), n) / s >= -1e-9;
}

inline void oracle_recurse(const TriangleMesh &m, const Vec3 &tx, const Vec3 &rx, int k_max,
                    std::vector<std::uint32_t> &seq, std::vector<OraclePath> &out)
{
    if (!seq.empty())
    {
        // Images of tx through the sequence.
        std::vector<Vec3> img{tx};
        std::vector<Plane> planes;
        for (auto t : seq)
        {
            planes.push_back({m.vertex(t, 0), m.normal(t)});
            img.push_back(mirror_across_plane(img.back(), planes.back()));
        }
        std::vector<Vec3> pts(seq.size() + 2);
        pts.front() = tx;
        pts.back() = rx;
        bool ok = true;
        Vec3 target = rx;
        for (std::size_t i = seq.size(); i >= 1 && ok; --i)
        {
            const Vec3 dir = img[i] - target;
            const double den = dot(planes[i - 1].normal, dir);
            if (std::abs(den) < 1e-15)
            {
                ok = false;
                break;
            }
            const double s = dot(planes[i - 1].normal, planes[i - 1].point - target) / den;
            if (!(s > 0 && s < 1))
            {
                ok = false;
                break;
            }
            pts[i] = target + dir * s;
            ok = oracle_inside(m, seq[i - 1], pts[i]);
            target = pts[i];
        }
        // Physical check: neighbours of each bounce on the same side.
        for (std::size_t i = 1; ok && i + 1 < pts.size(); ++i)
        {
            const double a = dot(planes[i - 1].normal, pts[i - 1] - planes[i - 1].point);
            const double b = dot(planes[i - 1].normal, pts[i + 1] - planes[i - 1].point);
            ok = a * b > 0;
        }
        for (std::size_t i = 0; ok && i + 1 < pts.size(); ++i)
        {
            std::vector<std::uint32_t> skip;
            if (i > 0)
                skip.push_back(seq[i - 1]);
            if (i < seq.size())
                skip.push_back(seq[i]);
            ok = distance(pts[i], pts[i + 1]) > 1e-9 && !oracle_blocked(m, pts[i], pts[i + 1], skip);
        }
        if (ok)
        {
            OraclePath p{seq, pts, 0};
            for (std::size_t i = 0; i + 1 < pts.size(); ++i)
                p.length += distance(pts[i], pts[i + 1]);
            out.push_back(p);
        }
    }
    if (static_cast<int>(seq.size()) == k_max)
        return;
    for (std::uint32_t t = 0; t < m.size(); ++t)
    {
        seq.push_back(t);
        oracle_recurse(m, tx, rx, k_max, seq, out);
        seq.pop_back();
    }
}

inline std::vector<OraclePath> oracle_paths(const TriangleMesh &m, const Vec3 &tx, const Vec3 &rx, int k_max)
{
    std::vector<OraclePath> out;
    if (!oracle_blocked(m, tx, rx, {}))
        out.push_back({{}, {tx, rx}, distance(tx, rx)});
    std::vector<std::uint32_t> seq;
    oracle_recurse(m, tx, rx, k_max, seq, out);
    std::sort(out.begin(), out.end(), [](const auto &a, const auto &b) {
        return a.seq.size() != b.seq.size() ? a.seq.size() < b.seq.size() : a.seq < b.seq;
    });
    return out;
}

inline std::vector<PropPath> by_sequence(std::vector<PropPath> p)
{
    std::sort(p.begin(), p.end(), [](const auto &a, const auto &b) {
        return a.order != b.order ? a.order < b.order : a.triangles < b.triangles;
    });
    return p;
}

} // namespace testing_support
