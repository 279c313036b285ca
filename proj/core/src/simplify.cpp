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

// Quadric edge collapse (Garland & Heckbert 1997) restricted to half-edge
// collapses: the removed vertex lands on the kept one.

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <set>

#include "isac/scene.hpp"

namespace isac
{

namespace
{

using Quadric = std::array<double, 10>; // upper triangle of the 4x4 form

Quadric plane_quadric(const Vec3 &n, double d, double w)
{
    return {w * n.x * n.x, w * n.x * n.y, w * n.x * n.z, w * n.x * d, w * n.y * n.y,
            w * n.y * n.z, w * n.y * d,   w * n.z * n.z, w * n.z * d, w * d * d};
}

void add_to(Quadric &a, const Quadric &b)
{
    for (int i = 0; i < 10; ++i)
        a[i] += b[i];
}

double evaluate(const Quadric &q, const Vec3 &p)
{
    const double x = p.x, y = p.y, z = p.z;
    return q[0] * x * x + 2 * q[1] * x * y + 2 * q[2] * x * z + 2 * q[3] * x + q[4] * y * y + 2 * q[5] * y * z +
           2 * q[6] * y + q[7] * z * z + 2 * q[8] * z + q[9];
}

constexpr double kConstraintWeight = 1e3;

enum class EdgeKind
{
    Interior,
    Feature, // boundary or object seam: collapsible along itself
    Locked,  // sharp or non-manifold: never collapsed
};

class Decimator
{
  public:
    Decimator(const TriangleMesh &mesh, double sharp_deg)
        : pos_(mesh.vertices), tris_(mesh.triangles), obj_(mesh.object_ids),
          face_alive_(mesh.size(), true), vf_(mesh.vertices.size()), quadric_(mesh.vertices.size()),
          version_(mesh.vertices.size(), 0), cos_sharp_(std::cos(sharp_deg * M_PI / 180.0)),
          alive_faces_(mesh.size())
    {
        for (std::uint32_t f = 0; f < tris_.size(); ++f)
            for (auto v : tris_[f])
                vf_[v].push_back(f);
        for (std::uint32_t f = 0; f < tris_.size(); ++f)
        {
            const Vec3 n = face_normal(f);
            const double area = face_area(f);
            add_to_face_vertices(f, plane_quadric(n, -dot(n, pos_[tris_[f][0]]), area));
        }
        // Constraint planes along feature edges keep boundaries in place.
        for (std::uint32_t v = 0; v < pos_.size(); ++v)
            for (std::uint32_t w : neighbors(v))
            {
                if (w < v)
                    continue;
                const auto shared = shared_faces(v, w);
                if (classify(v, w, shared) == EdgeKind::Interior)
                    continue;
                const Vec3 e = pos_[w] - pos_[v];
                const double len2 = dot(e, e);
                for (auto f : shared)
                {
                    const Vec3 c = cross(e, face_normal(f));
                    if (norm(c) <= 0)
                        continue;
                    const Vec3 n = normalized(c);
                    const Quadric q = plane_quadric(n, -dot(n, pos_[v]), kConstraintWeight * len2);
                    add_to(quadric_[v], q);
                    add_to(quadric_[w], q);
                }
            }
    }

    std::size_t alive_faces() const { return alive_faces_; }

    void run(std::size_t target)
    {
        for (;;)
        {
            if (alive_faces_ <= target)
                return;
            const std::size_t before = alive_faces_;
            pass(target);
            if (alive_faces_ == before)
                return;
        }
    }

    TriangleMesh extract() const
    {
        std::vector<std::uint32_t> remap(pos_.size(), UINT32_MAX);
        std::vector<bool> used(pos_.size(), false);
        for (std::uint32_t f = 0; f < tris_.size(); ++f)
            if (face_alive_[f])
                for (auto v : tris_[f])
                    used[v] = true;
        TriangleMesh out;
        for (std::uint32_t v = 0; v < pos_.size(); ++v)
            if (used[v])
            {
                remap[v] = static_cast<std::uint32_t>(out.vertices.size());
                out.vertices.push_back(pos_[v]);
            }
        for (std::uint32_t f = 0; f < tris_.size(); ++f)
            if (face_alive_[f])
            {
                out.triangles.push_back({remap[tris_[f][0]], remap[tris_[f][1]], remap[tris_[f][2]]});
                out.object_ids.push_back(obj_[f]);
            }
        return out;
    }

  private:
    struct Candidate
    {
        double cost;
        std::uint32_t from, to;
        std::uint32_t from_version, to_version;
        bool operator>(const Candidate &o) const
        {
            if (cost != o.cost)
                return cost > o.cost;
            if (from != o.from)
                return from > o.from;
            return to > o.to;
        }
    };
    using Queue = std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>>;

    Vec3 raw_normal(std::uint32_t f) const
    {
        const Vec3 &a = pos_[tris_[f][0]], &b = pos_[tris_[f][1]], &c = pos_[tris_[f][2]];
        return cross(b - a, c - a);
    }
    Vec3 face_normal(std::uint32_t f) const { return normalized(raw_normal(f)); }
    double face_area(std::uint32_t f) const { return 0.5 * norm(raw_normal(f)); }

    void add_to_face_vertices(std::uint32_t f, const Quadric &q)
    {
        for (auto v : tris_[f])
            add_to(quadric_[v], q);
    }

    std::vector<std::uint32_t> faces_of(std::uint32_t v) const
    {
        std::vector<std::uint32_t> out;
        for (auto f : vf_[v])
            if (face_alive_[f])
                out.push_back(f);
        return out;
    }

    std::vector<std::uint32_t> neighbors(std::uint32_t v) const
    {
        std::vector<std::uint32_t> out;
        for (auto f : vf_[v])
            if (face_alive_[f])
                for (auto w : tris_[f])
                    if (w != v)
                        out.push_back(w);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    std::vector<std::uint32_t> shared_faces(std::uint32_t a, std::uint32_t b) const
    {
        std::vector<std::uint32_t> out;
        for (auto f : vf_[a])
            if (face_alive_[f] && (tris_[f][0] == b || tris_[f][1] == b || tris_[f][2] == b))
                out.push_back(f);
        return out;
    }

    EdgeKind classify(std::uint32_t, std::uint32_t, const std::vector<std::uint32_t> &shared) const
    {
        if (shared.size() > 2)
            return EdgeKind::Locked;
        if (shared.size() == 1)
            return EdgeKind::Feature;
        if (dot(face_normal(shared[0]), face_normal(shared[1])) < cos_sharp_)
            return EdgeKind::Locked;
        if (obj_[shared[0]] != obj_[shared[1]])
            return EdgeKind::Feature;
        return EdgeKind::Interior;
    }

    // Whether removing `u` by moving it onto `v` keeps features intact.
    bool feature_allows(std::uint32_t u, std::uint32_t v) const
    {
        std::vector<std::uint32_t> feature;
        bool uv_feature = false;
        for (std::uint32_t w : neighbors(u))
        {
            const EdgeKind k = classify(u, w, shared_faces(u, w));
            if (k == EdgeKind::Locked)
                return false;
            if (k == EdgeKind::Feature)
            {
                feature.push_back(w);
                uv_feature |= (w == v);
            }
        }
        if (feature.empty())
            return true;
        if (feature.size() != 2 || !uv_feature)
            return false;
        // Slide only along a feature curve that does not turn sharply at u.
        const Vec3 a = pos_[u] - pos_[feature[0]], b = pos_[feature[1]] - pos_[u];
        return dot(a, b) >= cos_sharp_ * norm(a) * norm(b);
    }

    bool valid(std::uint32_t u, std::uint32_t v) const
    {
        const auto shared = shared_faces(u, v);
        if (shared.empty() || classify(u, v, shared) == EdgeKind::Locked)
            return false;
        if (!feature_allows(u, v))
            return false;

        // Link condition: common neighbours are exactly the opposite corners
        // of the shared faces.
        const auto nu = neighbors(u), nv = neighbors(v);
        std::vector<std::uint32_t> common;
        std::set_intersection(nu.begin(), nu.end(), nv.begin(), nv.end(), std::back_inserter(common));
        if (common.size() != shared.size())
            return false;

        for (auto f : faces_of(u))
        {
            if (std::find(shared.begin(), shared.end(), f) != shared.end())
                continue;
            std::array<Vec3, 3> p;
            for (int k = 0; k < 3; ++k)
                p[k] = pos_[tris_[f][k] == u ? v : tris_[f][k]];
            const Vec3 n_new = cross(p[1] - p[0], p[2] - p[0]);
            if (0.5 * norm(n_new) <= 1e-12)
                return false;
            if (dot(n_new, raw_normal(f)) <= 0)
                return false;
        }
        return true;
    }

    void push(Queue &q, std::uint32_t from, std::uint32_t to) const
    {
        Quadric sum = quadric_[from];
        add_to(sum, quadric_[to]);
        q.push({std::max(0.0, evaluate(sum, pos_[to])), from, to, version_[from], version_[to]});
    }

    void collapse(std::uint32_t u, std::uint32_t v)
    {
        for (auto f : faces_of(u))
        {
            auto &t = tris_[f];
            if (t[0] == v || t[1] == v || t[2] == v)
            {
                face_alive_[f] = false;
                --alive_faces_;
                continue;
            }
            for (auto &x : t)
                if (x == u)
                    x = v;
            vf_[v].push_back(f);
        }
        vf_[u].clear();
        add_to(quadric_[v], quadric_[u]);
        ++version_[u];
        ++version_[v];
    }

    void pass(std::size_t target)
    {
        Queue q;
        for (std::uint32_t v = 0; v < pos_.size(); ++v)
            for (std::uint32_t w : neighbors(v))
                push(q, v, w);
        while (!q.empty() && alive_faces_ > target)
        {
            const Candidate c = q.top();
            q.pop();
            if (c.from_version != version_[c.from] || c.to_version != version_[c.to])
                continue;
            if (!valid(c.from, c.to))
                continue;
            collapse(c.from, c.to);
            for (std::uint32_t w : neighbors(c.to))
            {
                push(q, c.to, w);
                push(q, w, c.to);
            }
        }
    }

    std::vector<Vec3> pos_;
    std::vector<Triangle> tris_;
    std::vector<std::uint32_t> obj_;
    std::vector<bool> face_alive_;
    std::vector<std::vector<std::uint32_t>> vf_;
    std::vector<Quadric> quadric_;
    std::vector<std::uint32_t> version_;
    double cos_sharp_;
    std::size_t alive_faces_;
};

} // namespace

RtMesh simplify_mesh(const SceneAsset &asset, const SimplifyConfig &cfg, SimplifyStats *stats)
{
    if (!(cfg.ratio > 0.0 && cfg.ratio <= 1.0))
        throw SceneError("simplify: ratio must be in (0, 1]");
    if (!(cfg.size_threshold >= 0.0))
        throw SceneError("simplify: size threshold must be >= 0");

    // Step 1: tag and size filter.
    std::vector<double> area(asset.objects.size(), 0.0);
    for (std::size_t t = 0; t < asset.mesh.size(); ++t)
        area[asset.mesh.object_ids[t]] += asset.mesh.area(t);
    RtMesh out;
    out.origin = asset.origin;
    std::vector<std::uint32_t> new_id(asset.objects.size(), UINT32_MAX);
    for (std::uint32_t i = 0; i < asset.objects.size(); ++i)
    {
        const SceneObject &o = asset.objects[i];
        const bool detail = std::find(cfg.detail_classes.begin(), cfg.detail_classes.end(), o.tag) !=
                            cfg.detail_classes.end();
        if (detail || area[i] < cfg.size_threshold)
            continue;
        new_id[i] = static_cast<std::uint32_t>(out.objects.size());
        out.objects.push_back(o);
    }
    TriangleMesh kept;
    kept.vertices = asset.mesh.vertices;
    for (std::size_t t = 0; t < asset.mesh.size(); ++t)
        if (const auto id = new_id[asset.mesh.object_ids[t]]; id != UINT32_MAX)
        {
            kept.triangles.push_back(asset.mesh.triangles[t]);
            kept.object_ids.push_back(id);
        }

    // Steps 2 and 3: decimate; materials ride along with object ids.
    const auto target = static_cast<std::size_t>(std::floor(cfg.ratio * static_cast<double>(kept.size())));
    Decimator d(kept, cfg.sharp_angle_deg);
    d.run(target);
    out.mesh = d.extract();

    if (stats)
    {
        stats->input_triangles = asset.mesh.size();
        stats->after_filter = kept.size();
        stats->target = target;
        stats->output_triangles = out.mesh.size();
        stats->removed_objects = asset.objects.size() - out.objects.size();
    }
    return out;
}

} // namespace isac
