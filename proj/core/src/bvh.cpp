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

#include "isac/bvh.hpp"

#include <algorithm>
#include <array>
#include <numeric>

namespace isac
{

namespace
{

constexpr std::uint32_t kLeafSize = 4;
constexpr int kBins = 12;
constexpr int kMaxDepth = 48;

// Slab test. Returns the entry distance or nullopt when the ray misses the
// box within [t0, t1].
std::optional<double> hit_box(const Aabb &box, const Vec3 &o, const Vec3 &inv, const std::array<bool, 3> &zero,
                              double t0, double t1)
{
    for (int axis = 0; axis < 3; ++axis)
    {
        const double lo = box.lo[axis], hi = box.hi[axis], oa = o[axis];
        if (zero[axis])
        {
            if (oa < lo || oa > hi)
                return std::nullopt;
            continue;
        }
        double ta = (lo - oa) * inv[axis];
        double tb = (hi - oa) * inv[axis];
        if (ta > tb)
            std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1)
            return std::nullopt;
    }
    return t0;
}

} // namespace

std::optional<double> intersect_triangle(const Vec3 &origin, const Vec3 &dir, const Vec3 &a, const Vec3 &b,
                                         const Vec3 &c)
{
    // Woop, Benthin & Wald, "Watertight Ray/Triangle Intersection" (2013).
    const double ad[3] = {std::abs(dir.x), std::abs(dir.y), std::abs(dir.z)};
    int kz = 0;
    if (ad[1] > ad[kz])
        kz = 1;
    if (ad[2] > ad[kz])
        kz = 2;
    int kx = (kz + 1) % 3, ky = (kx + 1) % 3;
    if (dir[kz] < 0.0)
        std::swap(kx, ky);

    const double sx = dir[kx] / dir[kz];
    const double sy = dir[ky] / dir[kz];
    const double sz = 1.0 / dir[kz];

    const Vec3 A = a - origin, B = b - origin, C = c - origin;
    const double ax = A[kx] - sx * A[kz], ay = A[ky] - sy * A[kz];
    const double bx = B[kx] - sx * B[kz], by = B[ky] - sy * B[kz];
    const double cx = C[kx] - sx * C[kz], cy = C[ky] - sy * C[kz];

    const double u = cx * by - cy * bx;
    const double v = ax * cy - ay * cx;
    const double w = bx * ay - by * ax;
    if ((u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0))
        return std::nullopt;

    const double det = u + v + w;
    if (det == 0.0)
        return std::nullopt;

    const double t = (u * sz * A[kz] + v * sz * B[kz] + w * sz * C[kz]) / det;
    return t;
}

void Aabb::grow(const Vec3 &p)
{
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
}

void Aabb::grow(const Aabb &b)
{
    grow(b.lo);
    grow(b.hi);
}

double Aabb::surface_area() const
{
    const Vec3 e = hi - lo;
    if (e.x < 0.0)
        return 0.0;
    return 2.0 * (e.x * e.y + e.y * e.z + e.z * e.x);
}

bool Aabb::contains(const Vec3 &p, double tol) const
{
    return p.x >= lo.x - tol && p.x <= hi.x + tol && p.y >= lo.y - tol && p.y <= hi.y + tol &&
           p.z >= lo.z - tol && p.z <= hi.z + tol;
}

Bvh::Bvh(const TriangleMesh &mesh)
{
    const auto n = static_cast<std::uint32_t>(mesh.size());
    if (n == 0)
        return;

    tri_index_.resize(n);
    std::iota(tri_index_.begin(), tri_index_.end(), 0u);

    std::vector<Vec3> centroids(n);
    std::vector<Aabb> boxes(n);
    for (std::uint32_t i = 0; i < n; ++i)
    {
        for (int k = 0; k < 3; ++k)
            boxes[i].grow(mesh.vertex(i, k));
        centroids[i] = (mesh.vertex(i, 0) + mesh.vertex(i, 1) + mesh.vertex(i, 2)) / 3.0;
    }

    nodes_.reserve(2 * n);
    build(0, n, centroids, boxes, 0);

    prims_.resize(n);
    for (std::uint32_t i = 0; i < n; ++i)
    {
        const std::uint32_t t = tri_index_[i];
        prims_[i] = {mesh.vertex(t, 0), mesh.vertex(t, 1), mesh.vertex(t, 2), mesh.normal(t), mesh.object_ids[t]};
    }
}

std::uint32_t Bvh::build(std::uint32_t begin, std::uint32_t end, const std::vector<Vec3> &centroids,
                         const std::vector<Aabb> &boxes, int depth)
{
    const auto index = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back({});

    Aabb box, cbox;
    for (std::uint32_t i = begin; i < end; ++i)
    {
        box.grow(boxes[tri_index_[i]]);
        cbox.grow(centroids[tri_index_[i]]);
    }
    // Pad so that rounding in the slab test never drops a grazing hit.
    const Vec3 ext = box.hi - box.lo;
    const double pad = 1e-9 * (std::max({ext.x, ext.y, ext.z}) + 1.0);
    box.lo -= Vec3{pad, pad, pad};
    box.hi += Vec3{pad, pad, pad};
    nodes_[index].box = box;

    const std::uint32_t count = end - begin;
    if (count <= kLeafSize || depth >= kMaxDepth)
    {
        nodes_[index].first = begin;
        nodes_[index].count = count;
        return index;
    }

    // Binned SAH on the widest centroid axis, median split as fallback.
    const Vec3 cext = cbox.hi - cbox.lo;
    int axis = 0;
    if (cext.y > cext[axis])
        axis = 1;
    if (cext.z > cext[axis])
        axis = 2;

    std::uint32_t mid = begin;
    if (cext[axis] > 0.0)
    {
        std::array<Aabb, kBins> bin_box{};
        std::array<std::uint32_t, kBins> bin_count{};
        const double scale = kBins / cext[axis];
        auto bin_of = [&](std::uint32_t t) {
            const int b = static_cast<int>((centroids[t][axis] - cbox.lo[axis]) * scale);
            return std::clamp(b, 0, kBins - 1);
        };
        for (std::uint32_t i = begin; i < end; ++i)
        {
            const int b = bin_of(tri_index_[i]);
            bin_box[b].grow(boxes[tri_index_[i]]);
            ++bin_count[b];
        }
        double best_cost = 1e300;
        int best_split = -1;
        for (int s = 1; s < kBins; ++s)
        {
            Aabb left, right;
            std::uint32_t nl = 0, nr = 0;
            for (int b = 0; b < s; ++b)
                if (bin_count[b])
                    left.grow(bin_box[b]), nl += bin_count[b];
            for (int b = s; b < kBins; ++b)
                if (bin_count[b])
                    right.grow(bin_box[b]), nr += bin_count[b];
            if (nl == 0 || nr == 0)
                continue;
            const double cost = nl * left.surface_area() + nr * right.surface_area();
            if (cost < best_cost)
                best_cost = cost, best_split = s;
        }
        if (best_split > 0)
        {
            auto it = std::stable_partition(tri_index_.begin() + begin, tri_index_.begin() + end,
                                            [&](std::uint32_t t) { return bin_of(t) < best_split; });
            mid = static_cast<std::uint32_t>(it - tri_index_.begin());
        }
    }
    if (mid == begin || mid == end)
    {
        std::stable_sort(tri_index_.begin() + begin, tri_index_.begin() + end,
                         [&](std::uint32_t l, std::uint32_t r) { return centroids[l][axis] < centroids[r][axis]; });
        mid = begin + count / 2;
    }

    const std::uint32_t left = build(begin, mid, centroids, boxes, depth + 1);
    const std::uint32_t right = build(mid, end, centroids, boxes, depth + 1);
    nodes_[index].first = left;
    nodes_[index].right = right;
    nodes_[index].count = 0;
    return index;
}

template <typename Visit>
void Bvh::traverse(const Vec3 &o, const Vec3 &d, double t_lo, const double &t_hi, Visit &&visit) const
{
    if (nodes_.empty())
        return;
    const std::array<bool, 3> zero{d.x == 0.0, d.y == 0.0, d.z == 0.0};
    const Vec3 inv{zero[0] ? 0.0 : 1.0 / d.x, zero[1] ? 0.0 : 1.0 / d.y, zero[2] ? 0.0 : 1.0 / d.z};

    std::uint32_t stack[2 * kMaxDepth + 4];
    int sp = 0;
    stack[sp++] = 0;
    while (sp > 0)
    {
        const Node &node = nodes_[stack[--sp]];
        if (!hit_box(node.box, o, inv, zero, t_lo, t_hi))
            continue;
        if (node.count > 0)
        {
            for (std::uint32_t i = node.first; i < node.first + node.count; ++i)
                if (visit(i))
                    return;
            continue;
        }
        const auto tl = hit_box(nodes_[node.first].box, o, inv, zero, t_lo, t_hi);
        const auto tr = hit_box(nodes_[node.right].box, o, inv, zero, t_lo, t_hi);
        if (tl && tr)
        {
            // Near child on top of the stack.
            if (*tl <= *tr)
                stack[sp++] = node.right, stack[sp++] = node.first;
            else
                stack[sp++] = node.first, stack[sp++] = node.right;
        }
        else if (tl)
            stack[sp++] = node.first;
        else if (tr)
            stack[sp++] = node.right;
    }
}

std::optional<Hit> Bvh::first_hit(const Ray &ray) const
{
    const Vec3 &o = ray.origin, &d = ray.direction;
    const double t_lo = std::max(ray.t_min - kRangeEpsilon, kSelfHitEpsilon);
    double best_t = ray.t_max + kRangeEpsilon;
    std::uint32_t best = UINT32_MAX; // leaf-order index

    traverse(o, d, t_lo, best_t, [&](std::uint32_t i) {
        const Prim &p = prims_[i];
        const auto t = intersect_triangle(o, d, p.a, p.b, p.c);
        if (!t || *t < t_lo || *t > best_t)
            return false;
        if (*t < best_t || best == UINT32_MAX || tri_index_[i] < tri_index_[best])
            best_t = *t, best = i;
        return false;
    });

    if (best == UINT32_MAX)
        return std::nullopt;
    const Prim &p = prims_[best];
    return Hit{best_t, o + d * best_t, tri_index_[best], p.object_id, p.normal};
}

bool Bvh::occluded(const Vec3 &from, const Vec3 &to, std::span<const std::uint32_t> exclude, double eps) const
{
    const Vec3 seg = to - from;
    const double len = norm(seg);
    if (!(len > 2.0 * eps))
        return false;
    const Vec3 d = seg / len;
    const double t_hi = len - eps;
    bool blocked = false;
    traverse(from, d, eps, t_hi, [&](std::uint32_t i) {
        const Prim &p = prims_[i];
        const auto t = intersect_triangle(from, d, p.a, p.b, p.c);
        if (!t || *t < eps || *t > t_hi)
            return false;
        if (std::find(exclude.begin(), exclude.end(), tri_index_[i]) != exclude.end())
            return false;
        blocked = true;
        return true;
    });
    return blocked;
}

bool Bvh::check_containment() const
{
    for (const Node &node : nodes_)
    {
        if (node.count == 0)
            continue;
        for (std::uint32_t i = node.first; i < node.first + node.count; ++i)
        {
            const Prim &p = prims_[i];
            if (!node.box.contains(p.a) || !node.box.contains(p.b) || !node.box.contains(p.c))
                return false;
        }
    }
    return true;
}

std::optional<Hit> ray_mesh_first_hit(const Ray &ray, const Bvh &bvh)
{
    return bvh.first_hit(ray);
}

} // namespace isac
