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

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "isac/geometry.hpp"

namespace isac
{

// Hits closer than this along a ray are ignored (self-intersection guard).
inline constexpr double kSelfHitEpsilon = 1e-6;

// Tolerance applied to the [t_min, t_max] range test.
inline constexpr double kRangeEpsilon = 1e-9;

struct Hit
{
    double t = 0.0;
    Vec3 point;
    std::uint32_t triangle = 0;
    std::uint32_t object_id = 0;
    Vec3 normal; // unit, geometric (winding) normal
};

// Watertight two-sided ray/triangle test. Returns the unclipped ray
// parameter of the hit, or nullopt when the ray misses the triangle or
// runs parallel to it.
std::optional<double> intersect_triangle(const Vec3 &origin, const Vec3 &direction,
                                         const Vec3 &a, const Vec3 &b, const Vec3 &c);

struct Aabb
{
    Vec3 lo{1e300, 1e300, 1e300};
    Vec3 hi{-1e300, -1e300, -1e300};

    void grow(const Vec3 &p);
    void grow(const Aabb &b);
    Vec3 center() const { return (lo + hi) * 0.5; }
    double surface_area() const;
    bool contains(const Vec3 &p, double tol = 0.0) const;
};

// Bounding-volume hierarchy over a triangle mesh. Keeps its own copy of the
// triangle corners, object ids and normals, so it stays valid independently
// of the mesh it was built from. Immutable after construction.
class Bvh
{
  public:
    Bvh() = default;
    explicit Bvh(const TriangleMesh &mesh);

    // Nearest hit with t in [max(t_min, kSelfHitEpsilon), t_max]; ties on t
    // resolve to the lowest triangle index.
    std::optional<Hit> first_hit(const Ray &ray) const;

    // True if any triangle not listed in `exclude` blocks the open segment
    // between `from` and `to`, ignoring hits within `eps` of either end.
    bool occluded(const Vec3 &from, const Vec3 &to, std::span<const std::uint32_t> exclude = {},
                  double eps = kSelfHitEpsilon) const;

    std::size_t triangle_count() const { return tri_index_.size(); }
    std::size_t node_count() const { return nodes_.size(); }

    // Every triangle's corners lie inside the box of the leaf that holds it.
    bool check_containment() const;

  private:
    struct Node
    {
        Aabb box;
        std::uint32_t first = 0; // left child (inner) or first primitive (leaf)
        std::uint32_t right = 0; // right child (inner only)
        std::uint32_t count = 0; // 0 for inner nodes
    };
    struct Prim
    {
        Vec3 a, b, c;
        Vec3 normal;
        std::uint32_t object_id = 0;
    };

    std::uint32_t build(std::uint32_t begin, std::uint32_t end, const std::vector<Vec3> &centroids,
                        const std::vector<Aabb> &boxes, int depth);

    template <typename Visit>
    void traverse(const Vec3 &origin, const Vec3 &dir, double t_lo, const double &t_hi, Visit &&visit) const;

    std::vector<Node> nodes_;
    std::vector<Prim> prims_;               // in leaf order
    std::vector<std::uint32_t> tri_index_; // leaf order -> mesh triangle index
};

// First hit of `ray` on `mesh` through its BVH; empty mesh gives nullopt.
std::optional<Hit> ray_mesh_first_hit(const Ray &ray, const Bvh &bvh);

} // namespace isac
