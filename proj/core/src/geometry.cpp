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

#include "isac/geometry.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace isac
{

Vec3 normalized(const Vec3 &v)
{
    const double n = norm(v);
    if (!(n > 0.0))
        throw std::invalid_argument("normalized: zero-length vector");
    return v / n;
}

bool is_unit(const Vec3 &v, double tol)
{
    return std::abs(norm(v) - 1.0) <= tol;
}

Quat Quat::from_axis_angle(const Vec3 &axis, double angle)
{
    const Vec3 u = isac::normalized(axis);
    const double s = std::sin(0.5 * angle);
    return {std::cos(0.5 * angle), u.x * s, u.y * s, u.z * s};
}

Quat Quat::between(const Vec3 &from, const Vec3 &to)
{
    const Vec3 a = isac::normalized(from), b = isac::normalized(to);
    const double c = dot(a, b);
    if (c < -1.0 + 1e-12)
    {
        // Antiparallel: rotate pi about any axis orthogonal to a.
        Vec3 axis = cross(a, {1, 0, 0});
        if (isac::norm(axis) < 1e-6)
            axis = cross(a, {0, 1, 0});
        return from_axis_angle(axis, M_PI);
    }
    const Vec3 v = cross(a, b);
    return Quat{1.0 + c, v.x, v.y, v.z}.normalized();
}

Quat Quat::operator*(const Quat &o) const
{
    return {w * o.w - x * o.x - y * o.y - z * o.z,
            w * o.x + x * o.w + y * o.z - z * o.y,
            w * o.y - x * o.z + y * o.w + z * o.x,
            w * o.z + x * o.y - y * o.x + z * o.w};
}

Quat Quat::normalized() const
{
    const double n = norm();
    if (!(n > 0.0))
        throw std::invalid_argument("Quat::normalized: zero quaternion");
    return {w / n, x / n, y / n, z / n};
}

Vec3 Quat::rotate(const Vec3 &v) const
{
    // v' = v + 2w(u×v) + 2u×(u×v)
    const Vec3 u{x, y, z};
    const Vec3 t = 2.0 * cross(u, v);
    return v + w * t + cross(u, t);
}

Vec3 Quat::to_rotation_vector() const
{
    Quat q = *this;
    if (q.w < 0.0)
        q = {-q.w, -q.x, -q.y, -q.z};
    const Vec3 u{q.x, q.y, q.z};
    const double s = isac::norm(u);
    if (s < 1e-12)
        return 2.0 * u; // small-angle limit
    const double angle = 2.0 * std::atan2(s, q.w);
    return u * (angle / s);
}

Quat slerp(const Quat &a, const Quat &b0, double s)
{
    Quat b = b0;
    double c = a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
    if (c < 0.0)
    {
        b = {-b.w, -b.x, -b.y, -b.z};
        c = -c;
    }
    double wa, wb;
    if (c > 1.0 - 1e-12)
    {
        wa = 1.0 - s;
        wb = s;
    }
    else
    {
        const double theta = std::acos(c);
        const double st = std::sin(theta);
        wa = std::sin((1.0 - s) * theta) / st;
        wb = std::sin(s * theta) / st;
    }
    return Quat{wa * a.w + wb * b.w, wa * a.x + wb * b.x, wa * a.y + wb * b.y, wa * a.z + wb * b.z}.normalized();
}

void validate_pose(const Pose &p)
{
    if (std::abs(p.rotation.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("pose rotation is not a unit quaternion");
    const Vec3 &t = p.translation;
    if (!std::isfinite(t.x) || !std::isfinite(t.y) || !std::isfinite(t.z))
        throw std::invalid_argument("pose translation is not finite");
}

Vec3 pose_apply(const Pose &pose, const Vec3 &point)
{
    return pose.rotation.rotate(point) + pose.translation;
}

Pose pose_compose(const Pose &a, const Pose &b)
{
    return {a.rotation.rotate(b.translation) + a.translation, (a.rotation * b.rotation).normalized()};
}

Pose pose_inverse(const Pose &p)
{
    const Quat inv = p.rotation.conjugate();
    return {-inv.rotate(p.translation), inv};
}

Pose pose_interpolate(const Pose &a, const Pose &b, double s)
{
    return {a.translation + (b.translation - a.translation) * s, slerp(a.rotation, b.rotation, s)};
}

Vec3 mirror_across_plane(const Vec3 &point, const Plane &plane)
{
    if (!is_unit(plane.normal))
        throw std::invalid_argument("mirror_across_plane: plane normal is not unit");
    const double d = dot(point - plane.point, plane.normal);
    return point - (2.0 * d) * plane.normal;
}

Ray Ray::make(const Vec3 &origin, const Vec3 &direction, double t_min, double t_max)
{
    if (!is_unit(direction))
        throw std::invalid_argument("Ray: direction is not unit");
    if (t_min < 0.0 || !(t_max > t_min))
        throw std::invalid_argument("Ray: require 0 <= t_min < t_max");
    return {origin, direction, t_min, t_max};
}

Vec3 TriangleMesh::normal(std::size_t tri) const
{
    const Vec3 a = vertex(tri, 0), b = vertex(tri, 1), c = vertex(tri, 2);
    return normalized(cross(b - a, c - a));
}

double TriangleMesh::area(std::size_t tri) const
{
    const Vec3 a = vertex(tri, 0), b = vertex(tri, 1), c = vertex(tri, 2);
    return 0.5 * isac::norm(cross(b - a, c - a));
}

void TriangleMesh::validate() const
{
    if (object_ids.size() != triangles.size())
        throw std::invalid_argument("TriangleMesh: object id count differs from triangle count");
    for (std::size_t i = 0; i < triangles.size(); ++i)
    {
        for (auto idx : triangles[i])
            if (idx >= vertices.size())
                throw std::invalid_argument("TriangleMesh: triangle " + std::to_string(i) + " index out of range");
        if (!(area(i) > 1e-12))
            throw std::invalid_argument("TriangleMesh: triangle " + std::to_string(i) + " is degenerate");
    }
}

void TriangleMesh::append(const TriangleMesh &other)
{
    const auto offset = static_cast<std::uint32_t>(vertices.size());
    vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
    for (const auto &t : other.triangles)
        triangles.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
    object_ids.insert(object_ids.end(), other.object_ids.begin(), other.object_ids.end());
}

double point_triangle_distance(const Vec3 &p, const Vec3 &a, const Vec3 &b, const Vec3 &c)
{
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0.0 && d2 <= 0.0)
        return distance(p, a);

    const Vec3 bp = p - b;
    const double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0.0 && d4 <= d3)
        return distance(p, b);

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0)
        return distance(p, a + ab * (d1 / (d1 - d3)));

    const Vec3 cp = p - c;
    const double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0.0 && d5 <= d6)
        return distance(p, c);

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0)
        return distance(p, a + ac * (d2 / (d2 - d6)));

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
        return distance(p, b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6))));

    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom, w = vc * denom;
    return distance(p, a + ab * v + ac * w);
}

} // namespace isac
