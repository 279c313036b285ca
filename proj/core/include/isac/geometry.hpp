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
#include <cmath>
#include <cstdint>
#include <vector>

// Vector, rotation and pose algebra plus indexed triangle meshes.
// Right-handed, z-up, meters and radians throughout.

namespace isac
{

struct Vec3
{
    double x = 0.0, y = 0.0, z = 0.0;

    constexpr Vec3 operator+(const Vec3 &o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3 &o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    constexpr Vec3 &operator+=(const Vec3 &o)
    {
        x += o.x, y += o.y, z += o.z;
        return *this;
    }
    constexpr Vec3 &operator-=(const Vec3 &o)
    {
        x -= o.x, y -= o.y, z -= o.z;
        return *this;
    }
    constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr bool operator==(const Vec3 &) const = default;
};

constexpr Vec3 operator*(double s, const Vec3 &v) { return v * s; }
constexpr double dot(const Vec3 &a, const Vec3 &b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3 &a, const Vec3 &b)
{
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3 &v) { return std::sqrt(dot(v, v)); }
inline double distance(const Vec3 &a, const Vec3 &b) { return norm(a - b); }

// Throws std::invalid_argument on a zero-length input.
Vec3 normalized(const Vec3 &v);

// True when |‖v‖ - 1| <= tol.
bool is_unit(const Vec3 &v, double tol = 1e-9);

// Unit quaternion (w, x, y, z), Hamilton convention, active rotation.
struct Quat
{
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    static Quat identity() { return {}; }
    static Quat from_axis_angle(const Vec3 &axis, double angle);
    static Quat from_yaw(double yaw) { return from_axis_angle({0, 0, 1}, yaw); }

    // Shortest rotation taking unit vector `from` onto unit vector `to`.
    static Quat between(const Vec3 &from, const Vec3 &to);

    Quat operator*(const Quat &o) const;
    Quat conjugate() const { return {w, -x, -y, -z}; }
    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
    Quat normalized() const;
    Vec3 rotate(const Vec3 &v) const;

    // Rotation vector (axis * angle), angle in [0, pi].
    Vec3 to_rotation_vector() const;

    bool operator==(const Quat &) const = default;
};

// Spherical interpolation along the short arc; s in [0, 1].
Quat slerp(const Quat &a, const Quat &b, double s);

struct Pose
{
    Vec3 translation;
    Quat rotation;

    static Pose identity() { return {}; }
    bool operator==(const Pose &) const = default;
};

// Throws std::invalid_argument if the rotation is not unit within 1e-9.
void validate_pose(const Pose &p);

// Maps a point expressed in the pose's child frame into its parent frame.
Vec3 pose_apply(const Pose &pose, const Vec3 &point);

// (a ∘ b): apply b first, then a.
Pose pose_compose(const Pose &a, const Pose &b);
Pose pose_inverse(const Pose &p);

// Linear interpolation of translation, slerp of rotation.
Pose pose_interpolate(const Pose &a, const Pose &b, double s);

struct Twist
{
    Vec3 linear;  // m/s
    Vec3 angular; // rad/s
    bool operator==(const Twist &) const = default;
};

struct Plane
{
    Vec3 point;
    Vec3 normal; // unit
};

// Reflects `point` across `plane`. Throws std::invalid_argument for a
// non-unit normal.
Vec3 mirror_across_plane(const Vec3 &point, const Plane &plane);

struct Ray
{
    Vec3 origin;
    Vec3 direction; // unit
    double t_min = 0.0;
    double t_max = 1e30;

    // Validates unit direction and 0 <= t_min < t_max.
    static Ray make(const Vec3 &origin, const Vec3 &direction, double t_min = 0.0, double t_max = 1e30);
};

using Triangle = std::array<std::uint32_t, 3>;

struct TriangleMesh
{
    std::vector<Vec3> vertices;
    std::vector<Triangle> triangles;
    std::vector<std::uint32_t> object_ids; // one per triangle

    std::size_t size() const { return triangles.size(); }
    bool empty() const { return triangles.empty(); }

    Vec3 vertex(std::size_t tri, int corner) const { return vertices[triangles[tri][corner]]; }
    Vec3 normal(std::size_t tri) const;
    double area(std::size_t tri) const;

    // Indices in range, one object id per triangle, area > 1e-12 m².
    // Throws std::invalid_argument naming the first violation.
    void validate() const;

    // Appends `other`, offsetting vertex indices.
    void append(const TriangleMesh &other);
};

// Closest distance from a point to a triangle (Ericson's region test).
double point_triangle_distance(const Vec3 &p, const Vec3 &a, const Vec3 &b, const Vec3 &c);

} // namespace isac
