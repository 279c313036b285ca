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

#include "isac/sensing.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "isac/text.hpp"

namespace isac
{

void Trajectory::validate() const
{
    if (waypoints.empty())
        throw TrajectoryError("trajectory '" + frame + "' has no waypoints");
    for (std::size_t i = 0; i < waypoints.size(); ++i)
    {
        validate_pose(waypoints[i].pose);
        if (i > 0 && !(waypoints[i - 1].stamp < waypoints[i].stamp))
            throw TrajectoryError("trajectory '" + frame + "': stamps must strictly increase (waypoint " +
                                  std::to_string(i) + ")");
    }
}

Trajectory parse_trajectory(std::istream &in, std::string frame)
{
    Trajectory traj;
    traj.frame = std::move(frame);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line))
    {
        ++lineno;
        const auto tok = split_words(strip_comment(line));
        if (tok.empty())
            continue;
        if (tok.size() != 8)
            throw TrajectoryError("trajectory line " + std::to_string(lineno) + ": expected 't x y z qw qx qy qz'");
        double v[8];
        try
        {
            for (int i = 0; i < 8; ++i)
                v[i] = parse_double(tok[i]);
        }
        catch (const std::invalid_argument &e)
        {
            throw TrajectoryError("trajectory line " + std::to_string(lineno) + ": " + e.what());
        }
        if (v[0] < 0)
            throw TrajectoryError("trajectory line " + std::to_string(lineno) + ": negative time");
        const Quat q = Quat{v[4], v[5], v[6], v[7]}.normalized();
        traj.waypoints.push_back({SimTime::from_seconds(v[0]), {{v[1], v[2], v[3]}, q}});
    }
    traj.validate();
    return traj;
}

Trajectory load_trajectory(const std::filesystem::path &path, std::string frame)
{
    std::ifstream in(path);
    if (!in)
        throw TrajectoryError("cannot open trajectory " + path.string());
    return parse_trajectory(in, std::move(frame));
}

void write_trajectory(std::ostream &os, const Trajectory &traj)
{
    for (const auto &w : traj.waypoints)
    {
        const Pose &p = w.pose;
        os << fmt_double(w.stamp.seconds()) << ' ' << fmt_double(p.translation.x) << ' '
           << fmt_double(p.translation.y) << ' ' << fmt_double(p.translation.z) << ' ' << fmt_double(p.rotation.w)
           << ' ' << fmt_double(p.rotation.x) << ' ' << fmt_double(p.rotation.y) << ' '
           << fmt_double(p.rotation.z) << '\n';
    }
}

KinematicState state_at(const Trajectory &traj, SimTime t)
{
    const auto &w = traj.waypoints;
    if (w.empty())
        throw TrajectoryError("empty trajectory");
    if (t < w.front().stamp || t > w.back().stamp)
        throw TrajectoryError("time " + std::to_string(t.ns) + " ns outside trajectory '" + traj.frame + "'");
    if (w.size() == 1)
        return {w[0].pose, {}};

    // Segment [i, i+1] with w[i].stamp <= t, the last segment at the end.
    auto it = std::upper_bound(w.begin(), w.end(), t, [](SimTime s, const Waypoint &x) { return s < x.stamp; });
    std::size_t i = static_cast<std::size_t>(it - w.begin()) - 1;
    i = std::min(i, w.size() - 2);
    const Waypoint &a = w[i], &b = w[i + 1];
    const double dt = static_cast<double>((b.stamp - a.stamp).count()) * 1e-9;
    const double s = static_cast<double>((t - a.stamp).count()) / static_cast<double>((b.stamp - a.stamp).count());

    KinematicState st;
    st.pose = (s == 0.0) ? a.pose : (s == 1.0 ? b.pose : pose_interpolate(a.pose, b.pose, s));
    st.twist.linear = (b.pose.translation - a.pose.translation) / dt;
    st.twist.angular = (b.pose.rotation * a.pose.rotation.conjugate()).to_rotation_vector() / dt;
    return st;
}

Vec3 camera_ray(const CameraIntrinsics &k, double u, double v)
{
    return normalized(Vec3{1.0, -(u - k.cx) / k.fx, -(v - k.cy) / k.fy});
}

CameraFrame raycast_camera(const Bvh &scene, const Pose &sensor_in_world, const CameraIntrinsics &k)
{
    CameraFrame f;
    f.width = k.width;
    f.height = k.height;
    f.depth.assign(std::size_t(k.width) * k.height, 0.0f);
    f.semantic.assign(std::size_t(k.width) * k.height, kNoObject);
    for (std::uint32_t v = 0; v < k.height; ++v)
        for (std::uint32_t u = 0; u < k.width; ++u)
        {
            const Vec3 dir = sensor_in_world.rotation.rotate(camera_ray(k, u, v));
            const auto hit = scene.first_hit({sensor_in_world.translation, dir, 0.0, 1e30});
            if (!hit)
                continue;
            const std::size_t idx = std::size_t(v) * k.width + u;
            f.depth[idx] = static_cast<float>(hit->t);
            f.semantic[idx] = hit->object_id;
        }
    return f;
}

std::vector<std::array<float, 3>> raycast_lidar(const Bvh &scene, const Pose &sensor_in_world,
                                                const LidarPattern &p)
{
    std::vector<std::array<float, 3>> out;
    for (double el : p.elevations_rad)
        for (std::uint32_t a = 0; a < p.azimuth_count; ++a)
        {
            const double az = 2.0 * M_PI * a / p.azimuth_count;
            const Vec3 local{std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el)};
            const Vec3 dir = sensor_in_world.rotation.rotate(local);
            const auto hit = scene.first_hit({sensor_in_world.translation, dir, 0.0, p.max_range});
            if (!hit)
                continue;
            const Vec3 q = local * hit->t;
            out.push_back({static_cast<float>(q.x), static_cast<float>(q.y), static_cast<float>(q.z)});
        }
    return out;
}

std::optional<std::array<double, 2>> project_point(const CameraIntrinsics &k, const Pose &camera_in_world,
                                                   const Vec3 &world_point)
{
    const Vec3 c = pose_apply(pose_inverse(camera_in_world), world_point);
    if (!(c.x > 0))
        return std::nullopt;
    const double u = k.cx - k.fx * c.y / c.x;
    const double v = k.cy - k.fy * c.z / c.x;
    if (u < -0.5 || v < -0.5 || u > k.width - 0.5 || v > k.height - 0.5)
        return std::nullopt;
    return std::array<double, 2>{u, v};
}

GnssFixMsg sample_gnss(const KinematicState &s, SimTime stamp, const std::string &frame, const Vec3 &sigma,
                       Prng &prng)
{
    GnssFixMsg m;
    m.header = {stamp, frame};
    m.sigma = sigma;
    m.position = s.pose.translation;
    // Draw even for zero sigma so streams stay aligned across configs.
    m.position += Vec3{sigma.x * prng.gaussian(), sigma.y * prng.gaussian(), sigma.z * prng.gaussian()};
    return m;
}

ImuMsg sample_imu(const Trajectory &traj, SimTime stamp, const std::string &frame, double accel_sigma,
                  double gyro_sigma, Prng &prng)
{
    constexpr std::uint64_t h_ns = 1'000'000;
    const SimTime t0{stamp.ns >= traj.start().ns + h_ns ? stamp.ns - h_ns : traj.start().ns};
    const SimTime t1{stamp.ns + h_ns <= traj.end().ns ? stamp.ns + h_ns : traj.end().ns};
    const KinematicState s = state_at(traj, stamp);
    Vec3 accel{0, 0, 0};
    if (t1.ns > t0.ns)
    {
        // Velocity difference over the clamped window.
        const double dt0 = static_cast<double>(stamp.ns - t0.ns) * 1e-9;
        const double dt1 = static_cast<double>(t1.ns - stamp.ns) * 1e-9;
        const Vec3 p0 = state_at(traj, t0).pose.translation, p1 = state_at(traj, t1).pose.translation;
        const Vec3 p = s.pose.translation;
        if (dt0 > 0 && dt1 > 0)
            accel = ((p1 - p) / dt1 - (p - p0) / dt0) / (0.5 * (dt0 + dt1));
    }
    const Quat inv = s.pose.rotation.conjugate();
    ImuMsg m;
    m.header = {stamp, frame};
    m.orientation = s.pose.rotation;
    m.linear_acceleration = inv.rotate(accel - Vec3{0, 0, -kGravity});
    m.angular_velocity = inv.rotate(s.twist.angular);
    // Braced lists evaluate left to right, so the draw order is fixed.
    m.linear_acceleration += Vec3{accel_sigma * prng.gaussian(), accel_sigma * prng.gaussian(),
                                  accel_sigma * prng.gaussian()};
    m.angular_velocity += Vec3{gyro_sigma * prng.gaussian(), gyro_sigma * prng.gaussian(), gyro_sigma * prng.gaussian()};
    return m;
}

FrontEnd::FrontEnd(Trajectory traj, SensorSuite suite, const Bvh *scene, std::uint64_t seed)
    : traj_(std::move(traj)), suite_(std::move(suite)), scene_(scene),
      gnss_rng_(Prng::for_stream(seed, traj_.frame + "/gnss")), imu_rng_(Prng::for_stream(seed, traj_.frame + "/imu"))
{
    traj_.validate();
    for (double r : {suite_.camera_rate_hz, suite_.lidar_rate_hz, suite_.gnss_rate_hz, suite_.imu_rate_hz,
                     suite_.pose_rate_hz})
        if (!(r > 0))
            throw std::invalid_argument("sensor rates must be positive");
    if (suite_.camera.width == 0 || suite_.camera.height == 0)
        throw std::invalid_argument("camera width and height must be positive");
}

bool FrontEnd::due(SimTime t, double rate_hz) const
{
    const auto period = static_cast<std::uint64_t>(std::llround(1e9 / rate_hz));
    return period == 0 || t.ns % period == 0;
}

namespace
{

template <typename T>
ImageMsg make_image(SimTime t, const std::string &frame, std::uint32_t w, std::uint32_t h, const char *enc,
                    const std::vector<T> &px)
{
    ImageMsg m;
    m.header = {t, frame};
    m.width = w;
    m.height = h;
    m.encoding = enc;
    ByteWriter bw;
    for (const T &x : px)
    {
        if constexpr (std::is_same_v<T, float>)
            bw.f32(x);
        else
            bw.u32(x);
    }
    m.data = bw.take();
    return m;
}

} // namespace

void FrontEnd::on_tick(SimTime t, Bus &bus, FrameTree &tree)
{
    const KinematicState s = state_at(traj_, t);
    const std::string &root = tree.root();

    TfMsg tf{{t, root}, {}};
    if (!mounts_published_)
    {
        for (const auto &[name, mount] : {std::pair{"camera", suite_.camera_mount},
                                          std::pair{"lidar", suite_.lidar_mount}, std::pair{"imu", suite_.imu_mount}})
            tf.transforms.push_back({t, traj_.frame, frame(name), mount, true});
    }
    tf.transforms.insert(tf.transforms.begin(), {t, root, traj_.frame, s.pose, false});
    for (const auto &x : tf.transforms)
        tree.set_transform(x);
    mounts_published_ = true;
    publish_message(bus, kTfTopic, tf);

    if (due(t, suite_.pose_rate_hz))
        publish_message(bus, pose_topic(), OdometryMsg{{t, root}, traj_.frame, s.pose, s.twist});

    if (due(t, suite_.gnss_rate_hz))
        publish_message(bus, "/gnss", sample_gnss(s, t, root, suite_.noise.gnss_sigma, gnss_rng_));

    if (due(t, suite_.imu_rate_hz))
        publish_message(bus, "/imu",
                        sample_imu(traj_, t, frame("imu"), suite_.noise.accel_sigma, suite_.noise.gyro_sigma, imu_rng_));

    if (scene_ && suite_.camera_enabled && due(t, suite_.camera_rate_hz))
    {
        const std::string f = frame("camera");
        const Pose cam = tree.lookup_transform(root, f, t);
        const CameraFrame img = raycast_camera(*scene_, cam, suite_.camera);
        publish_message(bus, "/depth", make_image(t, f, img.width, img.height, "32FC1", img.depth));
        publish_message(bus, "/semantic", make_image(t, f, img.width, img.height, "32UC1", img.semantic));
    }

    if (scene_ && suite_.lidar_enabled && due(t, suite_.lidar_rate_hz))
    {
        const std::string f = frame("lidar");
        const Pose lidar = tree.lookup_transform(root, f, t);
        publish_message(bus, "/lidar", PointCloudMsg{{t, f}, raycast_lidar(*scene_, lidar, suite_.lidar)});
    }
}

} // namespace isac
