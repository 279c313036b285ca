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
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "isac/bvh.hpp"
#include "isac/geometry.hpp"
#include "isac/messages.hpp"
#include "isac/prng.hpp"
#include "isac/time.hpp"
#include "isac/timebase.hpp"

namespace isac
{

class TrajectoryError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

struct Waypoint
{
    SimTime stamp;
    Pose pose;
};

struct Trajectory
{
    std::string frame; // platform frame name
    std::vector<Waypoint> waypoints;

    void validate() const;
    SimTime start() const { return waypoints.front().stamp; }
    SimTime end() const { return waypoints.back().stamp; }
};

// One waypoint per line: `t x y z qw qx qy qz` with t in seconds.
Trajectory parse_trajectory(std::istream &in, std::string frame);
Trajectory load_trajectory(const std::filesystem::path &path, std::string frame);
void write_trajectory(std::ostream &os, const Trajectory &traj);

struct KinematicState
{
    Pose pose;
    Twist twist; // world frame
};

// Piecewise-linear translation, slerped rotation, per-segment constant
// velocities. At an interior waypoint the following segment's velocity
// applies. Throws TrajectoryError outside [start, end].
KinematicState state_at(const Trajectory &traj, SimTime t);

struct CameraIntrinsics
{
    double fx = 32, fy = 32, cx = 31.5, cy = 23.5;
    std::uint32_t width = 64, height = 48;
};

struct LidarPattern
{
    std::uint32_t azimuth_count = 180;
    std::vector<double> elevations_rad{-0.2, -0.1, 0.0, 0.1};
    double max_range = 200.0;
};

inline constexpr std::uint32_t kNoObject = std::numeric_limits<std::uint32_t>::max();

// Pixel (u, v) looks along (1, -(u - cx)/fx, -(v - cy)/fy) in the sensor
// frame (boresight +x, z up). Depth is the range along that ray, 0 for no
// hit; semantic holds the hit object id or kNoObject.
struct CameraFrame
{
    std::uint32_t width = 0, height = 0;
    std::vector<float> depth;
    std::vector<std::uint32_t> semantic;
};

Vec3 camera_ray(const CameraIntrinsics &k, double u, double v);
CameraFrame raycast_camera(const Bvh &scene, const Pose &sensor_in_world, const CameraIntrinsics &k);

// Sensor-frame points origin + t*dir for every beam hit within max range.
std::vector<std::array<float, 3>> raycast_lidar(const Bvh &scene, const Pose &sensor_in_world,
                                                const LidarPattern &p);

// Pinhole projection of a world point; nullopt behind the camera or
// outside the image.
std::optional<std::array<double, 2>> project_point(const CameraIntrinsics &k, const Pose &camera_in_world,
                                                   const Vec3 &world_point);

inline constexpr double kGravity = 9.80665;

struct NavNoise
{
    Vec3 gnss_sigma{0, 0, 0}; // m per axis
    double accel_sigma = 0;   // m/s²
    double gyro_sigma = 0;    // rad/s
};

GnssFixMsg sample_gnss(const KinematicState &s, SimTime stamp, const std::string &frame, const Vec3 &sigma,
                       Prng &prng);

// Specific force R^T (a - g) with g = (0, 0, -kGravity) and a from a 1 ms
// central difference of position (clamped to the trajectory span); body
// angular rate R^T w. Gaussian noise is added per axis.
ImuMsg sample_imu(const Trajectory &traj, SimTime stamp, const std::string &frame, double accel_sigma,
                  double gyro_sigma, Prng &prng);

struct SensorSuite
{
    CameraIntrinsics camera;
    LidarPattern lidar;
    NavNoise noise;
    double camera_rate_hz = 10, lidar_rate_hz = 10, gnss_rate_hz = 10, imu_rate_hz = 100, pose_rate_hz = 100;
    Pose camera_mount{{0.2, 0, -0.1}, Quat::identity()};
    Pose lidar_mount{{0, 0, 0.1}, Quat::identity()};
    Pose imu_mount;
    bool camera_enabled = true, lidar_enabled = true;
};

// Native stand-in for the external physics/sensing front end. Once per
// tick it publishes the platform pose on /tf and /platform/<name>/pose and
// any sensor whose period divides the tick stamp. Sensor poses are read
// back from the frame tree, so every envelope's frame is resolvable.
class FrontEnd
{
  public:
    FrontEnd(Trajectory traj, SensorSuite suite, const Bvh *scene, std::uint64_t seed);

    const std::string &platform() const { return traj_.frame; }
    std::string frame(const std::string &sensor) const { return traj_.frame + "/" + sensor; }
    std::string pose_topic() const { return "/platform/" + traj_.frame + "/pose"; }

    // Throws TrajectoryError outside the trajectory span.
    void on_tick(SimTime t, Bus &bus, FrameTree &tree);

  private:
    bool due(SimTime t, double rate_hz) const;

    Trajectory traj_;
    SensorSuite suite_;
    const Bvh *scene_;
    Prng gnss_rng_, imu_rng_;
    bool mounts_published_ = false;
};

} // namespace isac
