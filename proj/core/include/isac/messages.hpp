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
#include <concepts>
#include <string>
#include <string_view>
#include <vector>

#include "isac/bus.hpp"
#include "isac/bytes.hpp"
#include "isac/geometry.hpp"
#include "isac/timebase.hpp"

// Message schemas carried on the bus and in bags.
//
// Every payload except the clock starts with its header: u64 stamp_ns,
// then the frame id as a u32-length-prefixed UTF-8 string. The clock
// payload is a single u64 nanosecond count. Sensing schemas follow the
// usual robotics message shapes; channel schemas live under isac_msgs/.

namespace isac
{

template <typename T>
concept Message = requires(const T &m, ByteWriter &w, ByteReader &r) {
    { T::kSchema } -> std::convertible_to<std::string_view>;
    { m.encode(w) };
    { T::decode(r) } -> std::same_as<T>;
    { m.header_view() } -> std::same_as<Header>;
};

void encode_header(ByteWriter &w, const Header &h);
Header decode_header(ByteReader &r);

struct ClockMsg
{
    static constexpr std::string_view kSchema = "rosgraph_msgs/Clock";
    SimTime time;

    void encode(ByteWriter &w) const { w.u64(time.ns); }
    static ClockMsg decode(ByteReader &r) { return {SimTime{r.u64()}}; }
    Header header_view() const { return {time, ""}; }
    bool operator==(const ClockMsg &) const = default;
};

struct TfMsg
{
    static constexpr std::string_view kSchema = "tf2_msgs/TFMessage";
    Header header;
    std::vector<StampedTransform> transforms;

    void encode(ByteWriter &w) const;
    static TfMsg decode(ByteReader &r);
    Header header_view() const { return header; }
    bool operator==(const TfMsg &) const = default;
};

struct OdometryMsg
{
    static constexpr std::string_view kSchema = "nav_msgs/Odometry";
    Header header; // frame_id: world frame
    std::string child_frame;
    Pose pose;
    Twist twist; // world-frame linear and angular velocity

    void encode(ByteWriter &w) const;
    static OdometryMsg decode(ByteReader &r);
    Header header_view() const { return header; }
    bool operator==(const OdometryMsg &) const = default;
};

// Position fix in the local world frame (meters) with per-axis 1-sigma.
struct GnssFixMsg
{
    static constexpr std::string_view kSchema = "isac_msgs/GnssFix";
    Header header;
    Vec3 position;
    Vec3 sigma;

    void encode(ByteWriter &w) const;
    static GnssFixMsg decode(ByteReader &r);
    Header header_view() const { return header; }
    bool operator==(const GnssFixMsg &) const = default;
};

struct ImuMsg
{
    static constexpr std::string_view kSchema = "sensor_msgs/Imu";
    Header header;
    Quat orientation;
    Vec3 angular_velocity;    // body frame, rad/s
    Vec3 linear_acceleration; // body-frame specific force, m/s²

    void encode(ByteWriter &w) const;
    static ImuMsg decode(ByteReader &r);
    Header header_view() const { return header; }
    bool operator==(const ImuMsg &) const = default;
};

// Row-major image. Encodings: "32FC1" (depth, meters, little-endian
// float32) and "32UC1" (semantic object ids, little-endian uint32).
struct ImageMsg
{
    static constexpr std::string_view kSchema = "sensor_msgs/Image";
    Header header;
    std::uint32_t height = 0, width = 0;
    std::string encoding;
    std::vector<std::uint8_t> data;

    void encode(ByteWriter &w) const;
    static ImageMsg decode(ByteReader &r);
    Header header_view() const { return header; }
    bool operator==(const ImageMsg &) const = default;
};

struct PointCloudMsg
{
    static constexpr std::string_view kSchema = "sensor_msgs/PointCloud";
    Header header;
    std::vector<std::array<float, 3>> points; // sensor frame, meters

    void encode(ByteWriter &w) const;
    static PointCloudMsg decode(ByteReader &r);
    Header header_view() const { return header; }
    bool operator==(const PointCloudMsg &) const = default;
};

template <Message T>
std::vector<std::uint8_t> encode_message(const T &m)
{
    ByteWriter w;
    m.encode(w);
    return w.take();
}

// Throws DecodeError on schema mismatch or malformed payload.
template <Message T>
T decode_message(const Envelope &e)
{
    if (e.schema != T::kSchema)
        throw DecodeError("expected schema " + std::string(T::kSchema) + ", got " + e.schema);
    ByteReader r(e.payload);
    T m = T::decode(r);
    r.expect_end();
    return m;
}

template <Message T>
Envelope publish_message(Bus &bus, std::string_view topic, const T &m)
{
    return bus.publish(topic, T::kSchema, m.header_view(), encode_message(m));
}

// Header carried by a stored payload; the clock schema has none, so its
// header is {stamp, ""}.
Header header_from_payload(std::string_view schema, std::span<const std::uint8_t> payload, SimTime stamp);

} // namespace isac
