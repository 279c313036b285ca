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

#include "isac/messages.hpp"

namespace isac
{

void encode_header(ByteWriter &w, const Header &h)
{
    w.u64(h.stamp.ns);
    w.str(h.frame_id);
}

Header decode_header(ByteReader &r)
{
    Header h;
    h.stamp = SimTime{r.u64()};
    h.frame_id = r.str();
    return h;
}

void TfMsg::encode(ByteWriter &w) const
{
    encode_header(w, header);
    w.u32(static_cast<std::uint32_t>(transforms.size()));
    for (const auto &t : transforms)
    {
        w.u64(t.stamp.ns);
        w.str(t.parent);
        w.str(t.child);
        w.vec3(t.pose.translation);
        w.quat(t.pose.rotation);
        w.u8(t.is_static ? 1 : 0);
    }
}

TfMsg TfMsg::decode(ByteReader &r)
{
    TfMsg m;
    m.header = decode_header(r);
    const std::uint32_t n = r.u32();
    for (std::uint32_t i = 0; i < n; ++i)
    {
        StampedTransform t;
        t.stamp = SimTime{r.u64()};
        t.parent = r.str();
        t.child = r.str();
        t.pose.translation = r.vec3();
        t.pose.rotation = r.quat();
        t.is_static = r.u8() != 0;
        m.transforms.push_back(std::move(t));
    }
    return m;
}

void OdometryMsg::encode(ByteWriter &w) const
{
    encode_header(w, header);
    w.str(child_frame);
    w.vec3(pose.translation);
    w.quat(pose.rotation);
    w.vec3(twist.linear);
    w.vec3(twist.angular);
}

OdometryMsg OdometryMsg::decode(ByteReader &r)
{
    OdometryMsg m;
    m.header = decode_header(r);
    m.child_frame = r.str();
    m.pose.translation = r.vec3();
    m.pose.rotation = r.quat();
    m.twist.linear = r.vec3();
    m.twist.angular = r.vec3();
    return m;
}

void GnssFixMsg::encode(ByteWriter &w) const
{
    encode_header(w, header);
    w.vec3(position);
    w.vec3(sigma);
}

GnssFixMsg GnssFixMsg::decode(ByteReader &r)
{
    GnssFixMsg m;
    m.header = decode_header(r);
    m.position = r.vec3();
    m.sigma = r.vec3();
    return m;
}

void ImuMsg::encode(ByteWriter &w) const
{
    encode_header(w, header);
    w.quat(orientation);
    w.vec3(angular_velocity);
    w.vec3(linear_acceleration);
}

ImuMsg ImuMsg::decode(ByteReader &r)
{
    ImuMsg m;
    m.header = decode_header(r);
    m.orientation = r.quat();
    m.angular_velocity = r.vec3();
    m.linear_acceleration = r.vec3();
    return m;
}

void ImageMsg::encode(ByteWriter &w) const
{
    encode_header(w, header);
    w.u32(height);
    w.u32(width);
    w.str(encoding);
    w.u32(static_cast<std::uint32_t>(data.size()));
    w.raw(data.data(), data.size());
}

ImageMsg ImageMsg::decode(ByteReader &r)
{
    ImageMsg m;
    m.header = decode_header(r);
    m.height = r.u32();
    m.width = r.u32();
    m.encoding = r.str();
    const std::uint32_t n = r.u32();
    auto bytes = r.raw(n);
    m.data.assign(bytes.begin(), bytes.end());
    return m;
}

void PointCloudMsg::encode(ByteWriter &w) const
{
    encode_header(w, header);
    w.u32(static_cast<std::uint32_t>(points.size()));
    for (const auto &p : points)
        w.f32(p[0]), w.f32(p[1]), w.f32(p[2]);
}

PointCloudMsg PointCloudMsg::decode(ByteReader &r)
{
    PointCloudMsg m;
    m.header = decode_header(r);
    const std::uint32_t n = r.u32();
    m.points.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i)
    {
        const float x = r.f32(), y = r.f32(), z = r.f32();
        m.points.push_back({x, y, z});
    }
    return m;
}

Header header_from_payload(std::string_view schema, std::span<const std::uint8_t> payload, SimTime stamp)
{
    if (schema == ClockMsg::kSchema)
        return {stamp, ""};
    ByteReader r(payload);
    return decode_header(r);
}

} // namespace isac
