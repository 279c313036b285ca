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

#include <chrono>
#include <cmath>
#include <compare>
#include <cstdint>

namespace isac
{

using Nanos = std::chrono::nanoseconds;

// Simulated time: nanoseconds since session start.
struct SimTime
{
    std::uint64_t ns = 0;

    static SimTime from_seconds(double s) { return {static_cast<std::uint64_t>(std::llround(s * 1e9))}; }
    double seconds() const { return static_cast<double>(ns) / 1e9; }

    SimTime operator+(Nanos d) const { return {ns + static_cast<std::uint64_t>(d.count())}; }
    Nanos operator-(SimTime o) const { return Nanos(static_cast<std::int64_t>(ns) - static_cast<std::int64_t>(o.ns)); }

    auto operator<=>(const SimTime &) const = default;
};

} // namespace isac
