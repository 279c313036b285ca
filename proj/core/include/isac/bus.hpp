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
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "isac/time.hpp"

namespace isac
{

struct Header
{
    SimTime stamp;
    std::string frame_id;
    bool operator==(const Header &) const = default;
};

struct Envelope
{
    std::string topic;
    std::string schema;
    Header header;
    std::uint32_t seq = 0;
    std::vector<std::uint8_t> payload;
    bool operator==(const Envelope &) const = default;
};

class SchemaMismatch : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

// FIFO of envelopes delivered to one subscriber. Thread-safe.
class Subscription
{
  public:
    std::optional<Envelope> try_pop();
    std::vector<Envelope> drain();
    std::size_t pending() const;

  private:
    friend class Bus;
    void push(const Envelope &e);

    mutable std::mutex mutex_;
    std::deque<Envelope> queue_;
};

struct TopicInfo
{
    std::string name;
    std::string schema;
    std::uint32_t published = 0;
};

// In-process topic bus. Each topic's schema is fixed by its first publish;
// seq numbers count up from 0 per topic. Every subscriber of a topic sees
// that topic's envelopes in publish order, including under concurrent
// publishers. Queues are unbounded.
class Bus
{
  public:
    Bus() = default;
    Bus(const Bus &) = delete;
    Bus &operator=(const Bus &) = delete;

    // Throws SchemaMismatch if `schema` differs from the topic's schema.
    Envelope publish(std::string_view topic, std::string_view schema, Header header,
                     std::vector<std::uint8_t> payload);

    std::shared_ptr<Subscription> subscribe(std::string_view topic);
    // Receives every topic, including topics created later.
    std::shared_ptr<Subscription> subscribe_all();

    std::vector<TopicInfo> topics() const;

  private:
    struct Topic
    {
        std::string schema;
        std::uint32_t next_seq = 0;
        std::vector<std::weak_ptr<Subscription>> subscribers;
        std::mutex mutex;
    };
    Topic &topic_for(std::string_view name);

    mutable std::shared_mutex registry_mutex_;
    std::map<std::string, std::unique_ptr<Topic>, std::less<>> topics_;
    std::vector<std::weak_ptr<Subscription>> wildcard_;
};

// Greedy approximate-time synchronizer over N streams. When every queue
// holds an envelope, the heads are tested: if max(stamp) - min(stamp) <=
// slop they are emitted as one tuple, otherwise the single oldest head is
// dropped (lowest stream index on ties) and the test repeats. Each
// envelope is used at most once; a starved stream stalls output.
class ApproxTimeSync
{
  public:
    ApproxTimeSync(std::size_t streams, Nanos slop);

    // Queues `e` on stream `index` and returns any tuples that became ready.
    std::vector<std::vector<Envelope>> push(std::size_t index, Envelope e);

    std::size_t dropped() const { return dropped_; }

  private:
    std::vector<std::deque<Envelope>> queues_;
    Nanos slop_;
    std::size_t dropped_ = 0;
};

// Batch form: feeds each stream's envelopes in stamp order (merged by
// stamp, then stream index) and returns every emitted tuple.
std::vector<std::vector<Envelope>> approx_sync(const std::vector<std::vector<Envelope>> &streams, Nanos slop);

} // namespace isac
