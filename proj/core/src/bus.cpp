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

#include "isac/bus.hpp"

#include <algorithm>
#include <numeric>

namespace isac
{

std::optional<Envelope> Subscription::try_pop()
{
    std::lock_guard lock(mutex_);
    if (queue_.empty())
        return std::nullopt;
    Envelope e = std::move(queue_.front());
    queue_.pop_front();
    return e;
}

std::vector<Envelope> Subscription::drain()
{
    std::lock_guard lock(mutex_);
    std::vector<Envelope> out(std::make_move_iterator(queue_.begin()), std::make_move_iterator(queue_.end()));
    queue_.clear();
    return out;
}

std::size_t Subscription::pending() const
{
    std::lock_guard lock(mutex_);
    return queue_.size();
}

void Subscription::push(const Envelope &e)
{
    std::lock_guard lock(mutex_);
    queue_.push_back(e);
}

Bus::Topic &Bus::topic_for(std::string_view name)
{
    {
        std::shared_lock lock(registry_mutex_);
        if (auto it = topics_.find(name); it != topics_.end())
            return *it->second;
    }
    std::unique_lock lock(registry_mutex_);
    auto [it, inserted] = topics_.try_emplace(std::string(name), nullptr);
    if (inserted)
        it->second = std::make_unique<Topic>();
    return *it->second;
}

Envelope Bus::publish(std::string_view topic_name, std::string_view schema, Header header,
                      std::vector<std::uint8_t> payload)
{
    Topic &topic = topic_for(topic_name);

    std::shared_lock registry(registry_mutex_);
    std::lock_guard lock(topic.mutex);
    if (topic.schema.empty())
        topic.schema = std::string(schema);
    else if (topic.schema != schema)
        throw SchemaMismatch("topic '" + std::string(topic_name) + "' carries '" + topic.schema + "', not '" +
                             std::string(schema) + "'");

    Envelope e{std::string(topic_name), std::string(schema), std::move(header), topic.next_seq++,
               std::move(payload)};

    auto deliver = [&e](std::vector<std::weak_ptr<Subscription>> &subs) {
        std::erase_if(subs, [](const auto &w) { return w.expired(); });
        for (auto &w : subs)
            if (auto s = w.lock())
                s->push(e);
    };
    deliver(topic.subscribers);
    for (auto &w : wildcard_)
        if (auto s = w.lock())
            s->push(e);
    return e;
}

std::shared_ptr<Subscription> Bus::subscribe(std::string_view topic_name)
{
    Topic &topic = topic_for(topic_name);
    auto sub = std::make_shared<Subscription>();
    std::lock_guard lock(topic.mutex);
    topic.subscribers.push_back(sub);
    return sub;
}

std::shared_ptr<Subscription> Bus::subscribe_all()
{
    auto sub = std::make_shared<Subscription>();
    std::unique_lock lock(registry_mutex_);
    wildcard_.push_back(sub);
    return sub;
}

std::vector<TopicInfo> Bus::topics() const
{
    std::shared_lock lock(registry_mutex_);
    std::vector<TopicInfo> out;
    for (const auto &[name, topic] : topics_)
    {
        std::lock_guard tl(topic->mutex);
        if (!topic->schema.empty())
            out.push_back({name, topic->schema, topic->next_seq});
    }
    return out;
}

ApproxTimeSync::ApproxTimeSync(std::size_t streams, Nanos slop) : queues_(streams), slop_(slop)
{
    if (streams < 2)
        throw std::invalid_argument("ApproxTimeSync: need at least two streams");
    if (slop.count() < 0)
        throw std::invalid_argument("ApproxTimeSync: slop must be non-negative");
}

std::vector<std::vector<Envelope>> ApproxTimeSync::push(std::size_t index, Envelope e)
{
    queues_.at(index).push_back(std::move(e));
    std::vector<std::vector<Envelope>> out;
    for (;;)
    {
        if (std::any_of(queues_.begin(), queues_.end(), [](const auto &q) { return q.empty(); }))
            return out;
        std::size_t oldest = 0;
        SimTime lo = queues_[0].front().header.stamp, hi = lo;
        for (std::size_t i = 1; i < queues_.size(); ++i)
        {
            const SimTime s = queues_[i].front().header.stamp;
            if (s < lo)
                lo = s, oldest = i;
            hi = std::max(hi, s);
        }
        if (hi - lo <= slop_)
        {
            std::vector<Envelope> tuple;
            tuple.reserve(queues_.size());
            for (auto &q : queues_)
            {
                tuple.push_back(std::move(q.front()));
                q.pop_front();
            }
            out.push_back(std::move(tuple));
        }
        else
        {
            queues_[oldest].pop_front();
            ++dropped_;
        }
    }
}

std::vector<std::vector<Envelope>> approx_sync(const std::vector<std::vector<Envelope>> &streams, Nanos slop)
{
    ApproxTimeSync sync(streams.size(), slop);
    struct Item
    {
        SimTime stamp;
        std::size_t stream, index;
    };
    std::vector<Item> merged;
    for (std::size_t s = 0; s < streams.size(); ++s)
        for (std::size_t i = 0; i < streams[s].size(); ++i)
            merged.push_back({streams[s][i].header.stamp, s, i});
    std::stable_sort(merged.begin(), merged.end(), [](const Item &a, const Item &b) {
        if (a.stamp != b.stamp)
            return a.stamp < b.stamp;
        return a.stream < b.stream;
    });

    std::vector<std::vector<Envelope>> out;
    for (const Item &it : merged)
    {
        auto ready = sync.push(it.stream, streams[it.stream][it.index]);
        std::move(ready.begin(), ready.end(), std::back_inserter(out));
    }
    return out;
}

} // namespace isac
