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

#include "isac/bag.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <ostream>

#include "isac/bytes.hpp"
#include "isac/messages.hpp"

namespace isac
{

BagWriter::BagWriter(std::filesystem::path path, std::vector<std::string> topics)
    : path_(std::move(path)), filter_(std::move(topics))
{
}

BagWriter::~BagWriter()
{
    if (!closed_)
    {
        try
        {
            close();
        }
        catch (...)
        {
        }
    }
}

void BagWriter::add(const Envelope &e)
{
    if (closed_)
        throw BagWriteError("bag already closed");
    if (!filter_.empty() && std::find(filter_.begin(), filter_.end(), e.topic) == filter_.end())
        return;
    pending_.push_back(e);
}

std::vector<std::uint8_t> BagWriter::serialize() const
{
    // Topic table.
    std::map<std::string, std::string> seen; // name -> schema
    for (const auto &e : pending_)
        seen.emplace(e.topic, e.schema);
    std::vector<BagTopic> topics;
    if (filter_.empty())
    {
        for (const auto &[name, schema] : seen)
            topics.push_back({static_cast<std::uint16_t>(topics.size()), name, schema});
    }
    else
    {
        for (const auto &name : filter_)
            if (auto it = seen.find(name); it != seen.end())
                topics.push_back({static_cast<std::uint16_t>(topics.size()), name, it->second});
    }
    if (topics.size() > 0xFFFF)
        throw BagWriteError("too many topics for a bag");
    std::map<std::string, std::uint16_t> ids;
    for (const auto &t : topics)
        ids[t.name] = t.id;

    std::vector<const Envelope *> order;
    order.reserve(pending_.size());
    for (const auto &e : pending_)
        order.push_back(&e);
    std::sort(order.begin(), order.end(), [&](const Envelope *a, const Envelope *b) {
        if (a->header.stamp != b->header.stamp)
            return a->header.stamp < b->header.stamp;
        if (a->seq != b->seq)
            return a->seq < b->seq;
        return ids.at(a->topic) < ids.at(b->topic);
    });

    ByteWriter w;
    w.raw(kBagMagic, 4);
    w.u16(kBagVersion);
    w.u32(static_cast<std::uint32_t>(topics.size()));
    for (const auto &t : topics)
    {
        w.u16(t.id);
        w.str16(t.name);
        w.str16(t.schema);
    }
    for (const Envelope *e : order)
    {
        w.u64(e->header.stamp.ns);
        w.u16(ids.at(e->topic));
        w.u32(e->seq);
        w.u32(static_cast<std::uint32_t>(e->payload.size()));
        w.raw(e->payload.data(), e->payload.size());
    }
    return w.take();
}

void BagWriter::close()
{
    if (closed_)
        return;
    closed_ = true;
    const auto bytes = serialize();
    std::ofstream out(path_, std::ios::binary | std::ios::trunc);
    if (!out)
        throw BagWriteError("cannot open " + path_.string() + " for writing");
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out)
        throw BagWriteError("write to " + path_.string() + " failed");
}

BagRecorder::BagRecorder(Bus &bus, std::filesystem::path path, std::vector<std::string> topics)
    : writer_(std::move(path), topics)
{
    if (topics.empty())
        subs_.push_back(bus.subscribe_all());
    else
        for (const auto &t : topics)
            subs_.push_back(bus.subscribe(t));
}

void BagRecorder::flush()
{
    for (auto &s : subs_)
        for (auto &e : s->drain())
            writer_.add(e);
}

void BagRecorder::close()
{
    flush();
    writer_.close();
}

namespace
{

// Reads exactly n bytes; returns the count actually read.
std::size_t read_bytes(std::ifstream &in, void *dst, std::size_t n)
{
    in.read(static_cast<char *>(dst), static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(in.gcount());
}

template <typename T>
T read_le(std::ifstream &in, const char *what)
{
    std::uint8_t buf[sizeof(T)];
    if (read_bytes(in, buf, sizeof(T)) != sizeof(T))
        throw CorruptBag(std::string("truncated bag: ") + what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return static_cast<T>(v);
}

std::string read_str16(std::ifstream &in, const char *what)
{
    const auto n = read_le<std::uint16_t>(in, what);
    std::string s(n, '\0');
    if (read_bytes(in, s.data(), n) != n)
        throw CorruptBag(std::string("truncated bag: ") + what);
    return s;
}

} // namespace

BagReader::BagReader(const std::filesystem::path &path) : in_(path, std::ios::binary)
{
    if (!in_)
        throw std::runtime_error("cannot open bag " + path.string());
    char magic[4];
    if (read_bytes(in_, magic, 4) != 4 || !std::equal(magic, magic + 4, kBagMagic))
        throw CorruptBag("not a session bag (bad magic): " + path.string());
    const auto version = read_le<std::uint16_t>(in_, "version");
    if (version != kBagVersion)
        throw CorruptBag("unsupported bag version " + std::to_string(version));
    const auto count = read_le<std::uint32_t>(in_, "topic count");
    for (std::uint32_t i = 0; i < count; ++i)
    {
        BagTopic t;
        t.id = read_le<std::uint16_t>(in_, "topic id");
        t.name = read_str16(in_, "topic name");
        t.schema = read_str16(in_, "topic schema");
        if (t.id != i)
            throw CorruptBag("topic ids are not sequential");
        topics_.push_back(std::move(t));
    }
}

const BagTopic &BagReader::topic(std::uint16_t id) const
{
    if (id >= topics_.size())
        throw CorruptBag("record references undeclared topic id " + std::to_string(id));
    return topics_[id];
}

std::optional<BagRecord> BagReader::next()
{
    std::uint8_t probe;
    if (read_bytes(in_, &probe, 1) == 0)
        return std::nullopt;
    in_.unget();
    in_.clear();

    BagRecord r;
    r.stamp = SimTime{read_le<std::uint64_t>(in_, "record stamp")};
    r.topic_id = read_le<std::uint16_t>(in_, "record topic id");
    r.seq = read_le<std::uint32_t>(in_, "record seq");
    const auto len = read_le<std::uint32_t>(in_, "record length");
    topic(r.topic_id);
    r.payload.resize(len);
    if (read_bytes(in_, r.payload.data(), len) != len)
        throw CorruptBag("truncated bag: record payload");
    return r;
}

Envelope BagReader::to_envelope(const BagRecord &r) const
{
    const BagTopic &t = topic(r.topic_id);
    Envelope e;
    e.topic = t.name;
    e.schema = t.schema;
    e.header = header_from_payload(t.schema, r.payload, r.stamp);
    e.seq = r.seq;
    e.payload = r.payload;
    return e;
}

std::vector<Envelope> read_bag(const std::filesystem::path &path)
{
    BagReader reader(path);
    std::vector<Envelope> out;
    while (auto r = reader.next())
        out.push_back(reader.to_envelope(*r));
    return out;
}

BagSummary inspect_bag(const std::filesystem::path &path)
{
    BagReader reader(path);
    BagSummary s;
    for (const auto &t : reader.topics())
        s.topics.push_back({t.id, t.name, t.schema, 0, {}, {}});
    bool first = true;
    while (auto r = reader.next())
    {
        auto &row = s.topics[r->topic_id];
        if (row.count == 0)
            row.first = r->stamp;
        row.last = r->stamp;
        ++row.count;
        ++s.records;
        if (first)
            s.start = r->stamp, first = false;
        s.end = r->stamp;
    }
    return s;
}

void print_bag_summary(std::ostream &os, const BagSummary &s)
{
    os << "records: " << s.records << "\n";
    os << "span:    " << std::fixed << std::setprecision(3) << s.start.seconds() << " s .. " << s.end.seconds()
       << " s\n";
    os << "topics:  " << s.topics.size() << "\n";
    for (const auto &t : s.topics)
        os << "  [" << t.id << "] " << std::left << std::setw(24) << t.name << std::setw(24) << t.schema
           << std::right << std::setw(8) << t.count << "\n";
    os.unsetf(std::ios::floatfield);
}

std::size_t bag_replay(const std::filesystem::path &path, Bus &bus, SimClock &clock,
                       const std::function<void(SimTime)> &on_stamp,
                       const std::function<bool(const std::string &)> &skip)
{
    BagReader reader(path);
    std::size_t played = 0;
    std::optional<SimTime> current;
    for (;;)
    {
        std::optional<BagRecord> r;
        try
        {
            r = reader.next();
        }
        catch (const CorruptBag &)
        {
            if (current && on_stamp)
                on_stamp(*current);
            throw;
        }
        if (!r)
            break;
        if (skip && skip(reader.topic(r->topic_id).name))
            continue;
        if (!current || r->stamp != *current)
        {
            if (current && on_stamp)
                on_stamp(*current);
            if (r->stamp > clock.now())
                clock.jump_to(r->stamp);
            current = r->stamp;
        }
        Envelope e = reader.to_envelope(*r);
        bus.publish(e.topic, e.schema, std::move(e.header), std::move(e.payload));
        ++played;
    }
    if (current && on_stamp)
        on_stamp(*current);
    return played;
}

} // namespace isac
