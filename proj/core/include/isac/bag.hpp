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
#include <filesystem>
#include <fstream>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "isac/bus.hpp"
#include "isac/timebase.hpp"

// Session bag file, all integers little-endian:
//
//   "SABG"  u16 version=1  u32 topic_count
//   topic_count x { u16 id, u16 len, name bytes, u16 len, schema bytes }
//   records until EOF: { u64 stamp_ns, u16 topic_id, u32 seq, u32 len, payload }
//
// Records are ordered by (stamp, seq, topic_id). Topic ids are assigned in
// the order the recorder was given, or by sorted topic name when recording
// everything; only topics with at least one record are declared.

namespace isac
{

inline constexpr char kBagMagic[4] = {'S', 'A', 'B', 'G'};
inline constexpr std::uint16_t kBagVersion = 1;

struct BagTopic
{
    std::uint16_t id = 0;
    std::string name;
    std::string schema;
    bool operator==(const BagTopic &) const = default;
};

struct BagRecord
{
    SimTime stamp;
    std::uint16_t topic_id = 0;
    std::uint32_t seq = 0;
    std::vector<std::uint8_t> payload;
    bool operator==(const BagRecord &) const = default;
};

class CorruptBag : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

class BagWriteError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

// Collects envelopes and writes the ordered bag on close().
class BagWriter
{
  public:
    // `topics` restricts and orders the recorded topics; empty records all.
    explicit BagWriter(std::filesystem::path path, std::vector<std::string> topics = {});
    ~BagWriter();
    BagWriter(const BagWriter &) = delete;
    BagWriter &operator=(const BagWriter &) = delete;

    void add(const Envelope &e);
    std::size_t record_count() const { return pending_.size(); }

    // Throws BagWriteError if the file cannot be written.
    void close();

    // The bytes close() would write.
    std::vector<std::uint8_t> serialize() const;

  private:
    std::filesystem::path path_;
    std::vector<std::string> filter_;
    std::vector<Envelope> pending_;
    bool closed_ = false;
};

// Subscribes to a bus and feeds a BagWriter. Call flush() from the
// orchestrating thread (e.g. once per tick) and close() at session end.
class BagRecorder
{
  public:
    BagRecorder(Bus &bus, std::filesystem::path path, std::vector<std::string> topics = {});

    void flush();
    void close();
    std::size_t record_count() const { return writer_.record_count(); }

  private:
    std::vector<std::shared_ptr<Subscription>> subs_;
    BagWriter writer_;
};

class BagReader
{
  public:
    // Throws CorruptBag on bad magic, version or a truncated topic table,
    // std::runtime_error if the file cannot be opened.
    explicit BagReader(const std::filesystem::path &path);

    const std::vector<BagTopic> &topics() const { return topics_; }
    const BagTopic &topic(std::uint16_t id) const;

    // Next record in file order, nullopt at a clean end of file. Throws
    // CorruptBag on a truncated record or an undeclared topic id.
    std::optional<BagRecord> next();

    Envelope to_envelope(const BagRecord &r) const;

  private:
    std::ifstream in_;
    std::vector<BagTopic> topics_;
};

// Reads every record into envelopes.
std::vector<Envelope> read_bag(const std::filesystem::path &path);

struct BagSummary
{
    struct Row
    {
        std::uint16_t id = 0;
        std::string name, schema;
        std::size_t count = 0;
        SimTime first, last;
    };
    std::vector<Row> topics;
    std::size_t records = 0;
    SimTime start, end;
};

BagSummary inspect_bag(const std::filesystem::path &path);
void print_bag_summary(std::ostream &os, const BagSummary &s);

// Re-publishes a bag onto `bus` in stored order. Before the records of a
// new stamp are published the clock jumps to that stamp; after they are
// published `on_stamp` runs (the tick barrier for consumers). Returns the
// number of records played. A truncated bag throws CorruptBag after the
// preceding records have been delivered.
// Records whose topic satisfies `skip` are not published and do not form
// stamp groups.
std::size_t bag_replay(const std::filesystem::path &path, Bus &bus, SimClock &clock,
                       const std::function<void(SimTime)> &on_stamp = {},
                       const std::function<bool(const std::string &)> &skip = {});

} // namespace isac
