#pragma once

// Event log: line-delimited JSON, one event per line, optionally preceded by
// a header record carrying the bucket traffic shares.
//
//   {"record":"header","format":"dco-events","buckets":[{"name":"uniform","share":0.05}, ...]}
//   {"event_id":17,"timestamp":3,"kind":"impression","bucket":"uniform",
//    "user_segment_keys":{"device":"mobile","gender":"female"},"ad_id":"dco-0",
//    "rendered_assets":["t0","i2","d1"]}
//
// Clicks add "price_paid", conversions add "conversion_delay". Readers ignore
// fields they do not know. A missing "event_id" defaults to the line number.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "dco/training.hpp"

namespace dco {

struct BucketShare {
  std::string name;
  double share = 0.0;
};

struct EventLogHeader {
  std::vector<BucketShare> buckets;
};

std::string event_to_json_line(const Event& event);
Event event_from_json_line(const std::string& line, std::size_t line_no);

class EventLogWriter {
 public:
  EventLogWriter(const std::filesystem::path& path, const EventLogHeader& header);
  void write(const Event& event);
  void flush();

 private:
  std::ofstream out_;
};

// Streams every event of `in` to `fn`; returns the header (empty if absent).
EventLogHeader for_each_event(std::istream& in, const std::function<void(const Event&)>& fn);

struct EventLog {
  EventLogHeader header;
  std::vector<Event> events;
};

EventLog read_event_log(const std::filesystem::path& path);
void write_event_log(const std::filesystem::path& path, const EventLog& log);

}  // namespace dco
