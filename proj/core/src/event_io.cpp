#include "dco/event_io.hpp"

#include <istream>

#include "json_util.hpp"

namespace dco {

using detail::json;

std::string event_to_json_line(const Event& event) {
  json j = {
      {"event_id", event.event_id},
      {"timestamp", event.timestamp},
      {"kind", to_string(event.kind)},
      {"bucket", event.bucket},
      {"user_segment_keys", event.user_segment_keys},
      {"ad_id", event.ad_id},
      {"rendered_assets", event.rendered_assets},
  };
  if (event.kind == EventKind::click) j["price_paid"] = event.price_paid;
  if (event.kind == EventKind::conversion) j["conversion_delay"] = event.conversion_delay;
  return j.dump();
}

namespace {

Event event_from_json(const json& j, std::size_t line_no) {
  const std::string what = "event log line " + std::to_string(line_no);
  Event e;
  e.event_id = j.contains("event_id") ? detail::get_field<std::uint64_t>(j, "event_id", what)
                                      : static_cast<std::uint64_t>(line_no);
  e.timestamp = detail::get_field<std::int64_t>(j, "timestamp", what);
  const auto kind = parse_event_kind(detail::get_field<std::string>(j, "kind", what));
  if (!kind) throw FormatError(what + ": unknown event kind");
  e.kind = *kind;
  if (j.contains("user_segment_keys")) {
    e.user_segment_keys = detail::get_field<UserFeatureMap>(j, "user_segment_keys", what);
  }
  e.ad_id = detail::get_field<std::string>(j, "ad_id", what);
  if (j.contains("rendered_assets")) {
    e.rendered_assets = detail::get_field<std::vector<std::string>>(j, "rendered_assets", what);
  }
  if (j.contains("price_paid")) e.price_paid = detail::get_field<double>(j, "price_paid", what);
  if (j.contains("conversion_delay")) {
    e.conversion_delay = detail::get_field<std::int64_t>(j, "conversion_delay", what);
  }
  if (j.contains("bucket")) e.bucket = detail::get_field<std::string>(j, "bucket", what);
  return e;
}

}  // namespace

Event event_from_json_line(const std::string& line, std::size_t line_no) {
  return event_from_json(detail::parse_line(line, "event log", line_no), line_no);
}

EventLogWriter::EventLogWriter(const std::filesystem::path& path, const EventLogHeader& header)
    : out_(detail::open_out(path)) {
  json buckets = json::array();
  for (const auto& b : header.buckets) buckets.push_back({{"name", b.name}, {"share", b.share}});
  out_ << json{{"record", "header"}, {"format", "dco-events"}, {"buckets", buckets}}.dump()
       << '\n';
}

void EventLogWriter::write(const Event& event) { out_ << event_to_json_line(event) << '\n'; }

void EventLogWriter::flush() { out_.flush(); }

EventLogHeader for_each_event(std::istream& in, const std::function<void(const Event&)>& fn) {
  EventLogHeader header;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json j = detail::parse_line(line, "event log", line_no);
    const std::string record = j.value("record", "event");
    if (record == "header") {
      for (const auto& b : j.value("buckets", json::array())) {
        header.buckets.push_back({b.value("name", ""), b.value("share", 0.0)});
      }
      continue;
    }
    if (record != "event") continue;
    fn(event_from_json(j, line_no));
  }
  return header;
}

EventLog read_event_log(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  EventLog log;
  log.header = for_each_event(in, [&](const Event& e) { log.events.push_back(e); });
  return log;
}

void write_event_log(const std::filesystem::path& path, const EventLog& log) {
  EventLogWriter writer(path, log.header);
  for (const auto& e : log.events) writer.write(e);
  writer.flush();
}

}  // namespace dco
