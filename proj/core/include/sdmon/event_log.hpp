#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sdmon {

using Json = nlohmann::ordered_json;

// One self-describing record: sim time, event type and flat payload fields.
struct Event {
  double t = 0.0;
  std::string type;
  Json data = Json::object();
};

// Rounds to a fixed number of decimals so logged values print stably.
double round_to(double v, int decimals);

// Append-only event log, serialized as newline-delimited JSON with
// timestamps printed to 3 decimals.
class EventLog {
 public:
  void emit(double t, std::string type, Json data = Json::object());
  const std::vector<Event>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  void clear() { events_.clear(); }

  void write(std::ostream& os) const;
  std::string to_ndjson() const;

  static std::string format(const Event& e);
  // Throws ParseError with the offending line on malformed input.
  static std::vector<Event> read(std::istream& is);

 private:
  std::vector<Event> events_;
};

}  // namespace sdmon
