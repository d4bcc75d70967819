#include "sdmon/event_log.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "sdmon/errors.hpp"

namespace sdmon {

double round_to(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const double r = std::round(v * scale) / scale;
  return r == 0.0 ? 0.0 : r;  // no "-0"
}

void EventLog::emit(double t, std::string type, Json data) {
  events_.push_back({round_to(t, 3), std::move(type), std::move(data)});
}

std::string EventLog::format(const Event& e) {
  std::string line = fmt::format("{{\"t\":{:.3f},\"type\":{}", e.t, Json(e.type).dump());
  for (const auto& [key, value] : e.data.items()) {
    line += fmt::format(",{}:{}", Json(key).dump(), value.dump());
  }
  line += '}';
  return line;
}

void EventLog::write(std::ostream& os) const {
  for (const auto& e : events_) os << format(e) << '\n';
}

std::string EventLog::to_ndjson() const {
  std::ostringstream os;
  write(os);
  return os.str();
}

std::vector<Event> EventLog::read(std::istream& is) {
  std::vector<Event> out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& err) {
      throw ParseError(fmt::format("event log line {}: {}", line_no, err.what()), line_no,
                       static_cast<int>(err.byte));
    }
    if (!j.is_object() || !j.contains("t") || !j.contains("type") || !j["t"].is_number() ||
        !j["type"].is_string())
      throw ParseError(fmt::format("event log line {}: record needs numeric t and string type", line_no),
                       line_no, 1);
    Event e;
    e.t = j["t"].get<double>();
    e.type = j["type"].get<std::string>();
    for (const auto& [key, value] : j.items())
      if (key != "t" && key != "type") e.data[key] = value;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace sdmon
