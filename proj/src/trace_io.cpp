#include "tacc/trace_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

namespace tacc {

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw InvalidValueError("unformattable number");
  return std::string(buf, end);
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  if (text.empty()) return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

}  // namespace

std::vector<Event> read_trace(std::istream& in, const RuleSet& rs) {
  std::string line;
  int line_no = 1;
  if (!std::getline(in, line)) throw ParseError("empty trace: missing header", 1, 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) {
    throw ParseError("trace header must be '" + std::string(kTraceHeader) + "'", 1, 1);
  }

  std::vector<Event> events;
  std::set<std::size_t> sensors_this_tick;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fail = [&](const std::string& why) -> ParseError { return ParseError(why, line_no, 1); };
    const auto fields = split(line);
    if (fields.size() != 6) throw fail("expected 6 fields, found " + std::to_string(fields.size()));

    Event e;
    e.id = events.size();
    if (!parse_number(fields[0], e.time)) throw fail("bad tick '" + std::string(fields[0]) + "'");
    if (!events.empty() && e.time < events.back().time) {
      throw fail("tick " + std::to_string(e.time) + " is earlier than tick " + std::to_string(events.back().time) +
                 " on the previous line");
    }
    if (events.empty() || e.time != events.back().time) sensors_this_tick.clear();

    e.sensor = SensorId(std::string(fields[1]));
    const auto s = rs.sensor_index(e.sensor);
    if (!s) throw fail("unknown sensor '" + e.sensor.str() + "'");
    const Sensor& sensor = rs.sensor(*s);
    if (!sensors_this_tick.insert(*s).second) {
      throw fail("sensor '" + e.sensor.str() + "' reports twice at tick " + std::to_string(e.time));
    }

    e.signature.sensor_kind = std::string(fields[2]);
    if (e.signature.sensor_kind != sensor.kind) {
      throw fail("kind '" + e.signature.sensor_kind + "' does not match sensor '" + sensor.id.str() + "' (" +
                 sensor.kind + ")");
    }
    const auto predicate = parse_predicate(fields[3]);
    if (!predicate) throw fail("unknown predicate '" + std::string(fields[3]) + "'");
    e.signature.predicate = *predicate;
    if (!parse_number(fields[4], e.value)) throw fail("bad value '" + std::string(fields[4]) + "'");
    const SensorKind& kind = rs.sensor_kind(*rs.sensor_kind_index(sensor.kind));
    if (!(e.value >= kind.min && e.value <= kind.max)) {
      throw fail("value " + std::string(fields[4]) + " outside the range of " + kind.name);
    }
    e.signature.location = LocationId(std::string(fields[5]));
    if (e.signature.location != sensor.location) {
      throw fail("location '" + e.signature.location.str() + "' does not match sensor '" + sensor.id.str() + "'");
    }
    events.push_back(std::move(e));
  }
  return events;
}

std::vector<Event> load_trace(const std::filesystem::path& path, const RuleSet& rs) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace '" + path.string() + "'");
  return read_trace(in, rs);
}

void write_trace(std::ostream& out, std::span<const Event> events) {
  out << kTraceHeader << '\n';
  for (const Event& e : events) {
    out << e.time << ',' << csv_field(e.sensor.str()) << ',' << csv_field(e.signature.sensor_kind) << ','
        << to_string(e.signature.predicate) << ',' << format_number(e.value) << ','
        << csv_field(e.signature.location.str()) << '\n';
  }
}

void write_conflict_log(std::ostream& out, std::span<const Conflict> conflicts) {
  out << kConflictHeader << '\n';
  for (const Conflict& c : conflicts) {
    const auto& [a, b] = c.participants;
    const std::string& device = c.kind == ConflictKind::C7 ? a.sensor.str() : a.actuator.str();
    out << c.tick << ',' << to_string(c.kind) << ',' << csv_field(a.rule.str()) << ',' << csv_field(b.rule.str())
        << ',' << a.event << ',' << b.event << ',' << csv_field(device) << ',' << csv_field(c.note) << '\n';
  }
}

}  // namespace tacc
