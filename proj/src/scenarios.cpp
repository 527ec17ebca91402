#include <map>

#include "tacc/simulator.hpp"

namespace tacc::detail {
const std::map<std::string, std::string_view>& fixture_table();
}

namespace tacc::sim {

std::vector<std::string> bundled_fixture_names() {
  std::vector<std::string> out;
  for (const auto& [name, text] : detail::fixture_table()) out.push_back(name);
  return out;
}

std::string_view bundled_fixture(const std::string& name) {
  const auto& table = detail::fixture_table();
  auto it = table.find(name);
  if (it == table.end()) throw UnknownScenarioError("no bundled ruleset '" + name + "'");
  return it->second;
}

Document load_bundled(const std::string& name) { return parse_document(bundled_fixture(name)); }

namespace {

/// Three rooms around a corridor; the corridor exchanges heat only with them.
HouseModel standard_house() {
  HouseModel h;
  for (const char* id : {"room1", "room2", "room3", "corridor"}) {
    RoomSpec r;
    r.id = LocationId(id);
    h.rooms.push_back(r);
  }
  h.rooms[3].thermal.corridor = true;
  for (const char* id : {"room1", "room2", "room3"}) h.adjacency.emplace_back(LocationId("corridor"), LocationId(id));
  return h;
}

Scenario named(const char* id, const char* title, const char* fixture) {
  Scenario s;
  s.id = id;
  s.title = title;
  s.fixture = fixture;
  return s;
}

PairedVariant variant(const char* label, std::vector<RuleId> drop_rules, std::vector<std::string> drop_sources,
                      std::optional<double> humidity_coupling = std::nullopt) {
  return PairedVariant{label, std::move(drop_rules), std::move(drop_sources), humidity_coupling};
}

RoomSpec& room(HouseModel& h, const char* id) { return h.rooms[*h.room_index(LocationId(id))]; }

BernoulliSource pulse(const char* name, const char* sensor, double p) {
  BernoulliSource s;
  s.name = name;
  s.sensor = SensorId(sensor);
  s.p = p;
  // Continuous readings: two firings never repeat a value, so the sources do
  // not produce duplicate-event (C7) noise.
  s.lo = 0.6;
  s.hi = 1.0;
  return s;
}

MeasuredSource reading(const char* name, const char* sensor, double p, double noise, double reference) {
  MeasuredSource s;
  s.name = name;
  s.sensor = SensorId(sensor);
  s.p = p;
  s.noise = noise;
  s.reference = reference;
  return s;
}

Scenario s1() {
  Scenario s = named("S1", "Room luminance: blind app vs occupancy light", "s1_luminance");
  s.horizon = 500;
  s.house = standard_house();
  auto& r1 = room(s.house, "room1");
  r1.occupied = true;
  r1.luminance.daylight_harvesting = true;
  s.house.outdoor.daylight = 800;
  s.house.hold = {{"blind", 1}, {"light", 1}};
  s.sources = {pulse("blind", "app1", 0.10), pulse("light", "motion1", 0.10)};
  return s;
}

Scenario s2() {
  Scenario s = named("S2", "Window shutter vs thermostat: temperature deviation", "s2_window_thermostat");
  s.horizon = 500;
  s.house = standard_house();
  room(s.house, "room1").thermal.g_heat = 1.5;
  s.house.outdoor.temperature_mean = 64;
  s.house.outdoor.temperature_amplitude = 3;
  s.house.hold = {{"window", 20}};
  s.sources = {reading("ts1", "ts1", 0.5, 0.2, 70), pulse("window", "win_app1", 0.05)};
  s.baseline = variant("no_window", {}, {"window"});
  return s;
}

Scenario s3() {
  Scenario s = named("S3", "Shared corridor thermostat thrash", "s3_corridor");
  s.horizon = 500;
  s.house = standard_house();
  room(s.house, "room1").initial_temperature = 66;
  auto& r2 = room(s.house, "room2");
  r2.initial_temperature = 76;
  r2.occupied = true;
  r2.thermal.occupancy_heat = 1.0;
  s.house.outdoor.temperature_mean = 60;
  s.sources = {reading("ts1", "ts1", 0.5, 0.5, 68), reading("ts2", "ts2", 0.5, 0.5, 74)};
  return s;
}

Scenario s4() {
  Scenario s = named("S4", "Temperature to humidity coupling", "s4_humidity");
  s.horizon = 500;
  s.house = standard_house();
  auto& r3 = room(s.house, "room3");
  r3.initial_temperature = 66;
  r3.initial_humidity = 45;
  r3.thermal.g_heat = 1.5;
  s.house.outdoor.temperature_mean = 64;
  s.sources = {reading("ts3", "ts3", 0.5, 0.2, 70), reading("hs3", "hs3", 0.5, 0.5, 45)};
  s.baseline = variant("uncoupled", {}, {}, 0.0);
  return s;
}

Scenario s5() {
  Scenario s = named("S5", "One alarm, two panels", "s5_alarm");
  s.horizon = 2000;
  s.house = standard_house();
  s.house.hold = {{"alarm", 5}};
  s.sources = {pulse("smoke", "smoke1", 0.05), pulse("leak", "leak2", 0.07)};
  return s;
}

Scenario s6() {
  Scenario s = named("S6", "Window openings vs heating: conflict counts", "s6_window_counts");
  s.horizon = 500;
  s.house = standard_house();
  room(s.house, "room1").thermal.g_heat = 1.5;
  s.house.outdoor.temperature_mean = 64;
  s.house.hold = {{"window", 10}};
  s.sources = {reading("ts1", "ts1", 0.5, 0.2, 70), pulse("window", "win_app1", 0.10)};
  return s;
}

Scenario s7() {
  Scenario s = named("S7", "Management vs operations: thermostat actuations", "s7_management_thermostat");
  s.horizon = 2000;
  s.start_tick = 600;
  s.house = standard_house();
  auto& r1 = room(s.house, "room1");
  r1.occupied = true;
  r1.thermal.occupancy_heat = 0.3;
  r1.initial_temperature = 72;
  s.house.outdoor.temperature_mean = 70;
  s.house.outdoor.temperature_amplitude = 2;
  s.sources = {reading("ts1", "ts1", 0.25, 0.2, 72)};
  s.baseline = variant("no_management", {RuleId("off_after_6pm")}, {});
  return s;
}

Scenario s8() {
  Scenario s = named("S8", "Management vs occupancy: humidifier actuations", "s8_management_humidifier");
  s.horizon = 2000;
  s.start_tick = 600;
  s.house = standard_house();
  auto& r2 = room(s.house, "room2");
  r2.humidity.g_hum = 2.0;
  r2.humidity.k_vent = 0.05;
  r2.humidity.occupancy_humidity = 0.1;
  r2.initial_temperature = 60;
  s.house.outdoor.humidity = 35;
  OccupancySource occ;
  occ.name = "occupancy";
  occ.room = LocationId("room2");
  occ.p_enter = 0.05;
  occ.p_leave = 0.02;
  auto motion = pulse("motion", "motion2", 0.3);
  motion.when_occupied = LocationId("room2");
  s.sources = {occ, reading("hs2", "hs2", 0.25, 0.3, 45), motion};
  s.baseline = variant("no_management", {RuleId("off_after_6pm")}, {});
  return s;
}

}  // namespace

std::vector<Scenario> builtin_scenarios() { return {s1(), s2(), s3(), s4(), s5(), s6(), s7(), s8()}; }

Scenario builtin_scenario(const std::string& id) {
  for (auto& s : builtin_scenarios()) {
    if (s.id == id) return s;
  }
  throw UnknownScenarioError("unknown scenario '" + id + "' (expected S1..S8)");
}

}  // namespace tacc::sim
