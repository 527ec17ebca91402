#include "tacc/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>
#include <set>

namespace tacc::sim {

std::string_view to_string(Suppression s) {
  switch (s) {
    case Suppression::Off: return "off";
    case Suppression::Duplicates: return "duplicates";
    case Suppression::All: return "all";
  }
  return "?";
}

Suppression parse_suppression(std::string_view text) {
  if (text == "off") return Suppression::Off;
  if (text == "duplicates") return Suppression::Duplicates;
  if (text == "all") return Suppression::All;
  throw InvalidValueError("suppression must be off, duplicates or all, not '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Physics

double OutdoorTrace::temperature(Tick t, Tick day_length) const {
  // Peak at 3/5 of the day (mid-afternoon), trough 12 hours later.
  const double phase = 2.0 * std::numbers::pi * (static_cast<double>(t % day_length) / static_cast<double>(day_length) - 0.35);
  return temperature_mean + temperature_amplitude * std::sin(phase);
}

double OutdoorTrace::daylight_at(Tick, Tick) const { return daylight; }

double thermal_step(const RoomState& room, const ThermalParams& p, double outdoor_temperature,
                    std::span<const double> neighbour_temperatures, double k_adj) {
  const double t = room.temperature;
  double next = t + p.g_heat * room.thermostat;
  for (double n : neighbour_temperatures) next += k_adj * (n - t);
  if (p.corridor) return next;
  next += p.k_loss * (outdoor_temperature - t);
  if (room.window) next += p.k_win * (outdoor_temperature - t);
  if (room.occupied) next += p.occupancy_heat;
  return next;
}

double humidity_step(const RoomState& room, const HumidityParams& p, double delta_t, double outdoor_humidity) {
  double next = room.humidity - p.k_h * delta_t;
  if (room.humidifier) next += p.g_hum;
  next += p.k_vent * (outdoor_humidity - room.humidity);
  if (room.occupied) next += p.occupancy_humidity;
  return std::clamp(next, 0.0, 100.0);
}

double luminance_of(const RoomState& room, const LuminanceParams& p, double daylight) {
  double l = p.base;
  if (room.blind) l += std::min(std::max(daylight, 0.0), p.window);
  if (room.light) l += p.lamp;
  return l;
}

// ---------------------------------------------------------------------------
// House

std::optional<std::size_t> HouseModel::room_index(const LocationId& id) const {
  for (std::size_t i = 0; i < rooms.size(); ++i) {
    if (rooms[i].id == id) return i;
  }
  return std::nullopt;
}

void HouseModel::validate() const {
  auto nonneg = [](double v, const std::string& what) {
    if (!(v >= 0.0)) throw InvalidValueError("house: " + what + " must be >= 0");
  };
  nonneg(k_adj, "k_adj");
  nonneg(setpoint_step, "setpoint_step");
  std::set<LocationId> seen;
  for (const auto& r : rooms) {
    if (!seen.insert(r.id).second) throw DuplicateIdError(r.id.str(), "house rooms");
    const std::string c = "room " + r.id.str() + " ";
    nonneg(r.thermal.k_loss, c + "k_loss");
    nonneg(r.thermal.g_heat, c + "g_heat");
    nonneg(r.thermal.k_win, c + "k_win");
    nonneg(r.thermal.occupancy_heat, c + "occupancy_heat");
    nonneg(r.humidity.k_h, c + "k_h");
    nonneg(r.humidity.g_hum, c + "g_hum");
    nonneg(r.humidity.k_vent, c + "k_vent");
    nonneg(r.humidity.occupancy_humidity, c + "occupancy_humidity");
    nonneg(r.luminance.base, c + "L_base");
    nonneg(r.luminance.window, c + "L_window");
    nonneg(r.luminance.lamp, c + "L_lamp");
    if (r.initial_humidity < 0 || r.initial_humidity > 100) {
      throw InvalidValueError("house: " + c + "initial humidity outside [0, 100]");
    }
  }
  for (const auto& [a, b] : adjacency) {
    if (!room_index(a)) throw ReferenceError(a.str(), "house adjacency");
    if (!room_index(b)) throw ReferenceError(b.str(), "house adjacency");
    if (a == b) throw InvalidValueError("house: room " + a.str() + " adjacent to itself");
  }
}

HouseModel default_house(const RuleSet& rs) {
  HouseModel h;
  for (const auto& l : rs.registry().locations) {
    RoomSpec r;
    r.id = l;
    h.rooms.push_back(r);
  }
  return h;
}

const std::string& source_name(const Source& s) {
  return std::visit([](const auto& x) -> const std::string& { return x.name; }, s);
}

// ---------------------------------------------------------------------------
// Scenario

void Scenario::set_probability(const std::string& source, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidValueError("probability of '" + source + "' outside [0, 1]");
  for (auto& s : sources) {
    if (source_name(s) != source) continue;
    if (auto* b = std::get_if<BernoulliSource>(&s)) {
      b->p = p;
      return;
    }
    if (auto* m = std::get_if<MeasuredSource>(&s)) {
      m->p = p;
      return;
    }
  }
  throw InvalidValueError("scenario " + id + " has no probabilistic source '" + source + "'");
}

double Scenario::probability(const std::string& source) const {
  for (const auto& s : sources) {
    if (source_name(s) != source) continue;
    if (const auto* b = std::get_if<BernoulliSource>(&s)) return b->p;
    if (const auto* m = std::get_if<MeasuredSource>(&s)) return m->p;
  }
  throw InvalidValueError("scenario " + id + " has no probabilistic source '" + source + "'");
}

void Scenario::validate() const {
  auto prob = [&](double p, const std::string& name) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidValueError("scenario " + id + ": probability of '" + name + "' outside [0, 1]");
  };
  std::set<std::string> names;
  for (const auto& s : sources) {
    if (!names.insert(source_name(s)).second) throw DuplicateIdError(source_name(s), "scenario sources");
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, BernoulliSource>) {
            prob(x.p, x.name);
            if (x.lo > x.hi) throw InvalidValueError("scenario " + id + ": source '" + x.name + "' has lo > hi");
          } else if constexpr (std::is_same_v<T, MeasuredSource>) {
            prob(x.p, x.name);
            if (!(x.quantum > 0)) throw InvalidValueError("scenario " + id + ": quantum must be > 0");
          } else {
            prob(x.p_enter, x.name);
            prob(x.p_leave, x.name);
          }
        },
        s);
  }
  house.validate();
}

// ---------------------------------------------------------------------------
// Reports

std::size_t TraceReport::total_conflicts() const {
  std::size_t n = 0;
  for (auto c : conflict_counts) n += c;
  return n;
}

std::size_t TraceReport::actuations_of(const ActuatorId& id) const {
  for (const auto& a : actuations) {
    if (a.actuator == id) return a.count;
  }
  return 0;
}

std::size_t TraceReport::actuations_of_kind(const std::string& kind) const {
  std::size_t n = 0;
  for (const auto& a : actuations) {
    if (a.kind == kind) n += a.count;
  }
  return n;
}

long long TraceReport::extra_actuations_of_kind(const std::string& kind) const {
  if (!baseline) return 0;
  return static_cast<long long>(actuations_of_kind(kind)) - static_cast<long long>(baseline->actuations_of_kind(kind));
}

namespace {

template <class Get>
double max_deviation(const TraceReport& r, const LocationId& room, Get get) {
  if (!r.baseline) return 0.0;
  auto it = std::find(r.rooms.begin(), r.rooms.end(), room);
  if (it == r.rooms.end()) throw ReferenceError(room.str(), "report rooms");
  const auto i = static_cast<std::size_t>(it - r.rooms.begin());
  double worst = 0.0;
  const std::size_t n = std::min(r.series.size(), r.baseline->series.size());
  for (std::size_t t = 0; t < n; ++t) {
    worst = std::max(worst, std::fabs(get(r.series[t].rooms[i]) - get(r.baseline->series[t].rooms[i])));
  }
  return worst;
}

}  // namespace

double TraceReport::max_temperature_deviation(const LocationId& room) const {
  return max_deviation(*this, room, [](const RoomState& s) { return s.temperature; });
}

double TraceReport::max_humidity_deviation(const LocationId& room) const {
  return max_deviation(*this, room, [](const RoomState& s) { return s.humidity; });
}

const DeviceState* TraceReport::device(const ActuatorId& id) const {
  for (const auto& d : devices) {
    if (d.id == id) return &d;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Engine

namespace {

/// A random stream keyed by (run seed, source name).
class Stream {
 public:
  Stream(std::uint64_t seed, const std::string& name) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char c : name) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
    gen_.seed(seq);
  }
  /// Uniform in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 gen_;
};

enum class Effect { Heat, Cool, ThermostatOff, Increase, Decrease, Activate, Deactivate };

std::optional<Effect> effect_of(const std::string& kind, const std::string& action) {
  if (kind == "thermostat") {
    if (action == "increase") return Effect::Increase;
    if (action == "decrease") return Effect::Decrease;
    if (action == "heat_on" || action == "heat" || action == "on") return Effect::Heat;
    if (action == "cool" || action == "cool_on") return Effect::Cool;
    if (action == "off") return Effect::ThermostatOff;
    return std::nullopt;
  }
  static const std::set<std::string> activate = {"on", "open", "unlock", "sound", "flash", "beep", "activate"};
  static const std::set<std::string> deactivate = {"off", "close", "lock", "silence", "deactivate"};
  if (activate.count(action)) return Effect::Activate;
  if (deactivate.count(action)) return Effect::Deactivate;
  return std::nullopt;
}

/// Applies one command; returns whether the device state changed.
bool apply(DeviceState& d, Effect e, double step) {
  const DeviceState before = d;
  switch (e) {
    case Effect::Heat: d.mode = 1; break;
    case Effect::Cool: d.mode = -1; break;
    case Effect::ThermostatOff: d.mode = 0; break;
    case Effect::Increase: d.setpoint += step; d.mode = 1; break;
    case Effect::Decrease: d.setpoint -= step; d.mode = -1; break;
    case Effect::Activate: d.active = true; break;
    case Effect::Deactivate: d.active = false; break;
  }
  return d.mode != before.mode || d.setpoint != before.setpoint || d.active != before.active;
}

struct EngineOptions {
  Suppression suppression = Suppression::Off;
  std::vector<RuleId> drop_rules;
  std::optional<double> humidity_coupling;
};

class Engine {
 public:
  Engine(const Document& doc, const HouseModel& house, const EngineOptions& opts)
      : house_(house), suppression_(opts.suppression) {
    house_.validate();
    if (opts.humidity_coupling) {
      for (auto& r : house_.rooms) r.humidity.k_h = *opts.humidity_coupling;
    }
    std::vector<Rule> rules;
    for (const auto& r : doc.ruleset.rules()) {
      if (std::find(opts.drop_rules.begin(), opts.drop_rules.end(), r.id) == opts.drop_rules.end()) rules.push_back(r);
    }
    for (const auto& id : opts.drop_rules) {
      if (!doc.ruleset.rule_index(id)) throw ReferenceError(id.str(), "paired variant");
    }
    rules_ = std::make_shared<const RuleSet>(doc.ruleset.registry(), std::move(rules));
    monitor_ = std::make_unique<Monitor>(rules_, doc.detector);
    day_ = rules_->registry().day_length;

    for (const auto& a : rules_->registry().actuators) {
      DeviceState d;
      d.id = a.id;
      d.kind = a.kind;
      d.location = a.location;
      d.setpoint = house_.initial_setpoint;
      devices_.push_back(d);
      device_room_.push_back(house_.room_index(a.location));
    }
    for (std::size_t i = 0; i < rules_->size(); ++i) {
      const Rule& r = rules_->rule(i);
      const auto& kind = rules_->actuator(rules_->resolved(i).actuator).kind;
      auto e = effect_of(kind, r.action.action);
      if (!e) throw InvalidValueError("no device behaviour for " + kind + "." + r.action.action);
      effects_.push_back(*e);
    }

    for (const auto& spec : house_.rooms) {
      RoomState s;
      s.temperature = spec.initial_temperature;
      s.humidity = spec.initial_humidity;
      s.occupied = spec.occupied;
      rooms_.push_back(s);
      report_.rooms.push_back(spec.id);
    }
    neighbours_.resize(house_.rooms.size());
    for (const auto& [a, b] : house_.adjacency) {
      const auto i = *house_.room_index(a);
      const auto j = *house_.room_index(b);
      neighbours_[i].push_back(j);
      neighbours_[j].push_back(i);
    }
    refresh_rooms(0);
    report_.suppression = suppression_;
  }

  const RuleSet& ruleset() const { return *rules_; }
  const std::vector<RoomState>& rooms() const { return rooms_; }
  std::vector<RoomState>& rooms() { return rooms_; }
  Tick day_length() const { return day_; }
  const HouseModel& house() const { return house_; }

  void step(Tick t, std::vector<Event> events) {
    for (auto& d : devices_) {
      if (d.hold_until != 0 && d.hold_until <= t) {
        d.mode = 0;
        d.active = false;
        d.hold_until = 0;
      }
    }
    auto conflicts = monitor_->step(t, events);
    auto actions = monitor_->window().fresh_actions();
    auto dropped = suppression_ != Suppression::Off ? choose_suppressed(conflicts, t)
                                                    : std::set<std::pair<EventId, std::size_t>>{};

    for (const auto& ta : actions) {
      if (dropped.count({ta.event->id, ta.rule})) continue;
      const std::size_t dev = rules_->resolved(ta.rule).actuator;
      DeviceState& d = devices_[dev];
      if (apply(d, effects_[ta.rule], house_.setpoint_step)) ++counts_[dev];
      const bool resting = d.mode == 0 && !d.active;
      auto hold = house_.hold.find(d.kind);
      if (resting) {
        d.hold_until = 0;
      } else if (hold != house_.hold.end() && hold->second > 0) {
        d.hold_until = t + hold->second;
      }
    }

    refresh_rooms(t);
    report_.series.push_back(TickSample{t, rooms_});
    for (auto& e : events) report_.events.push_back(std::move(e));
    for (auto& c : conflicts) {
      ++report_.conflict_counts[kind_slot(c.kind)];
      report_.conflicts.push_back(std::move(c));
    }
    advance_physics(t);
  }

  TraceReport finish() {
    for (std::size_t i = 0; i < devices_.size(); ++i) {
      report_.actuations.push_back(ActuationCount{devices_[i].id, devices_[i].kind, counts_[i]});
    }
    report_.devices = devices_;
    return std::move(report_);
  }

 private:
  std::set<std::pair<EventId, std::size_t>> choose_suppressed(const std::vector<Conflict>& conflicts, Tick t) {
    std::set<EventId> events;
    std::set<std::pair<EventId, std::size_t>> dropped;
    for (const auto& c : conflicts) {
      if (c.kind != ConflictKind::C7 || !c.suppressible) continue;
      if (events.insert(*c.suppressible).second) ++report_.suppressed_events;
    }
    for (const auto& ta : monitor_->window().fresh_actions()) {
      if (events.count(ta.event->id)) dropped.insert({ta.event->id, ta.rule});
    }
    for (const auto& c : conflicts) {
      if (suppression_ != Suppression::All || c.kind == ConflictKind::C7) continue;
      std::array<std::pair<EventId, std::size_t>, 2> key;
      for (std::size_t k = 0; k < 2; ++k) {
        key[k] = {c.participants[k].event, *rules_->rule_index(c.participants[k].rule)};
      }
      if (dropped.count(key[0]) || dropped.count(key[1])) continue;  // already resolved
      const std::size_t victim = c.participants[1].time == t ? 1 : 0;
      if (c.participants[victim].time != t) continue;  // both already applied
      dropped.insert(key[victim]);
    }
    report_.suppressed_actions += dropped.size();
    return dropped;
  }

  void refresh_rooms(Tick t) {
    for (auto& r : rooms_) {
      r.thermostat = 0;
      r.setpoint = 0;
      r.humidifier = r.light = r.blind = r.window = r.door = r.alarm = false;
    }
    std::vector<bool> lamp(rooms_.size(), false);
    for (std::size_t i = 0; i < devices_.size(); ++i) {
      if (!device_room_[i]) continue;
      RoomState& r = rooms_[*device_room_[i]];
      const DeviceState& d = devices_[i];
      if (d.kind == "thermostat") {
        r.thermostat = d.mode;
        r.setpoint = d.setpoint;
      } else if (d.kind == "humidifier") {
        r.humidifier = r.humidifier || d.active;
      } else if (d.kind == "light") {
        lamp[*device_room_[i]] = lamp[*device_room_[i]] || d.active;
      } else if (d.kind == "blind") {
        r.blind = r.blind || d.active;
      } else if (d.kind == "window") {
        r.window = r.window || d.active;
      } else if (d.kind == "door") {
        r.door = r.door || d.active;
      } else if (d.kind == "alarm") {
        r.alarm = r.alarm || d.active;
      }
    }
    const double daylight = house_.outdoor.daylight_at(t, day_);
    for (std::size_t i = 0; i < rooms_.size(); ++i) {
      RoomState& r = rooms_[i];
      const auto& lp = house_.rooms[i].luminance;
      r.light = lamp[i] || (lp.daylight_harvesting && r.occupied && !r.blind);
      r.luminance = luminance_of(r, lp, daylight);
    }
  }

  void advance_physics(Tick t) {
    const double t_out = house_.outdoor.temperature(t, day_);
    std::vector<double> next(rooms_.size());
    std::vector<double> near;
    for (std::size_t i = 0; i < rooms_.size(); ++i) {
      near.clear();
      for (auto j : neighbours_[i]) near.push_back(rooms_[j].temperature);
      next[i] = thermal_step(rooms_[i], house_.rooms[i].thermal, t_out, near, house_.k_adj);
    }
    for (std::size_t i = 0; i < rooms_.size(); ++i) {
      const double dt = next[i] - rooms_[i].temperature;
      rooms_[i].humidity = humidity_step(rooms_[i], house_.rooms[i].humidity, dt, house_.outdoor.humidity);
      rooms_[i].temperature = next[i];
    }
  }

  HouseModel house_;
  Suppression suppression_;
  std::shared_ptr<const RuleSet> rules_;
  std::unique_ptr<Monitor> monitor_;
  Tick day_ = 864;
  std::vector<DeviceState> devices_;
  std::vector<std::optional<std::size_t>> device_room_;
  std::map<std::size_t, std::size_t> counts_;
  std::vector<Effect> effects_;
  std::vector<RoomState> rooms_;
  std::vector<std::vector<std::size_t>> neighbours_;
  TraceReport report_;
};

double quantize(double v, double q) {
  const double n = std::round(v / q);
  const double inv = std::round(1.0 / q);
  if (std::fabs(inv - 1.0 / q) < 1e-9) return n / inv;
  return n * q;
}

PredicateClass classify(double value, double reference) {
  if (value > reference) return PredicateClass::GreaterThan;
  if (value < reference) return PredicateClass::LessThan;
  return PredicateClass::EqualTo;
}

TraceReport simulate(const Scenario& s, const Document& doc, const EngineOptions& opts,
                     const std::vector<std::string>& drop_sources) {
  s.validate();
  Engine engine(doc, s.house, opts);
  const RuleSet& rs = engine.ruleset();

  struct Bound {
    const Source* source;
    Stream stream;
    std::size_t sensor = 0;
    std::optional<std::size_t> room;
  };
  std::vector<Bound> bound;
  std::set<std::size_t> sensors_used;
  for (const auto& src : s.sources) {
    if (std::find(drop_sources.begin(), drop_sources.end(), source_name(src)) != drop_sources.end()) continue;
    Bound b{&src, Stream(s.seed, source_name(src)), 0, std::nullopt};
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, OccupancySource>) {
            b.room = engine.house().room_index(x.room);
            if (!b.room) throw ReferenceError(x.room.str(), "occupancy source " + x.name);
          } else {
            auto si = rs.sensor_index(x.sensor);
            if (!si) throw ReferenceError(x.sensor.str(), "source " + x.name);
            if (!sensors_used.insert(*si).second) {
              throw InvalidValueError("sensor '" + x.sensor.str() + "' is driven by two sources");
            }
            b.sensor = *si;
            b.room = engine.house().room_index(rs.sensor(*si).location);
            if constexpr (std::is_same_v<T, MeasuredSource>) {
              const auto& kind = rs.sensor(*si).kind;
              if (kind != "temperature" && kind != "humidity" && kind != "luminance") {
                throw InvalidValueError("measured source " + x.name + ": cannot measure " + kind);
              }
              if (!b.room) throw ReferenceError(rs.sensor(*si).location.str(), "measured source " + x.name);
            }
            if constexpr (std::is_same_v<T, BernoulliSource>) {
              if (x.when_occupied && !engine.house().room_index(*x.when_occupied)) {
                throw ReferenceError(x.when_occupied->str(), "source " + x.name);
              }
            }
          }
        },
        src);
    bound.push_back(std::move(b));
  }

  EventId next_id = 0;
  for (Tick k = 0; k < s.horizon; ++k) {
    const Tick t = s.start_tick + k;
    auto& rooms = engine.rooms();
    for (auto& b : bound) {
      if (const auto* o = std::get_if<OccupancySource>(b.source)) {
        const double u = b.stream.uniform();
        bool& occ = rooms[*b.room].occupied;
        occ = occ ? !(u < o->p_leave) : (u < o->p_enter);
      }
    }
    std::vector<Event> events;
    for (auto& b : bound) {
      const Sensor* sensor = std::holds_alternative<OccupancySource>(*b.source) ? nullptr : &rs.sensor(b.sensor);
      if (const auto* x = std::get_if<BernoulliSource>(b.source)) {
        const double u = b.stream.uniform();
        const double v = b.stream.uniform();
        bool gate = true;
        if (x->when_occupied) gate = rooms[*engine.house().room_index(*x->when_occupied)].occupied;
        if (!(u < x->p) || !gate) continue;
        events.push_back(Event{next_id++, x->sensor, t, x->lo + (x->hi - x->lo) * v,
                               EventSignature{sensor->kind, x->predicate, sensor->location}});
      } else if (const auto* m = std::get_if<MeasuredSource>(b.source)) {
        const double u = b.stream.uniform();
        const double n = b.stream.uniform();
        if (!(u < m->p)) continue;
        const RoomState& room = rooms[*b.room];
        double raw = room.temperature;
        if (sensor->kind == "humidity") raw = room.humidity;
        if (sensor->kind == "luminance") raw = room.luminance;
        const auto& kind = rs.sensor_kind(*rs.sensor_kind_index(sensor->kind));
        const double value = std::clamp(quantize(raw + m->noise * (2.0 * n - 1.0), m->quantum), kind.min, kind.max);
        events.push_back(Event{next_id++, m->sensor, t, value,
                               EventSignature{sensor->kind, classify(value, m->reference), sensor->location}});
      }
    }
    engine.step(t, std::move(events));
  }
  TraceReport r = engine.finish();
  r.scenario = s.id;
  r.seed = s.seed;
  r.horizon = s.horizon;
  return r;
}

}  // namespace

TraceReport run_scenario(const Scenario& s, const Document& doc) {
  TraceReport main = simulate(s, doc, EngineOptions{s.suppression, {}, std::nullopt}, {});
  if (s.baseline) {
    const auto& v = *s.baseline;
    auto base = simulate(s, doc, EngineOptions{s.suppression, v.drop_rules, v.humidity_coupling}, v.drop_sources);
    base.scenario = s.id + "/" + v.label;
    main.baseline = std::make_shared<const TraceReport>(std::move(base));
  }
  return main;
}

TraceReport run_scenario(const Scenario& s) { return run_scenario(s, load_bundled(s.fixture)); }

TraceReport replay_trace(const Document& doc, std::span<const Event> events, Suppression suppression,
                         const HouseModel& house) {
  Engine engine(doc, house, EngineOptions{suppression, {}, std::nullopt});
  if (!events.empty()) {
    std::size_t i = 0;
    for (Tick t = events.front().time; t <= events.back().time; ++t) {
      std::vector<Event> now;
      while (i < events.size() && events[i].time == t) now.push_back(events[i++]);
      if (i < events.size() && events[i].time < t) {
        throw StreamOrderError("event " + std::to_string(events[i].id) + " is out of tick order");
      }
      engine.step(t, std::move(now));
    }
  }
  TraceReport r = engine.finish();
  r.scenario = "replay";
  r.horizon = r.series.size();
  return r;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

void write_series_csv(std::ostream& out, const TraceReport& r) {
  out << "tick,room,temperature,humidity,luminance,occupied,thermostat,setpoint,humidifier,light,blind,window,door,"
         "alarm\n";
  for (const auto& sample : r.series) {
    for (std::size_t i = 0; i < sample.rooms.size(); ++i) {
      const RoomState& s = sample.rooms[i];
      out << sample.tick << ',' << r.rooms[i] << ',' << fixed(s.temperature) << ',' << fixed(s.humidity) << ','
          << fixed(s.luminance, 1) << ',' << s.occupied << ',' << s.thermostat << ',' << fixed(s.setpoint, 1) << ','
          << s.humidifier << ',' << s.light << ',' << s.blind << ',' << s.window << ',' << s.door << ',' << s.alarm
          << '\n';
    }
  }
}

void write_summary_csv(std::ostream& out, std::span<const TraceReport> reports) {
  std::set<std::string> kinds;
  bool paired = false;
  for (const auto& r : reports) {
    for (const auto& a : r.actuations) kinds.insert(a.kind);
    paired = paired || r.baseline != nullptr;
  }
  out << "seed";
  for (auto k : kAllConflictKinds) out << ',' << to_string(k);
  out << ",total,suppressed_events,suppressed_actions";
  for (const auto& k : kinds) out << ",actuations_" << k;
  if (paired) {
    for (const auto& k : kinds) out << ",extra_actuations_" << k;
  }
  out << '\n';

  const double n = static_cast<double>(std::max<std::size_t>(reports.size(), 1));
  std::vector<double> sums;
  for (const auto& r : reports) {
    std::vector<double> row;
    for (auto k : kAllConflictKinds) row.push_back(static_cast<double>(r.count(k)));
    row.push_back(static_cast<double>(r.total_conflicts()));
    row.push_back(static_cast<double>(r.suppressed_events));
    row.push_back(static_cast<double>(r.suppressed_actions));
    for (const auto& k : kinds) row.push_back(static_cast<double>(r.actuations_of_kind(k)));
    if (paired) {
      for (const auto& k : kinds) row.push_back(static_cast<double>(r.extra_actuations_of_kind(k)));
    }
    out << r.seed;
    for (double v : row) out << ',' << static_cast<long long>(v);
    out << '\n';
    sums.resize(row.size(), 0.0);
    for (std::size_t i = 0; i < row.size(); ++i) sums[i] += row[i];
  }
  out << "mean";
  for (double v : sums) out << ',' << fixed(v / n);
  out << '\n';
}

}  // namespace tacc::sim
