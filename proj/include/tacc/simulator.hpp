#pragma once

// Discrete-time smart-home simulation: lumped thermal/humidity/luminance
// physics per room, seeded stochastic event sources, devices driven by the
// ruleset, and a conflict monitor watching the event stream. With
// suppression enabled the monitor's verdicts gate which actions reach the
// devices; the monitor always observes the full event stream.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tacc/detector.hpp"
#include "tacc/document.hpp"

namespace tacc::sim {

class UnknownScenarioError : public Error {
 public:
  using Error::Error;
};

/// How detector verdicts gate actuations. Duplicates drops every action of
/// the later event of a C7 pair; All additionally drops one current-tick
/// action of every other conflicting pair.
enum class Suppression : std::uint8_t { Off, Duplicates, All };

std::string_view to_string(Suppression s);
/// Throws InvalidValueError.
Suppression parse_suppression(std::string_view text);

// ---------------------------------------------------------------------------
// House

struct ThermalParams {
  double k_loss = 0.05;         // per tick, towards outdoor temperature
  double g_heat = 0.5;          // F per tick while heating (negated when cooling)
  double k_win = 0.1;           // per tick extra outdoor coupling with the window open
  double occupancy_heat = 0.0;  // F per tick added while occupied
  /// Interior space: no outdoor exchange and no occupancy gain, only
  /// neighbours and its own thermostat.
  bool corridor = false;
};

struct HumidityParams {
  double k_h = 1.5;   // %RH lost per F of warming
  double g_hum = 2.0; // %RH per tick while the humidifier runs
  double k_vent = 0.0;             // per tick, towards outdoor humidity
  double occupancy_humidity = 0.0; // %RH per tick while occupied
};

struct LuminanceParams {
  double base = 100.0;
  double window = 250.0;  // cap on daylight through an open blind
  double lamp = 250.0;
  /// The light also comes on by itself while the room is occupied and the
  /// blind is closed.
  bool daylight_harvesting = false;
};

struct RoomSpec {
  LocationId id;
  ThermalParams thermal;
  HumidityParams humidity;
  LuminanceParams luminance;
  double initial_temperature = 70.0;
  double initial_humidity = 45.0;
  bool occupied = false;
};

/// Outdoor conditions; temperature is a daily sinusoid peaking mid-afternoon.
struct OutdoorTrace {
  double temperature_mean = 60.0;
  double temperature_amplitude = 0.0;
  double humidity = 40.0;
  double daylight = 800.0;  // lux, constant

  double temperature(Tick t, Tick day_length) const;
  double daylight_at(Tick t, Tick day_length) const;
};

struct RoomState {
  double temperature = 70.0;
  double humidity = 45.0;
  double luminance = 0.0;
  bool occupied = false;
  int thermostat = 0;  // -1 cooling, 0 off, +1 heating
  double setpoint = 0.0;
  bool humidifier = false;
  bool light = false;  // effective, including daylight harvesting
  bool blind = false;  // open
  bool window = false; // open
  bool door = false;   // unlocked
  bool alarm = false;

  friend bool operator==(const RoomState&, const RoomState&) = default;
};

struct HouseModel {
  std::vector<RoomSpec> rooms;
  std::vector<std::pair<LocationId, LocationId>> adjacency;  // undirected
  double k_adj = 0.1;
  OutdoorTrace outdoor;
  double initial_setpoint = 68.0;
  double setpoint_step = 10.0;
  /// Ticks a commanded non-resting state lasts before the device reverts by
  /// itself, per actuator kind; absent or 0 means latched.
  std::map<std::string, Tick> hold;

  /// Throws InvalidValueError on negative coefficients or unknown rooms.
  void validate() const;
  std::optional<std::size_t> room_index(const LocationId& id) const;
};

/// Every declared location becomes an ordinary room with default parameters.
HouseModel default_house(const RuleSet& rs);

/// One tick of the temperature update for a room given its neighbours.
double thermal_step(const RoomState& room, const ThermalParams& p, double outdoor_temperature,
                    std::span<const double> neighbour_temperatures, double k_adj);
/// Relative humidity after the temperature moved by delta_t.
double humidity_step(const RoomState& room, const HumidityParams& p, double delta_t, double outdoor_humidity);
double luminance_of(const RoomState& room, const LuminanceParams& p, double daylight);

// ---------------------------------------------------------------------------
// Event sources. Each source owns a random stream derived from the run seed
// and its name, and draws the same number of variates every tick whether or
// not it fires, so sources never perturb each other and runs differing only
// in a probability stay coupled.

/// Fires with probability p per tick, reporting a value uniform in [lo, hi].
struct BernoulliSource {
  std::string name;
  SensorId sensor;
  double p = 0.0;
  double lo = 1.0;
  double hi = 1.0;
  PredicateClass predicate = PredicateClass::GreaterThan;
  /// Only fires while this room is occupied.
  std::optional<LocationId> when_occupied;
};

/// Reports the sensor's room feature (by sensor kind: temperature, humidity
/// or luminance) with probability p per tick, with uniform noise in
/// [-noise, noise], rounded to `quantum`. The predicate class compares the
/// reading with `reference`.
struct MeasuredSource {
  std::string name;
  SensorId sensor;
  double p = 1.0;
  double noise = 0.0;
  double quantum = 0.1;
  double reference = 70.0;
};

/// Two-state occupancy chain for a room; emits no events.
struct OccupancySource {
  std::string name;
  LocationId room;
  double p_enter = 0.0;
  double p_leave = 0.0;
};

using Source = std::variant<BernoulliSource, MeasuredSource, OccupancySource>;

const std::string& source_name(const Source& s);

// ---------------------------------------------------------------------------
// Scenarios and reports

/// The comparison run of a paired scenario: the same seed and sources with
/// some rules or sources removed, or humidity coupling changed.
struct PairedVariant {
  std::string label;
  std::vector<RuleId> drop_rules;
  std::vector<std::string> drop_sources;
  std::optional<double> humidity_coupling;
};

struct Scenario {
  std::string id;
  std::string title;
  std::string fixture;  // bundled ruleset name
  Tick horizon = 0;
  Tick start_tick = 0;
  std::uint64_t seed = 1;
  Suppression suppression = Suppression::Off;
  HouseModel house;
  std::vector<Source> sources;
  std::optional<PairedVariant> baseline;

  /// Probability knob of a Bernoulli or measured source.
  void set_probability(const std::string& source, double p);
  double probability(const std::string& source) const;
  /// Throws InvalidValueError for probabilities outside [0, 1].
  void validate() const;
};

struct DeviceState {
  ActuatorId id;
  std::string kind;
  LocationId location;
  int mode = 0;          // thermostat: -1 cool, 0 off, +1 heat
  double setpoint = 0.0; // thermostat
  bool active = false;   // on / open / unlocked / sounding
  Tick hold_until = 0;   // 0: no pending revert

  friend bool operator==(const DeviceState&, const DeviceState&) = default;
};

struct TickSample {
  Tick tick = 0;
  std::vector<RoomState> rooms;  // HouseModel::rooms order

  friend bool operator==(const TickSample&, const TickSample&) = default;
};

struct ActuationCount {
  ActuatorId actuator;
  std::string kind;
  std::size_t count = 0;

  friend bool operator==(const ActuationCount&, const ActuationCount&) = default;
};

struct TraceReport {
  std::string scenario;
  std::uint64_t seed = 0;
  Tick horizon = 0;
  Suppression suppression = Suppression::Off;
  std::vector<LocationId> rooms;
  std::vector<TickSample> series;
  std::vector<Event> events;
  std::vector<Conflict> conflicts;
  std::array<std::size_t, 7> conflict_counts{};
  std::vector<ActuationCount> actuations;  // registry order
  std::size_t suppressed_events = 0;
  std::size_t suppressed_actions = 0;
  std::vector<DeviceState> devices;  // final
  /// Paired scenarios only.
  std::shared_ptr<const TraceReport> baseline;

  std::size_t count(ConflictKind k) const { return conflict_counts[kind_slot(k)]; }
  std::size_t total_conflicts() const;
  std::size_t actuations_of(const ActuatorId& id) const;
  std::size_t actuations_of_kind(const std::string& kind) const;
  /// This run's actuations minus the baseline's (0 without a baseline).
  long long extra_actuations_of_kind(const std::string& kind) const;
  /// Largest per-tick |this - baseline| of a room quantity.
  double max_temperature_deviation(const LocationId& room) const;
  double max_humidity_deviation(const LocationId& room) const;
  const DeviceState* device(const ActuatorId& id) const;
};

/// Runs the scenario (and its paired baseline) against the given document.
/// A horizon of 0 yields an empty report.
TraceReport run_scenario(const Scenario& s, const Document& doc);
/// Same, with the scenario's bundled fixture.
TraceReport run_scenario(const Scenario& s);

/// Feeds a recorded event trace through the monitor and the device model
/// instead of sampling sources; ticks run from the first to the last event.
TraceReport replay_trace(const Document& doc, std::span<const Event> events, Suppression suppression,
                         const HouseModel& house);

std::vector<Scenario> builtin_scenarios();
/// Throws UnknownScenarioError.
Scenario builtin_scenario(const std::string& id);

/// Ruleset fixtures compiled into the library, by file stem.
std::vector<std::string> bundled_fixture_names();
/// Throws UnknownScenarioError for unknown names.
std::string_view bundled_fixture(const std::string& name);
Document load_bundled(const std::string& name);

// ---------------------------------------------------------------------------
// CSV

/// tick,room,temperature,humidity,luminance,occupied,thermostat,setpoint,
/// humidifier,light,blind,window,door,alarm
void write_series_csv(std::ostream& out, const TraceReport& r);
/// One row per report plus a final "mean" row: per-kind conflict counts,
/// total, suppression counts and per-actuator-kind actuations and extra
/// actuations.
void write_summary_csv(std::ostream& out, std::span<const TraceReport> reports);

}  // namespace tacc::sim
