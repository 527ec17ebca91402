#include "tacc/document.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

namespace tacc {

namespace {

[[noreturn]] void fail(const YAML::Node& node, const std::string& what) {
  const auto m = node.Mark();
  if (m.is_null()) throw ParseError(what);
  throw ParseError(what, m.line + 1, m.column + 1);
}

void expect_map(const YAML::Node& node, const std::string& ctx,
                std::initializer_list<std::string_view> allowed) {
  if (!node.IsMap()) fail(node, ctx + ": expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    bool ok = false;
    for (auto a : allowed) ok = ok || a == key;
    if (!ok) fail(kv.first, ctx + ": unknown field '" + key + "'");
  }
}

void expect_seq(const YAML::Node& node, const std::string& ctx) {
  if (!node.IsSequence()) fail(node, ctx + ": expected a sequence");
}

YAML::Node field(const YAML::Node& node, const std::string& key, const std::string& ctx) {
  YAML::Node v = node[key];
  if (!v.IsDefined() || v.IsNull()) fail(node, ctx + ": missing field '" + key + "'");
  return v;
}

template <class T>
T scalar(const YAML::Node& node, const std::string& ctx) {
  if (!node.IsScalar()) fail(node, ctx + ": expected a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::BadConversion&) {
    fail(node, ctx + ": cannot convert '" + node.Scalar() + "'");
  }
}

Tick tick_value(const YAML::Node& node, const std::string& ctx) {
  const auto v = scalar<long long>(node, ctx);
  if (v < 0) fail(node, ctx + ": must be non-negative");
  return static_cast<Tick>(v);
}

std::string text(const YAML::Node& node, const std::string& ctx) { return scalar<std::string>(node, ctx); }

template <class T>
std::vector<T> id_list(const YAML::Node& node, const std::string& ctx) {
  expect_seq(node, ctx);
  std::vector<T> out;
  for (const auto& item : node) out.emplace_back(text(item, ctx));
  return out;
}

YAML::Node optional_seq(const YAML::Node& parent, const std::string& key, const std::string& ctx) {
  YAML::Node v = parent[key];
  if (!v.IsDefined() || v.IsNull()) return YAML::Node(YAML::NodeType::Sequence);
  expect_seq(v, ctx + "." + key);
  return v;
}

EventSignature parse_signature(const YAML::Node& node, const std::string& ctx) {
  const std::string s = text(node, ctx);
  const auto a = s.find('/');
  const auto b = a == std::string::npos ? a : s.find('/', a + 1);
  if (b == std::string::npos) fail(node, ctx + ": signature must be kind/predicate/location");
  auto pred = parse_predicate(std::string_view(s).substr(a + 1, b - a - 1));
  if (!pred) fail(node, ctx + ": unknown predicate in '" + s + "'");
  return EventSignature{s.substr(0, a), *pred, LocationId(s.substr(b + 1))};
}

Registry parse_registry(const YAML::Node& node) {
  const std::string ctx = "registry";
  expect_map(node, ctx,
             {"day_length", "locations", "sensor_kinds", "actuator_kinds", "features", "sensors",
              "actuators", "controllers"});
  Registry reg;
  if (node["day_length"]) reg.day_length = tick_value(node["day_length"], "registry.day_length");
  reg.locations = id_list<LocationId>(field(node, "locations", ctx), "registry.locations");
  reg.controllers = id_list<ControllerId>(field(node, "controllers", ctx), "registry.controllers");

  for (const auto& k : optional_seq(node, "sensor_kinds", ctx)) {
    const std::string c = "sensor kind";
    expect_map(k, c, {"name", "unit", "range"});
    SensorKind sk;
    sk.name = text(field(k, "name", c), c);
    sk.unit = text(field(k, "unit", c), c);
    const auto range = field(k, "range", c);
    if (!range.IsSequence() || range.size() != 2) fail(range, c + ": range must be [min, max]");
    sk.min = scalar<double>(range[0], c);
    sk.max = scalar<double>(range[1], c);
    reg.sensor_kinds.push_back(std::move(sk));
  }
  for (const auto& k : optional_seq(node, "actuator_kinds", ctx)) {
    const std::string c = "actuator kind";
    expect_map(k, c, {"name", "actions"});
    ActuatorKind ak;
    ak.name = text(field(k, "name", c), c);
    ak.actions = id_list<ActionName>(field(k, "actions", c), c + ".actions");
    reg.actuator_kinds.push_back(std::move(ak));
  }
  for (const auto& f : optional_seq(node, "features", ctx)) {
    const std::string c = "feature";
    expect_map(f, c, {"id", "location", "kind"});
    Feature feat;
    feat.id = FeatureId(text(field(f, "id", c), c));
    feat.location = LocationId(text(field(f, "location", c), c));
    if (f["kind"]) feat.kind = text(f["kind"], c);
    reg.features.push_back(std::move(feat));
  }
  for (const auto& s : optional_seq(node, "sensors", ctx)) {
    const std::string c = "sensor";
    expect_map(s, c, {"id", "kind", "location", "tolerance"});
    Sensor sensor;
    sensor.id = SensorId(text(field(s, "id", c), c));
    sensor.kind = text(field(s, "kind", c), c);
    sensor.location = LocationId(text(field(s, "location", c), c));
    if (s["tolerance"]) sensor.tolerance = scalar<double>(s["tolerance"], c);
    reg.sensors.push_back(std::move(sensor));
  }
  for (const auto& a : optional_seq(node, "actuators", ctx)) {
    const std::string c = "actuator";
    expect_map(a, c, {"id", "kind", "location"});
    Actuator act;
    act.id = ActuatorId(text(field(a, "id", c), c));
    act.kind = text(field(a, "kind", c), c);
    act.location = LocationId(text(field(a, "location", c), c));
    reg.actuators.push_back(std::move(act));
  }
  return reg;
}

Rule parse_rule(const YAML::Node& node) {
  expect_map(node, "rule", {"id", "controller", "trigger", "action"});
  Rule r;
  r.id = RuleId(text(field(node, "id", "rule"), "rule.id"));
  const std::string ctx = "rule '" + r.id.str() + "'";
  r.controller = ControllerId(text(field(node, "controller", ctx), ctx));

  const auto t = field(node, "trigger", ctx);
  const std::string tctx = ctx + ".trigger";
  expect_map(t, tctx, {"sensor_kind", "comparator", "threshold", "unit", "location_filter", "schedule"});
  r.trigger.sensor_kind = text(field(t, "sensor_kind", tctx), tctx);
  const auto cmp_node = field(t, "comparator", tctx);
  auto cmp = parse_comparator(text(cmp_node, tctx));
  if (!cmp) fail(cmp_node, tctx + ": comparator must be one of >, <, ==");
  r.trigger.comparator = *cmp;
  r.trigger.threshold = scalar<double>(field(t, "threshold", tctx), tctx);
  if (t["unit"]) r.trigger.unit = text(t["unit"], tctx);
  if (t["location_filter"]) r.trigger.location_filter = LocationId(text(t["location_filter"], tctx));
  if (t["schedule"]) {
    const auto s = t["schedule"];
    expect_map(s, tctx + ".schedule", {"start", "end"});
    r.trigger.schedule = DailyWindow{tick_value(field(s, "start", tctx), tctx),
                                     tick_value(field(s, "end", tctx), tctx)};
  }

  const auto a = field(node, "action", ctx);
  const std::string actx = ctx + ".action";
  expect_map(a, actx, {"actuator", "action", "location", "affected_features"});
  r.action.actuator = ActuatorId(text(field(a, "actuator", actx), actx));
  r.action.action = text(field(a, "action", actx), actx);
  if (a["location"]) r.action.location = LocationId(text(a["location"], actx));
  r.action.affected_features = id_list<FeatureId>(field(a, "affected_features", actx), actx);
  return r;
}

std::pair<std::string, std::string> split_qualified(const YAML::Node& node, const std::string& ctx) {
  const std::string s = text(node, ctx);
  const auto dot = s.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == s.size()) {
    fail(node, ctx + ": expected kind.action, got '" + s + "'");
  }
  return {s.substr(0, dot), s.substr(dot + 1)};
}

ActionRelationTable::Entry parse_relation_entry(const YAML::Node& node) {
  const std::string ctx = "action_relations";
  expect_map(node, ctx, {"kind", "a", "b", "relation"});
  ActionRelationTable::Entry e;
  if (node["kind"]) {
    e.kind_a = e.kind_b = text(node["kind"], ctx);
    e.action_a = text(field(node, "a", ctx), ctx);
    e.action_b = text(field(node, "b", ctx), ctx);
  } else {
    std::tie(e.kind_a, e.action_a) = split_qualified(field(node, "a", ctx), ctx);
    std::tie(e.kind_b, e.action_b) = split_qualified(field(node, "b", ctx), ctx);
  }
  const auto rel_node = field(node, "relation", ctx);
  auto rel = parse_relation(text(rel_node, ctx));
  if (!rel) fail(rel_node, ctx + ": relation must be same, different, opposite or dependent");
  e.relation = *rel;
  return e;
}

Document build(const YAML::Node& root) {
  expect_map(root, "document",
             {"registry", "rules", "feature_deps", "action_relations", "signature_classes", "detector"});
  Registry reg = parse_registry(field(root, "registry", "document"));

  std::vector<Rule> rules;
  for (const auto& r : optional_seq(root, "rules", "document")) rules.push_back(parse_rule(r));

  std::vector<std::pair<FeatureId, FeatureId>> edges;
  for (const auto& e : optional_seq(root, "feature_deps", "document")) {
    if (!e.IsSequence() || e.size() != 2) fail(e, "feature_deps: each edge must be [from, to]");
    edges.emplace_back(FeatureId(text(e[0], "feature_deps")), FeatureId(text(e[1], "feature_deps")));
  }

  std::vector<ActionRelationTable::Entry> relations;
  for (const auto& e : optional_seq(root, "action_relations", "document")) {
    relations.push_back(parse_relation_entry(e));
  }

  SignatureClasses classes;
  std::set<EventSignature> seen;
  for (const auto& g : optional_seq(root, "signature_classes", "document")) {
    expect_seq(g, "signature_classes");
    std::vector<EventSignature> group;
    for (const auto& s : g) {
      auto sig = parse_signature(s, "signature_classes");
      if (!seen.insert(sig).second) fail(s, "signature_classes: signature listed twice");
      group.push_back(std::move(sig));
    }
    classes.groups.push_back(std::move(group));
  }

  DetectorConfig cfg;
  if (const auto d = root["detector"]; d.IsDefined() && !d.IsNull()) {
    expect_map(d, "detector", {"overlap_window", "duplicate_window", "same_tick_epsilon"});
    if (d["overlap_window"]) cfg.overlap_window = tick_value(d["overlap_window"], "detector");
    if (d["duplicate_window"]) cfg.duplicate_window = tick_value(d["duplicate_window"], "detector");
    if (d["same_tick_epsilon"]) cfg.same_tick_epsilon = tick_value(d["same_tick_epsilon"], "detector");
  }

  std::vector<FeatureId> nodes;
  for (const auto& f : reg.features) nodes.push_back(f.id);
  cfg.dependency_graph = FeatureDependencyGraph(std::move(nodes), std::move(edges));
  cfg.action_relations = ActionRelationTable(reg.actuator_kinds, std::move(relations));
  cfg.signature_classes = std::move(classes);
  cfg.validate();

  RuleSet rs(std::move(reg), std::move(rules));
  return Document{std::move(rs), std::move(cfg)};
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string signature_text(const EventSignature& s) {
  return s.sensor_kind + "/" + std::string(to_string(s.predicate)) + "/" + s.location.str();
}

}  // namespace

Document parse_document(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ParseError(e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  if (!root.IsDefined() || root.IsNull()) throw ParseError("empty document");
  try {
    return build(root);
  } catch (const YAML::Exception& e) {
    if (e.mark.is_null()) throw ParseError(e.msg);
    throw ParseError(e.msg, e.mark.line + 1, e.mark.column + 1);
  }
}

RuleSet parse_ruleset(std::string_view text) { return parse_document(text).ruleset; }

Document load_document(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_document(ss.str());
}

std::string serialize_document(const Document& doc) {
  const Registry& reg = doc.ruleset.registry();
  YAML::Emitter out;
  out << YAML::BeginMap;

  out << YAML::Key << "registry" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "day_length" << YAML::Value << reg.day_length;
  out << YAML::Key << "locations" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (const auto& l : reg.locations) out << l.str();
  out << YAML::EndSeq;
  out << YAML::Key << "sensor_kinds" << YAML::Value << YAML::BeginSeq;
  for (const auto& k : reg.sensor_kinds) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "name" << YAML::Value << k.name << YAML::Key
        << "unit" << YAML::Value << k.unit << YAML::Key << "range" << YAML::Value << YAML::Flow
        << YAML::BeginSeq << format_number(k.min) << format_number(k.max) << YAML::EndSeq
        << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "actuator_kinds" << YAML::Value << YAML::BeginSeq;
  for (const auto& k : reg.actuator_kinds) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "name" << YAML::Value << k.name << YAML::Key
        << "actions" << YAML::Value << YAML::Flow << k.actions << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "features" << YAML::Value << YAML::BeginSeq;
  for (const auto& f : reg.features) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "id" << YAML::Value << f.id.str() << YAML::Key
        << "location" << YAML::Value << f.location.str();
    if (!f.kind.empty()) out << YAML::Key << "kind" << YAML::Value << f.kind;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "sensors" << YAML::Value << YAML::BeginSeq;
  for (const auto& s : reg.sensors) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "id" << YAML::Value << s.id.str() << YAML::Key
        << "kind" << YAML::Value << s.kind << YAML::Key << "location" << YAML::Value << s.location.str()
        << YAML::Key << "tolerance" << YAML::Value << format_number(s.tolerance) << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "actuators" << YAML::Value << YAML::BeginSeq;
  for (const auto& a : reg.actuators) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "id" << YAML::Value << a.id.str() << YAML::Key
        << "kind" << YAML::Value << a.kind << YAML::Key << "location" << YAML::Value << a.location.str()
        << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "controllers" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (const auto& c : reg.controllers) out << c.str();
  out << YAML::EndSeq;
  out << YAML::EndMap;

  out << YAML::Key << "rules" << YAML::Value << YAML::BeginSeq;
  for (const auto& r : doc.ruleset.rules()) {
    out << YAML::BeginMap;
    out << YAML::Key << "id" << YAML::Value << r.id.str();
    out << YAML::Key << "controller" << YAML::Value << r.controller.str();
    out << YAML::Key << "trigger" << YAML::Value << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "sensor_kind" << YAML::Value << r.trigger.sensor_kind;
    out << YAML::Key << "comparator" << YAML::Value << std::string(to_string(r.trigger.comparator));
    out << YAML::Key << "threshold" << YAML::Value << format_number(r.trigger.threshold);
    out << YAML::Key << "unit" << YAML::Value << r.trigger.unit;
    if (r.trigger.location_filter) {
      out << YAML::Key << "location_filter" << YAML::Value << r.trigger.location_filter->str();
    }
    if (r.trigger.schedule) {
      out << YAML::Key << "schedule" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key
          << "start" << YAML::Value << r.trigger.schedule->start << YAML::Key << "end" << YAML::Value
          << r.trigger.schedule->end << YAML::EndMap;
    }
    out << YAML::EndMap;
    out << YAML::Key << "action" << YAML::Value << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "actuator" << YAML::Value << r.action.actuator.str();
    out << YAML::Key << "action" << YAML::Value << r.action.action;
    out << YAML::Key << "location" << YAML::Value << r.action.location.str();
    out << YAML::Key << "affected_features" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (const auto& f : r.action.affected_features) out << f.str();
    out << YAML::EndSeq << YAML::EndMap;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "feature_deps" << YAML::Value << YAML::BeginSeq;
  for (const auto& [a, b] : doc.detector.dependency_graph.edges()) {
    out << YAML::Flow << YAML::BeginSeq << a.str() << b.str() << YAML::EndSeq;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "action_relations" << YAML::Value << YAML::BeginSeq;
  for (const auto& e : doc.detector.action_relations.entries()) {
    out << YAML::Flow << YAML::BeginMap;
    if (e.kind_a == e.kind_b) {
      out << YAML::Key << "kind" << YAML::Value << e.kind_a << YAML::Key << "a" << YAML::Value
          << e.action_a << YAML::Key << "b" << YAML::Value << e.action_b;
    } else {
      out << YAML::Key << "a" << YAML::Value << e.kind_a + "." + e.action_a << YAML::Key << "b"
          << YAML::Value << e.kind_b + "." + e.action_b;
    }
    out << YAML::Key << "relation" << YAML::Value << std::string(to_string(e.relation)) << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "signature_classes" << YAML::Value << YAML::BeginSeq;
  for (const auto& g : doc.detector.signature_classes.groups) {
    out << YAML::Flow << YAML::BeginSeq;
    for (const auto& s : g) out << signature_text(s);
    out << YAML::EndSeq;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "detector" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "overlap_window" << YAML::Value << doc.detector.overlap_window;
  out << YAML::Key << "duplicate_window" << YAML::Value << doc.detector.duplicate_window;
  out << YAML::Key << "same_tick_epsilon" << YAML::Value << doc.detector.same_tick_epsilon;
  out << YAML::EndMap;

  out << YAML::EndMap;
  std::string result = out.c_str();
  result += '\n';
  return result;
}

}  // namespace tacc
