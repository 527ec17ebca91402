#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "tacc/detector.hpp"
#include "tacc/document.hpp"
#include "tacc/oracle.hpp"
#include "tacc/simulator.hpp"
#include "tacc/trace_io.hpp"

namespace py = pybind11;
using namespace tacc;

namespace {

std::vector<Event> parse_trace(const Document& doc, const std::string& csv) {
  std::istringstream in(csv);
  return read_trace(in, doc.ruleset);
}

py::dict conflict_dict(const Conflict& c) {
  py::dict d;
  d["tick"] = c.tick;
  d["kind"] = std::string(to_string(c.kind));
  d["rule_a"] = c.participants[0].rule.str();
  d["rule_b"] = c.participants[1].rule.str();
  d["event_a"] = c.participants[0].event;
  d["event_b"] = c.participants[1].event;
  d["actuator"] = c.kind == ConflictKind::C7 ? c.participants[0].sensor.str() : c.participants[0].actuator.str();
  d["note"] = c.note;
  d["suppressible"] = c.suppressible ? py::cast(*c.suppressible) : py::none();
  return d;
}

py::list conflict_list(const std::vector<Conflict>& cs) {
  py::list out;
  for (const auto& c : cs) out.append(conflict_dict(c));
  return out;
}

py::dict counts_dict(const std::array<std::size_t, 7>& counts) {
  py::dict d;
  for (auto k : kAllConflictKinds) d[py::str(std::string(to_string(k)))] = counts[kind_slot(k)];
  return d;
}

py::dict report_dict(const sim::TraceReport& r) {
  py::dict d;
  d["scenario"] = r.scenario;
  d["seed"] = r.seed;
  d["horizon"] = r.horizon;
  d["suppression"] = std::string(to_string(r.suppression));
  d["counts"] = counts_dict(r.conflict_counts);
  d["total_conflicts"] = r.total_conflicts();
  d["events"] = r.events.size();
  d["suppressed_events"] = r.suppressed_events;
  d["suppressed_actions"] = r.suppressed_actions;
  py::dict act;
  for (const auto& a : r.actuations) act[py::str(a.actuator.str())] = a.count;
  d["actuations"] = act;
  d["conflicts"] = conflict_list(r.conflicts);
  std::ostringstream series;
  sim::write_series_csv(series, r);
  d["series_csv"] = series.str();
  d["baseline"] = r.baseline ? py::object(report_dict(*r.baseline)) : py::none();
  return d;
}

}  // namespace

PYBIND11_MODULE(_tacc, m) {
  m.doc() = "Trigger-action conflict detection and smart-home simulation";

  static py::exception<Error> error(m, "TaccError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  py::class_<Document>(m, "Document")
      .def_property_readonly("rules",
                             [](const Document& d) {
                               std::vector<std::string> ids;
                               for (const auto& r : d.ruleset.rules()) ids.push_back(r.id.str());
                               return ids;
                             })
      .def_property_readonly("locations",
                             [](const Document& d) {
                               std::vector<std::string> ids;
                               for (const auto& l : d.ruleset.registry().locations) ids.push_back(l.str());
                               return ids;
                             })
      .def_property_readonly("overlap_window", [](const Document& d) { return d.detector.overlap_window; })
      .def_property_readonly("duplicate_window", [](const Document& d) { return d.detector.duplicate_window; })
      .def("serialize", &serialize_document)
      .def("__eq__", [](const Document& a, const Document& b) { return a == b; });

  m.def("parse", &parse_document, py::arg("text"), "Parse a ruleset document (YAML text).");
  m.def("bundled_fixture", [](const std::string& name) { return std::string(sim::bundled_fixture(name)); },
        py::arg("name"));
  m.def("bundled_fixtures", &sim::bundled_fixture_names);

  m.def(
      "static_check",
      [](const Document& doc) {
        py::list out;
        for (const auto& p : static_check(doc.ruleset, doc.detector)) {
          py::dict d;
          d["kind"] = std::string(to_string(p.kind));
          d["rule_a"] = p.rule_a.str();
          d["rule_b"] = p.rule_b.str();
          d["note"] = p.note;
          out.append(d);
        }
        return out;
      },
      py::arg("doc"), "Potential conflicts between rule pairs.");

  m.def(
      "detect",
      [](const Document& doc, const std::string& trace_csv) {
        const auto events = parse_trace(doc, trace_csv);
        std::vector<Conflict> cs;
        {
          py::gil_scoped_release release;
          cs = detect_trace(events, std::make_shared<const RuleSet>(doc.ruleset), doc.detector);
        }
        return conflict_list(cs);
      },
      py::arg("doc"), py::arg("trace_csv"), "Stream a CSV event trace through the detector.");

  m.def(
      "oracle_detect",
      [](const Document& doc, const std::string& trace_csv) {
        const auto events = parse_trace(doc, trace_csv);
        return conflict_list(oracle::detect(events, doc.ruleset, doc.detector));
      },
      py::arg("doc"), py::arg("trace_csv"), "Brute-force reference detection.");

  m.def("scenario_ids", [] {
    std::vector<std::string> ids;
    for (const auto& s : sim::builtin_scenarios()) ids.push_back(s.id);
    return ids;
  });

  m.def(
      "run_scenario",
      [](const std::string& id, std::uint64_t seed, std::optional<Tick> horizon, const std::string& suppression,
         const std::map<std::string, double>& probabilities) {
        auto s = sim::builtin_scenario(id);
        s.seed = seed;
        if (horizon) s.horizon = *horizon;
        s.suppression = sim::parse_suppression(suppression);
        for (const auto& [name, p] : probabilities) s.set_probability(name, p);
        sim::TraceReport r;
        {
          py::gil_scoped_release release;
          r = sim::run_scenario(s);
        }
        return report_dict(r);
      },
      py::arg("scenario"), py::arg("seed") = 1, py::arg("horizon") = py::none(), py::arg("suppression") = "off",
      py::arg("probabilities") = std::map<std::string, double>{}, "Run a built-in scenario S1..S8.");
}
