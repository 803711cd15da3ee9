// Thin python bindings over the core operations: systems and entropy,
// typicality counts and separation certificates, the construction pipeline
// and its offline audits.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "shiftlab/archive.hpp"

namespace py = pybind11;
using namespace shiftlab;

namespace {

ShiftSystem system_from(const std::vector<std::vector<int>>& transitions) {
  ShiftSystem sys;
  sys.alphabet = static_cast<int>(transitions.size());
  for (const auto& row : transitions) {
    std::vector<std::uint8_t> r;
    for (int v : row) r.push_back(static_cast<std::uint8_t>(v != 0));
    sys.A.push_back(std::move(r));
  }
  sys.validate();
  return sys;
}

Measure bernoulli_from(const std::vector<double>& p) {
  return Measure::markov(bernoulli_measure(p));
}

}  // namespace

PYBIND11_MODULE(_shiftlab, m) {
  m.doc() = "symbolic orbit construction: entropy, separation, tracking, audits";

  m.def(
      "count_words",
      [](const std::vector<std::vector<int>>& transitions, int n) {
        return system_from(transitions).count_words(n).get_str();
      },
      py::arg("transitions"), py::arg("n"),
      "exact number of admissible words of length n (decimal string)");

  m.def(
      "entropy_estimate",
      [](const std::vector<std::vector<int>>& transitions, int n) {
        auto est = estimate_entropy_word_count(system_from(transitions), n);
        return py::make_tuple(est.count.get_str(), est.estimate);
      },
      py::arg("transitions"), py::arg("n"),
      "word-count entropy estimate: (exact count as decimal string, log(count)/n)");

  m.def(
      "typical_count",
      [](const std::vector<std::vector<int>>& transitions, const std::vector<double>& p, int n,
         double zeta) {
        auto set = typical_words(system_from(transitions), bernoulli_from(p), n, zeta);
        return py::make_tuple(set.exact_count.get_str(), set.log_count);
      },
      py::arg("transitions"), py::arg("p"), py::arg("n"), py::arg("zeta"),
      "exact count of zeta-typical words for a Bernoulli target");

  m.def(
      "certify_separation",
      [](const std::vector<std::vector<int>>& transitions, const std::vector<double>& p,
         double eta, double zeta, int horizon) {
        auto cert = certify_uniform_separation(system_from(transitions), bernoulli_from(p), eta,
                                               zeta, horizon);
        py::dict d;
        d["certified"] = cert.certified;
        d["n_star"] = cert.n_star;
        d["h"] = cert.h;
        py::list rows;
        for (const auto& r : cert.rows) {
          py::dict row;
          row["n"] = r.n;
          row["count"] = r.count.get_str();
          row["log_bound"] = r.log_bound;
          row["pass"] = r.pass;
          rows.append(row);
        }
        d["rows"] = rows;
        return d;
      },
      py::arg("transitions"), py::arg("p"), py::arg("eta"), py::arg("zeta"), py::arg("horizon"),
      "uniform-separation certificate for a Bernoulli target");

  m.def(
      "periodic_decomposition",
      [](const std::vector<std::vector<int>>& transitions) {
        auto dec = system_from(transitions).periodic_decomposition();
        py::dict d;
        d["period"] = dec.period;
        d["classes"] = dec.classes;
        d["class_of"] = dec.class_of;
        return d;
      },
      py::arg("transitions"), "period and cyclic classes of a transitive system");

  m.def(
      "shadow",
      [](const std::vector<std::vector<int>>& transitions,
         const std::vector<std::vector<int>>& pseudo, int delta_num, int delta_den) {
        auto sys = system_from(transitions);
        std::vector<Word> pts;
        for (const auto& p : pseudo) pts.emplace_back(p.begin(), p.end());
        Word y = shadow_pseudo_orbit(sys, pts, mpq_class(delta_num, delta_den));
        return std::vector<int>(y.begin(), y.end());
      },
      py::arg("transitions"), py::arg("pseudo"), py::arg("delta_num"), py::arg("delta_den"),
      "1/2-tracing point of a delta-pseudo-orbit (prefixes)");

  m.def(
      "construct",
      [](const std::string& manifest_path, const std::string& out_dir, int stop_after_band) {
        RunContext ctx = prepare_run(load_manifest_file(manifest_path));
        run_construct(ctx, out_dir, stop_after_band);
        py::dict d;
        d["bands"] = ctx.schedule.bands;
        d["horizon"] = ctx.schedule.band_end(ctx.schedule.bands);
        d["u"] = word_to_string(ctx.schedule.u);
        return d;
      },
      py::arg("manifest_path"), py::arg("out_dir"), py::arg("stop_after_band") = -1,
      "solve a manifest and write the orbit archive");

  m.def("resume", &run_resume, py::arg("out_dir"), py::arg("horizon") = -1,
        "continue an interrupted archive to the horizon");

  m.def(
      "audit",
      [](const std::string& out_dir, const std::string& which, const std::string& format) {
        LoadedArchive ar = load_archive(out_dir);
        AuditResult r;
        if (which == "tracking")
          r = audit_tracking(ar, -1, format);
        else if (which == "transitivity")
          r = audit_transitivity(ar, 4, -1, format);
        else if (which == "certificate")
          r = audit_certificate(ar, 0.15, format);
        else if (which == "birkhoff")
          r = audit_birkhoff(ar, -1, format);
        else if (which == "classify")
          r = audit_classify(ar, -1, 0.05, format);
        else
          throw std::invalid_argument("unknown audit '" + which + "'");
        return py::make_tuple(r.pass, r.text);
      },
      py::arg("out_dir"), py::arg("which"), py::arg("format") = "csv",
      "offline audit of an archive: (pass, report text)");

  m.def("template_json", &template_json, py::arg("kind"),
        "skeleton input file: system|family|measure|target|observable|manifest");
}
