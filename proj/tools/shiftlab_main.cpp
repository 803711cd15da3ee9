// Command-line front end: define templates, validate inputs, construct and
// resume orbit archives, run offline audits, and query entropy estimates.
//
// Exit codes: 0 success / audits pass, 1 an audit fails, 2 bad input,
// 3 a solver or generation budget was exhausted.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "shiftlab/archive.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace shiftlab;

namespace {

constexpr int kExitAuditFail = 1;
constexpr int kExitInputError = 2;
constexpr int kExitBudget = 3;

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::invalid_argument("cannot write " + out_path);
  out << text;
}

std::string detect_kind(const json& j) {
  if (j.contains("transitions")) return "system";
  if (j.contains("levels")) return "family";
  if (j.contains("type")) return "measure";
  if (j.contains("vertices")) return "target";
  if (j.contains("table")) return "observable";
  if (j.contains("family")) return "manifest";
  return "";
}

int cmd_validate(const std::string& path) {
  json j;
  {
    std::ifstream in(path);
    if (!in) {
      std::cerr << "error: cannot open " << path << "\n";
      return kExitInputError;
    }
    try {
      in >> j;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitInputError;
    }
  }
  const std::string kind = detect_kind(j);
  try {
    if (kind == "system") {
      auto sys = load_system_file(path);
      std::cout << "ok: transitive system on " << sys.alphabet << " symbols\n";
    } else if (kind == "family") {
      auto fam = load_family_file(path);
      std::cout << "ok: family '" << fam.name << "' with " << fam.level_count()
                << " level(s), ambient alphabet " << fam.ambient().alphabet << "\n";
    } else if (kind == "measure") {
      load_measure_file(path);
      std::cout << "ok: measure\n";
    } else if (kind == "target") {
      auto t = load_target_file(path);
      std::cout << "ok: target path with " << t.vertices.size() << " vertex/vertices\n";
    } else if (kind == "observable") {
      auto phi = load_observable_file(path);
      std::cout << "ok: observable, window " << phi.window << "\n";
    } else if (kind == "manifest") {
      auto ctx = prepare_run(load_manifest_file(path));
      std::cout << "ok: manifest solves to " << ctx.schedule.bands << " band(s), horizon "
                << ctx.schedule.band_end(ctx.schedule.bands) << "\n";
    } else {
      std::cerr << "error: " << path << ": unrecognized input kind\n";
      return kExitInputError;
    }
  } catch (const std::exception& e) {
    std::cerr << "invalid " << kind << ": " << e.what() << "\n";
    return kExitInputError;
  }
  return 0;
}

struct AuditOpts {
  std::string which = "all";
  std::string format = "csv";
  long long horizon = -1;
  int depth = 4;
  double floor_slack = 0.15;
  double tolerance = 0.05;
  bool save = false;
};

int cmd_audit(const std::string& out_dir, const AuditOpts& o) {
  LoadedArchive ar = load_archive(out_dir);
  bool all_pass = true;
  auto run_one = [&](const std::string& name) -> bool {
    AuditResult r;
    if (name == "tracking") {
      r = audit_tracking(ar, o.horizon, o.format);
    } else if (name == "transitivity") {
      r = audit_transitivity(ar, o.depth, o.horizon, o.format);
    } else if (name == "certificate") {
      r = audit_certificate(ar, o.floor_slack, o.format);
    } else if (name == "birkhoff") {
      if (o.which == "all" && !ar.ctx.has_observable) return true;  // nothing to audit
      r = audit_birkhoff(ar, o.horizon, o.format);
    } else if (name == "classify") {
      r = audit_classify(ar, o.horizon, o.tolerance, o.format);
    } else {
      throw std::invalid_argument("unknown audit '" + name + "'");
    }
    std::string out_path;
    if (o.save)
      out_path = (fs::path(out_dir) / ("audit_" + name + (o.format == "json" ? ".json" : ".csv")))
                     .string();
    emit(r.text, out_path);
    std::cerr << name << ": " << (r.pass ? "pass" : "FAIL") << "\n";
    return r.pass;
  };
  if (o.which == "all") {
    for (const char* name : {"tracking", "transitivity", "certificate", "birkhoff"})
      all_pass = run_one(name) && all_pass;
  } else {
    all_pass = run_one(o.which);
  }
  return all_pass ? 0 : kExitAuditFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nested-shift orbit constructor"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::uint64_t seed = 0;
  bool seed_set = false;
  int bands = 0;
  bool bands_set = false;
  long long horizon = -2;
  std::string out_dir;
  std::string format = "csv";
  app.add_option("--seed", seed, "override the manifest seed")->each([&](const std::string&) {
    seed_set = true;
  });
  app.add_option("--bands", bands, "override the manifest band count")
      ->each([&](const std::string&) { bands_set = true; });
  app.add_option("--horizon", horizon, "override the horizon (symbols; -1 = full schedule)");
  app.add_option("--out-dir", out_dir, "archive directory");
  app.add_option("--format", format, "audit output format")
      ->check(CLI::IsMember({"csv", "json"}));

  // define
  auto* define = app.add_subcommand("define", "write a template input file");
  std::string kind, def_out;
  define->add_option("kind", kind, "system|family|measure|target|observable|manifest")
      ->required();
  define->add_option("--out", def_out, "write to a file instead of stdout");

  // validate
  auto* validate = app.add_subcommand("validate", "check an input file");
  std::string val_path;
  validate->add_option("file", val_path)->required();

  // construct
  auto* construct = app.add_subcommand("construct", "run a construction from a manifest");
  std::string man_path;
  int stop_after_band = -1;
  construct->add_option("manifest", man_path)->required();
  construct->add_option("--stop-after-band", stop_after_band,
                        "stop once this band is complete (interruption drill)");

  // resume
  auto* resume = app.add_subcommand("resume", "continue an interrupted archive");
  std::string res_dir;
  resume->add_option("dir", res_dir, "archive directory (or use --out-dir)");

  // audit
  auto* audit = app.add_subcommand("audit", "offline audits of an archive");
  AuditOpts ao;
  std::string audit_dir;
  audit->add_option("dir", audit_dir, "archive directory (or use --out-dir)");
  audit->add_option("--which", ao.which, "tracking|transitivity|certificate|birkhoff|classify|all")
      ->check(CLI::IsMember({"tracking", "transitivity", "certificate", "birkhoff", "classify",
                             "all"}));
  audit->add_option("--depth", ao.depth, "cylinder depth for the transitivity audit");
  audit->add_option("--floor-slack", ao.floor_slack, "entropy slack for the certificate audit");
  audit->add_option("--tolerance", ao.tolerance, "cluster radius for the classify audit");
  audit->add_flag("--save", ao.save, "also write audit files into the archive");

  // entropy
  auto* entropy = app.add_subcommand("entropy", "word-count entropy estimate of a system");
  std::string ent_path;
  int ent_n = 32;
  entropy->add_option("file", ent_path, "system (or family) file")->required();
  entropy->add_option("--n", ent_n, "word length");

  // info
  auto* info = app.add_subcommand("info", "summarize an archive or input file");
  std::string info_path;
  info->add_option("path", info_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (define->parsed()) {
      emit(template_json(kind), def_out);
      return 0;
    }
    if (validate->parsed()) return cmd_validate(val_path);
    if (construct->parsed()) {
      if (out_dir.empty()) throw std::invalid_argument("construct needs --out-dir");
      RunManifest m = load_manifest_file(man_path);
      if (seed_set) m.seed = seed;
      if (bands_set) m.bands = bands;
      if (horizon != -2) m.horizon = horizon;
      RunContext ctx = prepare_run(m);
      run_construct(ctx, out_dir, stop_after_band);
      std::cout << "archive written to " << out_dir << "\n";
      return 0;
    }
    if (resume->parsed()) {
      const std::string dir = res_dir.empty() ? out_dir : res_dir;
      if (dir.empty()) throw std::invalid_argument("resume needs an archive directory");
      run_resume(dir, horizon == -2 ? -1 : horizon);
      std::cout << "archive resumed in " << dir << "\n";
      return 0;
    }
    if (audit->parsed()) {
      const std::string dir = audit_dir.empty() ? out_dir : audit_dir;
      if (dir.empty()) throw std::invalid_argument("audit needs an archive directory");
      ao.format = format;
      if (horizon != -2) ao.horizon = horizon;
      return cmd_audit(dir, ao);
    }
    if (entropy->parsed()) {
      json j;
      {
        std::ifstream in(ent_path);
        if (!in) throw std::invalid_argument("cannot open " + ent_path);
        in >> j;
      }
      std::vector<ShiftSystem> systems;
      std::vector<std::string> labels;
      if (j.contains("levels")) {
        auto fam = load_family_file(ent_path);
        for (int l = 1; l <= fam.level_count(); ++l) {
          systems.push_back(fam.system_of(l));
          labels.push_back("level " + std::to_string(l));
        }
        systems.push_back(fam.ambient());
        labels.push_back("ambient");
      } else {
        systems.push_back(load_system_file(ent_path));
        labels.push_back(j.value("label", "system"));
      }
      for (std::size_t i = 0; i < systems.size(); ++i) {
        auto est = estimate_entropy_word_count(systems[i], ent_n);
        std::cout << labels[i] << ": count(" << ent_n << ") = " << est.count.get_str()
                  << ", entropy estimate = " << est.estimate << "\n";
      }
      return 0;
    }
    if (info->parsed()) {
      if (fs::is_directory(info_path)) {
        std::ifstream st(fs::path(info_path) / "status.json");
        if (!st) throw std::invalid_argument(info_path + ": no status.json (not an archive?)");
        json s;
        st >> s;
        std::cout << s.dump(2) << "\n";
        std::ifstream sc(fs::path(info_path) / "schedule.json");
        if (sc) {
          json sj;
          sc >> sj;
          std::cout << "bands: " << sj.value("bands", 0) << ", band_ends: "
                    << sj.value("band_ends", json::array()).dump() << "\n";
        }
        return 0;
      }
      return cmd_validate(info_path);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::logic_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "budget exhausted: " << e.what() << "\n";
    return kExitBudget;
  }
  return 0;
}
