#include "shiftlab/archive.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace shiftlab {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

[[noreturn]] void bad(const std::string& what) { throw std::invalid_argument(what); }

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    bad(path + ": " + e.what());
  }
  return j;
}

// numbers may be floats or exact "p/q" strings
double real_of(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    auto slash = s.find('/');
    try {
      if (slash == std::string::npos) return std::stod(s);
      return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
    } catch (const std::exception&) {
      bad(where + ": cannot parse rational '" + s + "'");
    }
  }
  bad(where + ": expected a number or 'p/q' string");
}

mpq_class rational_of(const std::string& s, const std::string& where) {
  try {
    mpq_class q(s);
    q.canonicalize();
    return q;
  } catch (const std::exception&) {
    bad(where + ": cannot parse rational '" + s + "'");
  }
}

ShiftSystem system_of_json(const json& j, const std::string& where) {
  ShiftSystem sys;
  if (!j.contains("alphabet_size") || !j.contains("transitions"))
    bad(where + ": system needs alphabet_size and transitions");
  sys.alphabet = j.at("alphabet_size").get<int>();
  const auto& rows = j.at("transitions");
  if (!rows.is_array() || static_cast<int>(rows.size()) != sys.alphabet)
    bad(where + ": transitions must be a " + std::to_string(sys.alphabet) + "-row matrix");
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != sys.alphabet)
      bad(where + ": transition row has wrong width");
    std::remove_reference_t<decltype(sys.A)>::value_type r;
    for (const auto& e : row) {
      int v = e.get<int>();
      if (v != 0 && v != 1) bad(where + ": transitions must be 0/1");
      r.push_back(static_cast<unsigned char>(v));
    }
    sys.A.push_back(std::move(r));
  }
  return sys;
}

std::vector<double> reals_of(const json& arr, const std::string& where) {
  std::vector<double> out;
  for (const auto& e : arr) out.push_back(real_of(e, where));
  return out;
}

Measure measure_of_json(const json& j, const std::string& where) {
  const std::string type = j.value("type", "");
  if (type == "bernoulli") {
    return Measure::markov(bernoulli_measure(reals_of(j.at("p"), where + ".p")));
  }
  if (type == "markov") {
    MarkovMeasure m;
    m.pi = reals_of(j.at("pi"), where + ".pi");
    m.alphabet = static_cast<int>(m.pi.size());
    int row_idx = 0;
    for (const auto& row : j.at("P")) {
      auto r = reals_of(row, where + ".P");
      double s = 0;
      for (double v : r) s += v;
      if (std::abs(s - 1.0) > 1e-9 && s != 0.0)
        bad(where + ": P row " + std::to_string(row_idx) + " is not stochastic (sums to " +
            std::to_string(s) + ")");
      m.P.push_back(std::move(r));
      ++row_idx;
    }
    m.validate();
    return Measure::markov(std::move(m));
  }
  if (type == "parry") {
    return Measure::markov(parry_measure(system_of_json(j.at("system"), where + ".system")));
  }
  if (type == "convex") {
    std::vector<std::pair<double, Measure>> parts;
    for (const auto& part : j.at("parts"))
      parts.emplace_back(real_of(part.at("weight"), where + ".weight"),
                         measure_of_json(part.at("measure"), where + ".measure"));
    return Measure::convex(std::move(parts));
  }
  bad(where + ": unknown measure type '" + type + "'");
}

void atomic_write(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  fs::rename(tmp, path);
}

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& s, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
std::uint32_t get_u32(const std::string& s, std::size_t& p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[p++])) << (8 * i);
  return v;
}
std::uint64_t get_u64(const std::string& s, std::size_t& p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[p++])) << (8 * i);
  return v;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) bad("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string resolve(const std::string& base_dir, const std::string& p) {
  if (p.empty()) return p;
  fs::path fp(p);
  if (fp.is_absolute()) return p;
  return (fs::path(base_dir) / fp).string();
}

json schedule_json(const Schedule& s) {
  json j;
  j["bands"] = s.bands;
  j["eta"] = s.eta;
  j["u"] = word_to_string(s.u);
  j["u_level"] = s.u_level;
  j["x0"] = word_to_string(s.x0);
  j["entropy_floor"] = s.entropy_floor;
  auto rats = [](const std::vector<mpq_class>& v) {
    std::vector<std::string> out;
    for (const auto& q : v) out.push_back(q.get_str());
    return out;
  };
  j["eps"] = rats(s.eps);
  j["zeta"] = rats(s.zeta);
  j["level"] = s.level;
  j["glue_level"] = s.glue_level;
  j["m"] = s.m;
  j["K"] = s.K;
  j["n"] = s.n;
  j["t"] = s.t;
  j["N"] = s.N;
  std::vector<long long> ends;
  for (int k = 0; k <= s.bands; ++k) ends.push_back(s.band_end(k));
  j["band_ends"] = ends;
  std::vector<double> lc;
  for (const auto& g : s.gamma_sets) lc.push_back(g.log_count);
  j["block_set_log_counts"] = lc;
  return j;
}

json manifest_json(const RunManifest& m) {
  json j;
  j["family"] = m.family_path;
  if (!m.target_path.empty()) j["target"] = m.target_path;
  if (!m.observable_path.empty()) j["observable"] = m.observable_path;
  if (!m.variant.empty()) j["variant"] = m.variant;
  j["level"] = m.level;
  j["u"] = m.u;
  j["eta"] = m.eta;
  j["bands"] = m.bands;
  j["horizon"] = m.horizon;
  j["seed"] = m.seed;
  j["mode"] = m.direct_mode ? "direct" : "measure";
  j["zeta1_cap"] = m.zeta1_cap;
  j["box_budget"] = m.box_budget;
  return j;
}

void save_archive(const RunContext& ctx, const SymbolStream& stream, const std::string& out_dir) {
  fs::create_directories(out_dir);
  auto at = [&](const char* name) { return (fs::path(out_dir) / name).string(); };
  atomic_write(at("manifest.json"), manifest_json(ctx.manifest).dump(2) + "\n");
  atomic_write(at("schedule.json"), schedule_json(ctx.schedule).dump(2) + "\n");

  int B = ctx.schedule.bands;
  long long produced = static_cast<long long>(stream.symbols.size());
  long long produced_base =
      ctx.route.identity ? produced : produced * ctx.route.k - ctx.route.i0;
  json status;
  status["seed"] = stream.seed;
  status["complete_bands"] = stream.complete_bands;
  status["length"] = produced;
  status["horizon"] = stream.horizon;
  status["status"] = stream.complete_bands >= B ||
                             (ctx.manifest.horizon >= 0 && produced_base >= ctx.manifest.horizon)
                         ? "complete"
                         : "resumable";
  json route;
  route["identity"] = ctx.route.identity;
  route["k"] = ctx.route.k;
  route["i0"] = ctx.route.i0;
  status["route"] = route;

  if (ctx.route.identity) {
    write_stream_file(at("stream.syms"), stream.symbols, ctx.family.ambient().alphabet);
    write_checkpoint_file(at("checkpoints.bin"), stream.checkpoints);
  } else {
    write_stream_file(at("stream.block.syms"), stream.symbols,
                      ctx.route.block_family.ambient().alphabet);
    write_checkpoint_file(at("checkpoints.block.bin"), stream.checkpoints);
    write_stream_file(at("stream.syms"), ctx.route.decode(stream.symbols),
                      ctx.family.ambient().alphabet);
    write_checkpoint_file(at("checkpoints.bin"),
                          translate_checkpoints(stream.checkpoints, ctx.route));
  }
  atomic_write(at("status.json"), status.dump(2) + "\n");
}

}  // namespace

// -------------------------------------------------------------- file codecs

ShiftSystem load_system_file(const std::string& path) {
  auto sys = system_of_json(read_json(path), path);
  sys.validate();
  return sys;
}

NestedFamily load_family_file(const std::string& path) {
  json j = read_json(path);
  NestedFamily fam;
  fam.name = j.value("name", fs::path(path).stem().string());
  if (!j.contains("levels") || !j.at("levels").is_array() || j.at("levels").empty())
    bad(path + ": family needs a non-empty levels array");
  int idx = 1;
  for (const auto& lv : j.at("levels"))
    fam.levels.push_back(system_of_json(lv, path + ": level " + std::to_string(idx++)));
  if (j.contains("ambient"))
    fam.ambient_override = system_of_json(j.at("ambient"), path + ": ambient");
  fam.density_depth = j.value("density_depth", 6);
  fam.validate();
  return fam;
}

Measure load_measure_file(const std::string& path) {
  return measure_of_json(read_json(path), path);
}

TargetPath load_target_file(const std::string& path) {
  json j = read_json(path);
  TargetPath p;
  if (!j.contains("vertices") || j.at("vertices").empty())
    bad(path + ": target needs a non-empty vertices array");
  for (const auto& v : j.at("vertices")) {
    TargetPath::Vertex vx;
    vx.measure = measure_of_json(v.at("measure"), path + ": vertex measure");
    vx.level = v.value("level", 1);
    p.vertices.push_back(std::move(vx));
  }
  return p;
}

Observable load_observable_file(const std::string& path) {
  json j = read_json(path);
  Observable phi;
  phi.alphabet = j.value("alphabet_size", 2);
  phi.window = j.value("window", 1);
  for (const auto& e : j.at("table")) phi.table.push_back(real_of(e, path + ": table"));
  return phi;
}

RunManifest load_manifest_file(const std::string& path) {
  json j = read_json(path);
  const std::string dir = fs::absolute(fs::path(path)).parent_path().string();
  RunManifest m;
  if (!j.contains("family")) bad(path + ": manifest needs a family file");
  m.family_path = resolve(dir, j.at("family").get<std::string>());
  m.target_path = resolve(dir, j.value("target", ""));
  m.observable_path = resolve(dir, j.value("observable", ""));
  m.variant = j.value("variant", "");
  m.level = j.value("level", 1);
  m.u = j.value("u", "0");
  m.eta = real_of(j.value("eta", json(0.3)), path + ": eta");
  m.bands = j.value("bands", 3);
  m.horizon = j.value("horizon", -1LL);
  m.seed = j.value("seed", std::uint64_t{1});
  m.direct_mode = j.value("mode", "direct") != "measure";
  m.zeta1_cap = j.value("zeta1_cap", "1/10");
  m.box_budget = j.value("box_budget", 30000L);
  if (m.target_path.empty() && m.observable_path.empty())
    bad(path + ": manifest needs a target file or an observable+variant");
  return m;
}

std::string template_json(const std::string& kind) {
  json j;
  if (kind == "system") {
    j = {{"label", "golden-mean"}, {"alphabet_size", 2}, {"transitions", {{1, 1}, {1, 0}}}};
  } else if (kind == "family") {
    j = {{"name", "golden-in-full"},
         {"levels",
          {{{"label", "golden-mean"}, {"alphabet_size", 2}, {"transitions", {{1, 1}, {1, 0}}}},
           {{"label", "full-2"}, {"alphabet_size", 2}, {"transitions", {{1, 1}, {1, 1}}}}}},
         {"density_depth", 6}};
  } else if (kind == "measure") {
    j = {{"type", "bernoulli"}, {"p", {"1/2", "1/2"}}};
  } else if (kind == "target") {
    j = {{"vertices",
          {{{"measure", {{"type", "bernoulli"}, {"p", {"1/2", "1/2"}}}}, {"level", 2}}}}};
  } else if (kind == "observable") {
    j = {{"alphabet_size", 2}, {"window", 1}, {"table", {0.0, 1.0}}};
  } else if (kind == "manifest") {
    j = {{"family", "family.json"}, {"target", "target.json"}, {"u", "0"},    {"eta", 0.3},
         {"bands", 3},              {"horizon", -1},           {"seed", 1},   {"mode", "direct"},
         {"zeta1_cap", "1/10"},     {"box_budget", 30000}};
  } else {
    bad("unknown template kind '" + kind + "'");
  }
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------- binary artifacts

void write_stream_file(const std::string& path, const Word& symbols, int alphabet) {
  std::string s;
  s += "SYMS";
  put_u32(s, 1);
  put_u32(s, static_cast<std::uint32_t>(alphabet));
  put_u64(s, symbols.size());
  if (alphabet <= 4) {
    for (std::size_t i = 0; i < symbols.size(); i += 4) {
      unsigned char b = 0;
      for (std::size_t k = 0; k < 4 && i + k < symbols.size(); ++k)
        b |= static_cast<unsigned char>(symbols[i + k] & 3) << (2 * k);
      s.push_back(static_cast<char>(b));
    }
  } else {
    for (Symbol sym : symbols) s.push_back(static_cast<char>(sym));
  }
  atomic_write(path, s);
}

Word read_stream_file(const std::string& path, int* alphabet) {
  std::string s = slurp(path);
  if (s.size() < 20 || s.compare(0, 4, "SYMS") != 0) bad(path + ": not a stream file");
  std::size_t p = 4;
  if (get_u32(s, p) != 1) bad(path + ": unsupported stream version");
  int a = static_cast<int>(get_u32(s, p));
  std::uint64_t len = get_u64(s, p);
  if (alphabet) *alphabet = a;
  Word w;
  w.reserve(len);
  if (a <= 4) {
    for (std::uint64_t i = 0; i < len; ++i) {
      unsigned char b = static_cast<unsigned char>(s.at(p + i / 4));
      w.push_back(static_cast<Symbol>((b >> (2 * (i % 4))) & 3));
    }
  } else {
    for (std::uint64_t i = 0; i < len; ++i)
      w.push_back(static_cast<Symbol>(static_cast<unsigned char>(s.at(p + i))));
  }
  return w;
}

void write_checkpoint_file(const std::string& path, const std::vector<Checkpoint>& cps) {
  std::string s;
  s += "CKPT";
  put_u32(s, 1);
  put_u64(s, cps.size());
  for (const auto& cp : cps) {
    put_u64(s, static_cast<std::uint64_t>(cp.M));
    put_u64(s, static_cast<std::uint64_t>(cp.offset));
    put_u32(s, static_cast<std::uint32_t>(cp.band));
    put_u32(s, static_cast<std::uint32_t>(cp.slot));
    put_u32(s, static_cast<std::uint32_t>(cp.type));
    put_u32(s, static_cast<std::uint32_t>(cp.content.size()));
    for (Symbol sym : cp.content) s.push_back(static_cast<char>(sym));
  }
  atomic_write(path, s);
}

std::vector<Checkpoint> read_checkpoint_file(const std::string& path) {
  std::string s = slurp(path);
  if (s.size() < 16 || s.compare(0, 4, "CKPT") != 0) bad(path + ": not a checkpoint file");
  std::size_t p = 4;
  if (get_u32(s, p) != 1) bad(path + ": unsupported checkpoint version");
  std::uint64_t count = get_u64(s, p);
  std::vector<Checkpoint> out;
  out.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Checkpoint cp;
    cp.M = static_cast<long long>(get_u64(s, p));
    cp.offset = static_cast<long long>(get_u64(s, p));
    cp.band = static_cast<int>(get_u32(s, p));
    cp.slot = static_cast<int>(get_u32(s, p));
    cp.type = static_cast<Checkpoint::Type>(get_u32(s, p));
    std::uint32_t len = get_u32(s, p);
    for (std::uint32_t k = 0; k < len; ++k)
      cp.content.push_back(static_cast<Symbol>(static_cast<unsigned char>(s.at(p++))));
    out.push_back(std::move(cp));
  }
  return out;
}

std::vector<Checkpoint> translate_checkpoints(const std::vector<Checkpoint>& block_cps,
                                              const MixingRoute& route) {
  std::vector<Checkpoint> out;
  out.reserve(block_cps.size());
  const auto& blocks = route.powers.front().blocks;
  for (const auto& cp : block_cps) {
    Checkpoint b = cp;
    b.M = route.base_index(cp.M);
    b.offset = cp.offset * route.k - route.i0;
    b.content.clear();
    for (Symbol s : cp.content) {
      const Word& blk = blocks[s];
      b.content.insert(b.content.end(), blk.begin(), blk.end());
    }
    if (b.offset < 0) {  // opening slot: the first i0 base symbols are dropped
      b.content.erase(b.content.begin(), b.content.begin() + (-b.offset));
      b.offset = 0;
    }
    out.push_back(std::move(b));
  }
  return out;
}

// ---------------------------------------------------------------- pipeline

RunContext prepare_run(const RunManifest& manifest) {
  RunContext ctx;
  ctx.manifest = manifest;
  ctx.family = load_family_file(manifest.family_path);
  Word u = word_from_string(manifest.u, ctx.family.ambient().alphabet);
  ctx.route = mixing_route(ctx.family, u);

  if (!manifest.observable_path.empty()) {
    ctx.phi = load_observable_file(manifest.observable_path);
    ctx.has_observable = true;
  }
  if (!manifest.variant.empty()) {
    if (!ctx.has_observable) bad("manifest: a variant target needs an observable file");
    if (!ctx.route.identity)
      bad("manifest: variant targets are only supported on aperiodic families; "
          "provide an explicit block-frame target instead");
    if (manifest.variant.size() != 1 || manifest.variant[0] < 'a' || manifest.variant[0] > 'e')
      bad("manifest: variant must be one of a..e");
    ctx.path = irregular_target(ctx.phi, ctx.family,
                                manifest.level,
                                static_cast<IrregularVariant>(manifest.variant[0] - 'a'),
                                manifest.eta);
  } else {
    ctx.path = load_target_file(manifest.target_path);
  }

  Word working_u = u;
  if (!ctx.route.identity) {
    // transport the target to the common-period block frame
    TargetPath block_path;
    for (const auto& v : ctx.path.vertices) {
      const PowerSystem& ps =
          v.level == 0 ? ctx.route.powers.back() : ctx.route.powers[v.level - 1];
      block_path.vertices.push_back({h_star(v.measure, ps), v.level});
    }
    ctx.path = std::move(block_path);
    working_u = ctx.route.block_u;
  }
  ctx.path.validate(ctx.working_family());
  ctx.chain = build_chain(ctx.path, manifest.eta, manifest.bands + 2, manifest.direct_mode);
  ctx.schedule = solve_schedule(ctx.working_family(), ctx.chain, working_u, manifest.eta,
                                manifest.bands, rational_of(manifest.zeta1_cap, "zeta1_cap"),
                                manifest.box_budget);
  if (!ctx.route.identity) {
    for (int k = 1; k <= manifest.bands; ++k) {
      const auto& st = ctx.chain.steps[k - 1];
      const PowerSystem& ps =
          st.level == 0 ? ctx.route.powers.back() : ctx.route.powers[st.level - 1];
      ctx.band_targets.push_back(decomposition_average(st.gamma, ps));
    }
  }
  return ctx;
}

void run_construct(const RunContext& ctx, const std::string& out_dir, int stop_after_band) {
  long long block_horizon = ctx.schedule.band_end(ctx.schedule.bands);
  long long wanted = ctx.manifest.horizon;
  if (!ctx.route.identity && wanted >= 0)
    wanted = (wanted + ctx.route.i0 + ctx.route.k - 1) / ctx.route.k;  // base -> block units
  long long horizon = wanted < 0 ? block_horizon : std::min(wanted, block_horizon);
  if (stop_after_band >= 0) horizon = std::min(horizon, ctx.schedule.band_end(stop_after_band));
  SymbolStream stream =
      generate_point(ctx.working_family(), ctx.chain, ctx.schedule, ctx.manifest.seed, horizon);
  save_archive(ctx, stream, out_dir);
}

void run_resume(const std::string& out_dir, long long horizon) {
  LoadedArchive ar = load_archive(out_dir);
  RunManifest m = ar.ctx.manifest;
  if (horizon >= 0) m.horizon = horizon;
  long long block_horizon = ar.ctx.schedule.band_end(ar.ctx.schedule.bands);
  long long wanted = m.horizon;
  if (!ar.ctx.route.identity && wanted >= 0)
    wanted = (wanted + ar.ctx.route.i0 + ar.ctx.route.k - 1) / ar.ctx.route.k;
  long long target = wanted < 0 ? block_horizon : std::min(wanted, block_horizon);
  ar.ctx.manifest = m;
  resume_point(ar.stream, ar.ctx.working_family(), ar.ctx.chain, ar.ctx.schedule, target);
  save_archive(ar.ctx, ar.stream, out_dir);
}

LoadedArchive load_archive(const std::string& out_dir) {
  auto at = [&](const char* name) { return (fs::path(out_dir) / name).string(); };
  LoadedArchive ar;
  ar.ctx = prepare_run(load_manifest_file(at("manifest.json")));
  json status = read_json(at("status.json"));
  if (ar.ctx.route.identity) {
    ar.stream.symbols = read_stream_file(at("stream.syms"));
    ar.stream.checkpoints = read_checkpoint_file(at("checkpoints.bin"));
    ar.base_symbols = ar.stream.symbols;
    ar.base_checkpoints = ar.stream.checkpoints;
  } else {
    ar.stream.symbols = read_stream_file(at("stream.block.syms"));
    ar.stream.checkpoints = read_checkpoint_file(at("checkpoints.block.bin"));
    ar.base_symbols = read_stream_file(at("stream.syms"));
    ar.base_checkpoints = read_checkpoint_file(at("checkpoints.bin"));
  }
  ar.stream.seed = status.at("seed").get<std::uint64_t>();
  ar.stream.complete_bands = status.at("complete_bands").get<int>();
  ar.stream.horizon = status.at("horizon").get<long long>();
  return ar;
}

// ------------------------------------------------------------------ audits

AuditResult audit_tracking(const LoadedArchive& ar, long long horizon, const std::string& format) {
  TrackingReport rep;
  if (ar.ctx.route.identity) {
    if (horizon < 0) horizon = static_cast<long long>(ar.stream.symbols.size());
    rep = verify_tracking(ar.stream, ar.ctx.chain, ar.ctx.schedule, horizon);
  } else {
    SymbolStream base;
    base.symbols = ar.base_symbols;
    base.checkpoints = ar.base_checkpoints;
    base.complete_bands = ar.stream.complete_bands;
    if (horizon < 0) horizon = static_cast<long long>(base.symbols.size());
    rep = verify_tracking(base, ar.ctx.chain, ar.ctx.schedule, horizon, 3, &ar.ctx.band_targets);
  }
  AuditResult out;
  out.pass = rep.pass;
  if (format == "json") {
    json j;
    j["pass"] = rep.pass;
    j["allowance"] = rep.allowance;
    j["band_max"] = rep.band_max;
    json rows = json::array();
    for (const auto& r : rep.rows)
      rows.push_back({{"checkpoint", r.M},
                      {"band", r.band},
                      {"distance", r.distance},
                      {"envelope", r.envelope},
                      {"window_ok", r.window_ok},
                      {"pass", r.distance_ok && r.window_ok}});
    j["rows"] = std::move(rows);
    out.text = j.dump(2) + "\n";
  } else {
    std::ostringstream os;
    os << "checkpoint,band,distance,envelope,window_ok,pass\n";
    for (const auto& r : rep.rows)
      os << r.M << ',' << r.band << ',' << r.distance << ',' << r.envelope << ','
         << (r.window_ok ? 1 : 0) << ',' << ((r.distance_ok && r.window_ok) ? 1 : 0) << '\n';
    out.text = os.str();
  }
  return out;
}

AuditResult audit_transitivity(const LoadedArchive& ar, int depth, long long horizon,
                               const std::string& format) {
  if (horizon < 0) horizon = static_cast<long long>(ar.stream.symbols.size());
  auto rep = verify_transitivity(ar.stream, ar.ctx.working_family(), ar.ctx.schedule, depth,
                                 horizon);
  AuditResult out;
  out.pass = rep.pass;
  if (format == "json") {
    json j;
    j["pass"] = rep.pass;
    j["skipped"] = rep.skipped;
    json rows = json::array();
    for (const auto& r : rep.rows)
      rows.push_back({{"level", r.level},
                      {"word", word_to_string(r.word)},
                      {"first_hit", r.first_hit},
                      {"scheduled_by", r.scheduled_by},
                      {"band", r.scheduled_band},
                      {"audited", r.audited},
                      {"pass", r.pass}});
    j["rows"] = std::move(rows);
    out.text = j.dump(2) + "\n";
  } else {
    std::ostringstream os;
    os << "level,word,first_hit,scheduled_by,band,audited,pass\n";
    for (const auto& r : rep.rows)
      os << r.level << ',' << word_to_string(r.word) << ',' << r.first_hit << ','
         << r.scheduled_by << ',' << r.scheduled_band << ',' << (r.audited ? 1 : 0) << ','
         << (r.pass ? 1 : 0) << '\n';
    out.text = os.str();
  }
  return out;
}

AuditResult audit_certificate(const LoadedArchive& ar, double floor_slack,
                              const std::string& format) {
  auto cert = separated_family_certificate(ar.ctx.schedule, ar.ctx.path, floor_slack,
                                           ar.ctx.manifest.seed);
  AuditResult out;
  out.pass = cert.pass;
  json j;
  j["log_count"] = cert.log_count;
  j["rate"] = cert.rate;
  j["floor"] = cert.floor;
  j["margin"] = cert.rate - cert.floor;
  j["M"] = cert.M;
  j["pairs_checked"] = cert.pairs_checked;
  j["pairs_separated"] = cert.pairs_separated;
  j["pass"] = cert.pass;
  if (format == "json") {
    out.text = j.dump(2) + "\n";
  } else {
    std::ostringstream os;
    os << "rate,floor,margin,pairs_checked,pairs_separated,pass\n"
       << cert.rate << ',' << cert.floor << ',' << (cert.rate - cert.floor) << ','
       << cert.pairs_checked << ',' << cert.pairs_separated << ',' << (cert.pass ? 1 : 0) << '\n';
    out.text = os.str();
  }
  return out;
}

AuditResult audit_birkhoff(const LoadedArchive& ar, long long horizon, const std::string& format) {
  if (!ar.ctx.has_observable)
    throw std::invalid_argument("birkhoff audit: the manifest has no observable");
  SymbolStream base;
  base.symbols = ar.base_symbols;
  base.checkpoints = ar.base_checkpoints;
  if (horizon < 0) horizon = static_cast<long long>(base.symbols.size());
  auto tr = birkhoff_trace(base, ar.ctx.phi, horizon);
  AuditResult out;
  if (format == "json") {
    json j;
    j["liminf"] = tr.liminf_est;
    j["limsup"] = tr.limsup_est;
    j["oscillation"] = tr.oscillation();
    json rows = json::array();
    for (const auto& r : tr.rows)
      rows.push_back({{"checkpoint", r.M},
                      {"average", r.average},
                      {"running_liminf", r.running_min},
                      {"running_limsup", r.running_max}});
    j["rows"] = std::move(rows);
    out.text = j.dump(2) + "\n";
  } else {
    std::ostringstream os;
    os << "checkpoint,average,running_liminf,running_limsup\n";
    for (const auto& r : tr.rows)
      os << r.M << ',' << r.average << ',' << r.running_min << ',' << r.running_max << '\n';
    out.text = os.str();
  }
  return out;
}

AuditResult audit_classify(const LoadedArchive& ar, long long horizon, double tolerance,
                           const std::string& format) {
  SymbolStream base;
  base.symbols = ar.base_symbols;
  base.checkpoints = ar.base_checkpoints;
  if (horizon < 0) horizon = static_cast<long long>(base.symbols.size());
  auto cl = classify_limit_set(base, ar.ctx.family, horizon, tolerance);
  AuditResult out;
  out.pass = cl.conclusive;
  json j;
  j["tag"] = std::string(1, cl.tag);
  j["irregular"] = cl.irregular;
  j["conclusive"] = cl.conclusive;
  j["support_applicable"] = cl.support_applicable;
  j["radius"] = cl.radius;
  auto fam = SeparatingFamily::canonical(ar.ctx.family.ambient().alphabet, 2);
  json clusters = json::array();
  for (const auto& c : cl.clusters) {
    json masses;
    for (std::size_t k = 0; k < fam.words.size() && k < c.center.size(); ++k)
      masses[word_to_string(fam.words[k])] = c.center[k];
    clusters.push_back({{"center", masses},
                        {"hits", c.hits},
                        {"level_supported", c.level_supported},
                        {"level", c.level}});
  }
  j["clusters"] = std::move(clusters);
  out.text = j.dump(2) + "\n";
  if (format == "csv") {
    std::ostringstream os;
    os << "cluster,hits,level_supported,level\n";
    for (std::size_t i = 0; i < cl.clusters.size(); ++i)
      os << i << ',' << cl.clusters[i].hits << ',' << (cl.clusters[i].level_supported ? 1 : 0)
         << ',' << cl.clusters[i].level << '\n';
    out.text = os.str();
  }
  return out;
}

}  // namespace shiftlab
