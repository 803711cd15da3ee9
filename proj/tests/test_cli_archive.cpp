#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "shiftlab/archive.hpp"

using namespace shiftlab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / "shiftlab_cli_tests" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  REQUIRE(out.good());
  out << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

const char* kBinaryFamily =
    R"({"name":"binary","levels":[{"label":"full-2","alphabet_size":2,"transitions":[[1,1],[1,1]]}]})";
const char* kGoldenInFull =
    R"({"name":"golden-in-full","levels":[
        {"label":"golden","alphabet_size":2,"transitions":[[1,1],[1,0]]},
        {"label":"full-2","alphabet_size":2,"transitions":[[1,1],[1,1]]}]})";
const char* kTeeterFamily =
    R"({"name":"teeter","levels":[{"label":"teeter","alphabet_size":3,
        "transitions":[[0,0,1],[0,0,1],[1,1,0]]}]})";
const char* kFairTarget =
    R"({"vertices":[{"measure":{"type":"bernoulli","p":["1/2","1/2"]},"level":1}]})";

// cheap two-band run on the full 2-shift; solves and generates in well under
// a second
std::string cheap_manifest(const fs::path& dir, std::uint64_t seed) {
  write_file(dir / "family.json", kBinaryFamily);
  write_file(dir / "target.json", kFairTarget);
  json m = {{"family", "family.json"}, {"target", "target.json"}, {"u", "0"},
            {"eta", 0.4},              {"bands", 2},              {"seed", seed},
            {"zeta1_cap", "1/8"}};
  write_file(dir / "manifest.json", m.dump());
  return (dir / "manifest.json").string();
}

int run_cli(const std::string& args, const fs::path& dir, std::string* out = nullptr,
            std::string* err = nullptr) {
  const char* exe = std::getenv("SHIFTLAB_CLI_PATH");
#ifdef SHIFTLAB_CLI_PATH
  if (!exe) exe = SHIFTLAB_CLI_PATH;
#endif
  REQUIRE(exe != nullptr);
  fs::path out_p = dir / "cli_out.txt";
  fs::path err_p = dir / "cli_err.txt";
  std::string cmd = std::string(exe) + " " + args + " >" + out_p.string() + " 2>" + err_p.string();
  int rc = std::system(cmd.c_str());
  if (out) *out = read_file(out_p);
  if (err) *err = read_file(err_p);
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("input codecs round-trip the template files") {
  auto dir = fresh_dir("codecs");
  for (const char* kind : {"system", "family", "measure", "target", "observable", "manifest"}) {
    write_file(dir / (std::string(kind) + ".json"), template_json(kind));
  }
  auto sys = load_system_file((dir / "system.json").string());
  CHECK(sys.alphabet == 2);
  CHECK(sys.A[1][1] == 0);  // golden-mean template forbids 11

  auto fam = load_family_file((dir / "family.json").string());
  CHECK(fam.level_count() == 2);
  CHECK(fam.ambient().alphabet == 2);
  CHECK(fam.levels[0].A[1][1] == 0);

  auto mu = load_measure_file((dir / "measure.json").string());
  CHECK(mu.mass(Word{0}) == doctest::Approx(0.5));

  auto tp = load_target_file((dir / "target.json").string());
  CHECK(tp.vertices.size() == 1);
  CHECK(tp.vertices[0].level == 2);

  auto phi = load_observable_file((dir / "observable.json").string());
  CHECK(phi.window == 1);
  CHECK(phi.table == std::vector<double>{0.0, 1.0});

  // the manifest template names files that happen to exist here
  write_file(dir / "manifest.json", template_json("manifest"));
  auto man = load_manifest_file((dir / "manifest.json").string());
  CHECK(man.bands == 3);
  CHECK(man.seed == 1);
  CHECK(fs::path(man.family_path).is_absolute());

  CHECK_THROWS_AS(template_json("nonsense"), std::invalid_argument);
}

TEST_CASE("codecs accept rational strings and reject malformed input") {
  auto dir = fresh_dir("codec_errors");

  write_file(dir / "markov.json",
             R"({"type":"markov","pi":["1/3","2/3"],"P":[["1/2","1/2"],["3/4","1/4"]]})");
  auto mu = load_measure_file((dir / "markov.json").string());
  CHECK(mu.mass(Word{0}) == doctest::Approx(1.0 / 3));
  CHECK(mu.mass(Word{1, 0}) == doctest::Approx(2.0 / 3 * 3.0 / 4));

  // non-stochastic row names the row index
  write_file(dir / "bad_markov.json",
             R"({"type":"markov","pi":[0.5,0.5],"P":[[0.5,0.5],[0.9,0.6]]})");
  CHECK_THROWS_WITH_AS(load_measure_file((dir / "bad_markov.json").string()),
                       doctest::Contains("row 1"), std::invalid_argument);

  // reversed nesting is named
  write_file(dir / "bad_family.json",
             R"({"name":"rev","levels":[
                 {"alphabet_size":2,"transitions":[[1,1],[1,1]]},
                 {"alphabet_size":2,"transitions":[[1,1],[1,0]]}]})");
  CHECK_THROWS_WITH_AS(load_family_file((dir / "bad_family.json").string()),
                       doctest::Contains("nesting"), std::invalid_argument);

  write_file(dir / "bad_rational.json", R"({"type":"bernoulli","p":["1/2","one half"]})");
  CHECK_THROWS_AS(load_measure_file((dir / "bad_rational.json").string()), std::invalid_argument);

  write_file(dir / "not_json.json", "{ nope");
  CHECK_THROWS_AS(load_system_file((dir / "not_json.json").string()), std::invalid_argument);
}

TEST_CASE("stream and checkpoint files round-trip exactly") {
  auto dir = fresh_dir("binary_io");
  std::mt19937_64 rng(11);

  for (int alphabet : {2, 4, 6}) {
    Word w;
    for (int i = 0; i < 1001; ++i) w.push_back(static_cast<Symbol>(rng() % alphabet));
    auto p = (dir / ("s" + std::to_string(alphabet) + ".syms")).string();
    write_stream_file(p, w, alphabet);
    int a_back = 0;
    CHECK(read_stream_file(p, &a_back) == w);
    CHECK(a_back == alphabet);
    // packed files for small alphabets use 2 bits per symbol
    if (alphabet <= 4) CHECK(fs::file_size(p) == 20 + (w.size() + 3) / 4);
  }

  std::vector<Checkpoint> cps;
  for (int i = 0; i < 57; ++i) {
    Checkpoint cp;
    cp.M = 100 * i + 7;
    cp.offset = 100 * i;
    cp.band = i % 3;
    cp.slot = i;
    cp.type = static_cast<Checkpoint::Type>(i % 4);
    for (int k = 0; k < i % 9; ++k) cp.content.push_back(static_cast<Symbol>(rng() % 4));
    cps.push_back(cp);
  }
  auto cp_path = (dir / "c.bin").string();
  write_checkpoint_file(cp_path, cps);
  auto back = read_checkpoint_file(cp_path);
  REQUIRE(back.size() == cps.size());
  for (std::size_t i = 0; i < cps.size(); ++i) {
    CHECK(back[i].M == cps[i].M);
    CHECK(back[i].offset == cps[i].offset);
    CHECK(back[i].band == cps[i].band);
    CHECK(back[i].slot == cps[i].slot);
    CHECK(back[i].type == cps[i].type);
    CHECK(back[i].content == cps[i].content);
  }

  CHECK_THROWS_AS(read_stream_file(cp_path), std::invalid_argument);
  CHECK_THROWS_AS(read_checkpoint_file((dir / "s2.syms").string()), std::invalid_argument);
}

TEST_CASE("construct, reload and audit an archive through the library API") {
  auto dir = fresh_dir("construct");
  auto manifest = cheap_manifest(dir, 7);
  RunContext ctx = prepare_run(load_manifest_file(manifest));
  auto out = (dir / "run").string();
  run_construct(ctx, out);

  LoadedArchive ar = load_archive(out);
  CHECK(ar.stream.complete_bands == 2);
  CHECK(static_cast<long long>(ar.stream.symbols.size()) == ctx.schedule.band_end(2));
  CHECK(ar.base_symbols == ar.stream.symbols);

  auto tracking = audit_tracking(ar, -1, "csv");
  CHECK(tracking.pass);
  CHECK(tracking.text.substr(0, 10) == "checkpoint");
  auto transitivity = audit_transitivity(ar, 4, -1, "csv");
  CHECK(transitivity.pass);
  auto cert = audit_certificate(ar, 0.15, "json");
  CHECK(cert.pass);
  auto cj = json::parse(cert.text);
  CHECK(cj.at("pairs_separated") == cj.at("pairs_checked"));
  CHECK(cj.at("rate").get<double>() > cj.at("floor").get<double>());
  auto cls = audit_classify(ar, -1, 0.05, "json");
  auto clj = json::parse(cls.text);
  CHECK(clj.at("clusters").size() == 1);
  // the single level of this family is its own ambient system, so the limit
  // measure is classified as ambient-supported
  CHECK(clj.at("tag") == "e");

  // a birkhoff audit needs an observable in the manifest
  CHECK_THROWS_AS(audit_birkhoff(ar, -1, "csv"), std::invalid_argument);
}

TEST_CASE("interrupted construction resumes to byte-identical artifacts") {
  auto dir = fresh_dir("resume");
  auto manifest = cheap_manifest(dir, 21);
  RunContext ctx = prepare_run(load_manifest_file(manifest));

  auto full = (dir / "full").string();
  run_construct(ctx, full);
  auto part = (dir / "part").string();
  run_construct(ctx, part, /*stop_after_band=*/1);

  auto status = json::parse(read_file(fs::path(part) / "status.json"));
  CHECK(status.at("complete_bands") == 1);
  CHECK(status.at("status") == "resumable");

  run_resume(part);
  CHECK(read_file(fs::path(part) / "stream.syms") == read_file(fs::path(full) / "stream.syms"));
  CHECK(read_file(fs::path(part) / "checkpoints.bin") ==
        read_file(fs::path(full) / "checkpoints.bin"));
  auto status2 = json::parse(read_file(fs::path(part) / "status.json"));
  CHECK(status2.at("status") == "complete");
}

TEST_CASE("variant manifests build an oscillating target from an observable") {
  auto dir = fresh_dir("variant");
  write_file(dir / "family.json", kBinaryFamily);
  write_file(dir / "phi.json", R"({"alphabet_size":2,"window":1,"table":[0.0,1.0]})");
  json m = {{"family", "family.json"}, {"observable", "phi.json"}, {"variant", "a"},
            {"level", 1},              {"u", "0"},                 {"eta", 0.2},
            {"bands", 2},              {"seed", 3},                {"zeta1_cap", "1/8"}};
  write_file(dir / "manifest.json", m.dump());

  RunContext ctx = prepare_run(load_manifest_file((dir / "manifest.json").string()));
  REQUIRE(ctx.has_observable);
  REQUIRE(ctx.path.vertices.size() >= 2);
  CHECK(spread(ctx.phi, ctx.path.vertices.front().measure) == doctest::Approx(0.2).epsilon(0.02));
  CHECK(spread(ctx.phi, ctx.path.vertices.back().measure) == doctest::Approx(0.8).epsilon(0.02));

  auto out = (dir / "run").string();
  run_construct(ctx, out);
  LoadedArchive ar = load_archive(out);
  auto bk = audit_birkhoff(ar, -1, "csv");
  CHECK(bk.text.substr(0, 50) == "checkpoint,average,running_liminf,running_limsup\n4");
}

TEST_CASE("periodic families archive both frames and audit in the base frame") {
  auto dir = fresh_dir("route");
  write_file(dir / "family.json", kTeeterFamily);
  // invariant measure of the period-2 teeter chain
  write_file(dir / "target.json",
             R"({"vertices":[{"measure":{"type":"parry","system":{"alphabet_size":3,
                 "transitions":[[0,0,1],[0,0,1],[1,1,0]]}},"level":1}]})");
  json m = {{"family", "family.json"}, {"target", "target.json"}, {"u", "2"},
            {"eta", 0.4},              {"bands", 2},              {"seed", 5},
            {"zeta1_cap", "1/8"}};
  write_file(dir / "manifest.json", m.dump());

  RunContext ctx = prepare_run(load_manifest_file((dir / "manifest.json").string()));
  REQUIRE_FALSE(ctx.route.identity);
  CHECK(ctx.route.k == 2);
  REQUIRE(static_cast<int>(ctx.band_targets.size()) == 2);

  auto out = (dir / "run").string();
  run_construct(ctx, out);
  CHECK(fs::exists(fs::path(out) / "stream.block.syms"));
  CHECK(fs::exists(fs::path(out) / "stream.syms"));

  LoadedArchive ar = load_archive(out);
  // base stream decodes the block stream: twice as long minus the class shift
  CHECK(static_cast<long long>(ar.base_symbols.size()) ==
        ctx.route.base_index(static_cast<long long>(ar.stream.symbols.size())));
  // every base symbol is admissible in the teeter system
  const auto& A = ctx.family.levels[0].A;
  for (std::size_t i = 0; i + 1 < ar.base_symbols.size(); ++i)
    REQUIRE(A[ar.base_symbols[i]][ar.base_symbols[i + 1]] == 1);
  CHECK(ar.base_symbols[0] == 2);  // the cylinder word survives decoding

  REQUIRE_FALSE(ar.base_checkpoints.empty());
  CHECK(ar.base_checkpoints[0].offset == 0);
  for (std::size_t i = 0; i < ar.base_checkpoints.size(); ++i)
    CHECK(ar.base_checkpoints[i].M == ctx.route.base_index(ar.stream.checkpoints[i].M));

  auto tracking = audit_tracking(ar, -1, "csv");
  CHECK(tracking.pass);
}

TEST_CASE("cli: define, validate and entropy") {
  auto dir = fresh_dir("cli_basic");
  std::string out, err;

  CHECK(run_cli("define family --out " + (dir / "family.json").string(), dir) == 0);
  CHECK(run_cli("validate " + (dir / "family.json").string(), dir, &out) == 0);
  CHECK(out.find("2 level(s)") != std::string::npos);

  CHECK(run_cli("define nonsense", dir, &out, &err) == 2);
  CHECK(err.find("nonsense") != std::string::npos);

  write_file(dir / "bad.json",
             R"({"name":"rev","levels":[
                 {"alphabet_size":2,"transitions":[[1,1],[1,1]]},
                 {"alphabet_size":2,"transitions":[[1,1],[1,0]]}]})");
  CHECK(run_cli("validate " + (dir / "bad.json").string(), dir, &out, &err) == 2);
  CHECK(err.find("nesting") != std::string::npos);
  CHECK(run_cli("validate " + (dir / "missing.json").string(), dir) == 2);

  CHECK(run_cli("entropy " + (dir / "family.json").string() + " --n 16", dir, &out) == 0);
  CHECK(out.find("level 1: count(16) = 2584") != std::string::npos);  // Fibonacci F(18)
  CHECK(out.find("ambient: count(16) = 65536") != std::string::npos);
}

TEST_CASE("cli: construct, audit, resume and tamper detection") {
  auto dir = fresh_dir("cli_run");
  auto manifest = cheap_manifest(dir, 13);
  auto run = (dir / "run").string();
  std::string out, err;

  CHECK(run_cli("construct " + manifest + " --out-dir " + run, dir) == 0);
  CHECK(run_cli("audit " + run + " --save", dir, &out, &err) == 0);
  CHECK(err.find("tracking: pass") != std::string::npos);
  CHECK(err.find("certificate: pass") != std::string::npos);
  CHECK(fs::exists(fs::path(run) / "audit_tracking.csv"));

  CHECK(run_cli("audit " + run + " --which tracking --format json", dir, &out) == 0);
  auto j = json::parse(out);
  CHECK(j.at("pass") == true);

  // interruption drill through the CLI
  auto run2 = (dir / "run2").string();
  CHECK(run_cli("construct " + manifest + " --out-dir " + run2 + " --stop-after-band 1", dir) ==
        0);
  CHECK(run_cli("resume " + run2, dir) == 0);
  CHECK(read_file(fs::path(run) / "stream.syms") == read_file(fs::path(run2) / "stream.syms"));

  // different seed diverges
  auto run3 = (dir / "run3").string();
  CHECK(run_cli("construct " + manifest + " --out-dir " + run3 + " --seed 99", dir) == 0);
  CHECK(read_file(fs::path(run) / "stream.syms") != read_file(fs::path(run3) / "stream.syms"));

  // flip symbols inside band 2 of the stored stream: the audit must fail
  {
    auto p = (fs::path(run2) / "stream.syms").string();
    std::string bytes = read_file(p);
    // XOR with 0b01010101 flips each packed binary symbol while keeping the
    // stream inside the alphabet
    for (int i = 0; i < 8; ++i) bytes[20 + 15000 + i] ^= 0x55;
    std::ofstream outf(p, std::ios::binary);
    outf << bytes;
  }
  CHECK(run_cli("audit " + run2 + " --which tracking", dir, &out, &err) == 1);
  CHECK(err.find("tracking: FAIL") != std::string::npos);

  CHECK(run_cli("audit " + (dir / "nowhere").string(), dir) == 2);
}
