#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shiftlab/constructor.hpp"
#include "shiftlab/irregular.hpp"

namespace shiftlab {

// Everything a run needs, as read from a manifest file. Relative paths are
// resolved against the manifest's own directory.
struct RunManifest {
  std::string family_path;
  std::string target_path;      // explicit target-path file, or
  std::string observable_path;  // observable + variant build the target
  std::string variant;          // "a".."e" (with observable_path)
  int level = 1;                // carrying level for variant targets
  std::string u = "0";          // defining cylinder, digits over the alphabet
  double eta = 0.3;
  int bands = 3;
  long long horizon = -1;  // -1: to the end of the last band
  std::uint64_t seed = 1;
  bool direct_mode = true;
  std::string zeta1_cap = "1/10";
  long box_budget = 30000;
};

// ---- JSON file codecs (throw std::invalid_argument with a description) ----
ShiftSystem load_system_file(const std::string& path);
NestedFamily load_family_file(const std::string& path);
Measure load_measure_file(const std::string& path);
TargetPath load_target_file(const std::string& path);
Observable load_observable_file(const std::string& path);
RunManifest load_manifest_file(const std::string& path);
// skeleton files for `define`; kind in {system, family, measure, target,
// observable, manifest}
std::string template_json(const std::string& kind);

// ---- packed binary artifacts ----------------------------------------------
// stream: "SYMS" magic, u32 version, u32 alphabet, u64 length, then 2 bits
// per symbol for alphabets <= 4, else one byte per symbol
void write_stream_file(const std::string& path, const Word& symbols, int alphabet);
Word read_stream_file(const std::string& path, int* alphabet = nullptr);
// checkpoint index: "CKPT" magic, u32 version, u64 count, records of
// (u64 M, u64 offset, u32 band, u32 slot, u32 type, u32 len, content bytes)
void write_checkpoint_file(const std::string& path, const std::vector<Checkpoint>& cps);
std::vector<Checkpoint> read_checkpoint_file(const std::string& path);

// ---- run pipeline ----------------------------------------------------------
struct RunContext {
  RunManifest manifest;
  NestedFamily family;  // as loaded (base frame)
  MixingRoute route;    // identity unless the family has a common period > 1
  TargetPath path;      // route mode: transported to the block frame
  bool has_observable = false;
  Observable phi;
  MeasureChain chain;
  Schedule schedule;                 // route mode: in block units
  std::vector<Measure> band_targets; // base-frame tracking targets (route mode)

  const NestedFamily& working_family() const {
    return route.identity ? family : route.block_family;
  }
};
// Parses all inputs, builds the target, solves the schedule.
RunContext prepare_run(const RunManifest& manifest);

// Writes manifest.json, schedule.json, stream.syms, checkpoints.bin and
// status.json into out_dir (route mode adds stream.block.syms and
// checkpoints.block.bin). stop_after_band truncates generation for
// interruption drills. All writes are write-temp-then-rename.
void run_construct(const RunContext& ctx, const std::string& out_dir,
                   int stop_after_band = -1);
void run_resume(const std::string& out_dir, long long horizon = -1);

struct LoadedArchive {
  RunContext ctx;
  SymbolStream stream;  // the frame the construction ran in (block frame on routes)
  Word base_symbols;    // base frame (== stream.symbols when the route is identity)
  std::vector<Checkpoint> base_checkpoints;
};
LoadedArchive load_archive(const std::string& out_dir);

struct AuditResult {
  std::string text;
  bool pass = true;
};
// format: "csv" or "json"
AuditResult audit_tracking(const LoadedArchive& ar, long long horizon, const std::string& format);
AuditResult audit_transitivity(const LoadedArchive& ar, int depth, long long horizon,
                               const std::string& format);
AuditResult audit_certificate(const LoadedArchive& ar, double floor_slack,
                              const std::string& format);
AuditResult audit_birkhoff(const LoadedArchive& ar, long long horizon, const std::string& format);
AuditResult audit_classify(const LoadedArchive& ar, long long horizon, double tolerance,
                           const std::string& format);

// base-frame checkpoint translation for periodic routes
std::vector<Checkpoint> translate_checkpoints(const std::vector<Checkpoint>& block_cps,
                                              const MixingRoute& route);

}  // namespace shiftlab
