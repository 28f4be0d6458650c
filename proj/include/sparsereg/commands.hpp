#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "sparsereg/benchmark_report.hpp"
#include "sparsereg/error.hpp"
#include "sparsereg/fusion.hpp"
#include "sparsereg/icp.hpp"
#include "sparsereg/network.hpp"
#include "sparsereg/synth.hpp"

namespace sparsereg::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kDataError = 3, kNumericFailure = 4 };

/// Exit code for a library error.
int exit_code_for(ErrorCode code);

struct OutputOptions {
  std::filesystem::path dir;
  bool force = false;  // replace an existing directory
};

struct GenerateOptions {
  OutputOptions out;
  std::uint64_t seed = 0;
  std::size_t sequences = 0;  // exactly one of sequences and pairs is set
  std::size_t pairs = 0;
  Regime regime = Regime::Standard;
  SequenceConfig frame;
  std::size_t identity_pool = 50;
};

struct TrainCommandOptions {
  std::filesystem::path data;
  OutputOptions out;
  RegressorConfig config;
  std::optional<std::filesystem::path> resume;
};

struct EvalOptions {
  std::filesystem::path data;
  OutputOptions out;
  Method method = Method::Icp;
  std::optional<std::filesystem::path> checkpoint;
  IcpConfig icp;
};

struct FuseOptions {
  std::filesystem::path sequence;
  OutputOptions out;
  std::string method = "gt";  // gt, icp or model
  std::optional<std::filesystem::path> checkpoint;
  IcpConfig icp;
  double radius = 3.0;
  double threshold = 2.0;
  int raster_resolution = 256;
  double raster_scale = 0.9;
  int augment_count = 0;
  AugmentSpec augment;
};

struct LossCheckOptions {
  std::uint64_t seed = 0;
};

// Each command writes into a temporary sibling of the output directory and
// renames it into place on success, so a failed run leaves nothing behind.
// Errors propagate as sparsereg::Error.

/// Sequences go to seq_00000, seq_00001, ...; a pair set goes to the
/// directory itself.
void run_generate(const GenerateOptions& options, std::ostream& log);

/// Writes model.ckpt, train_report.csv and train_summary.json.
void run_train(const TrainCommandOptions& options, std::ostream& log);

/// Writes pairs.csv and summary.csv and prints the table.
BenchmarkReport run_eval(const EvalOptions& options, std::ostream& log);

/// Writes fused.ply (denoised), depth.pgm/depth.json, augment_<k>.pgm and
/// fuse_report.json.
void run_fuse(const FuseOptions& options, std::ostream& log);

/// Prints one line per check; returns false when any check fails.
bool run_losscheck(const LossCheckOptions& options, std::ostream& log);

}  // namespace sparsereg::cli
