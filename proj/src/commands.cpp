#include "sparsereg/commands.hpp"

#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <ostream>
#include <vector>

#include <json.hpp>
#include <unistd.h>

#include "sparsereg/checkpoint.hpp"
#include "sparsereg/cloud_io.hpp"
#include "sparsereg/dataset_io.hpp"
#include "sparsereg/regressor.hpp"
#include "sparsereg/selfcheck.hpp"

namespace sparsereg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Temporary sibling directory renamed onto the target by commit(); removed
// on destruction otherwise.
class StagedDir {
 public:
  explicit StagedDir(const OutputOptions& out) : target_(out.dir), force_(out.force) {
    if (target_.empty()) fail(ErrorCode::InvalidArgument, "no output directory given");
    const fs::path parent = fs::absolute(target_).parent_path();
    if (!fs::is_directory(parent)) {
      fail(ErrorCode::InvalidArgument, "output parent directory " + parent.string() +
                                           " does not exist");
    }
    if (fs::exists(target_) && !force_) {
      fail(ErrorCode::InvalidArgument,
           target_.string() + " already exists (use --force to replace it)");
    }
    staging_ = target_;
    staging_ += ".tmp-" + std::to_string(::getpid());
    fs::remove_all(staging_);
    fs::create_directory(staging_);
  }

  StagedDir(const StagedDir&) = delete;
  StagedDir& operator=(const StagedDir&) = delete;

  ~StagedDir() {
    if (committed_) return;
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }

  const fs::path& path() const { return staging_; }

  void commit() {
    if (force_) fs::remove_all(target_);
    fs::rename(staging_, target_);
    committed_ = true;
  }

 private:
  fs::path target_;
  fs::path staging_;
  bool force_ = false;
  bool committed_ = false;
};

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(2) << "\n";
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

std::string sequence_dir_name(std::size_t k) {
  char name[32];
  std::snprintf(name, sizeof(name), "seq_%05zu", k);
  return name;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Regressor load_model(const std::optional<fs::path>& checkpoint) {
  if (!checkpoint) fail(ErrorCode::MissingCheckpoint, "this method needs --checkpoint");
  Checkpoint cp = load_checkpoint(*checkpoint);
  return {cp.config, std::move(cp.params)};
}

// Everything that shapes the trained function must match for a resume;
// epochs may grow.
bool resumable(RegressorConfig a, const RegressorConfig& b) {
  a.epochs = b.epochs;
  return a == b;
}

}  // namespace

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::BadFactor:
    case ErrorCode::ConfigMismatch:
      return kUsage;
    case ErrorCode::NumericFailure:
    case ErrorCode::ZeroQuaternion:
    case ErrorCode::DegenerateGeometry:
      return kNumericFailure;
    default:
      return kDataError;
  }
}

void run_generate(const GenerateOptions& options, std::ostream& log) {
  const bool sequences = options.sequences > 0;
  if (sequences == (options.pairs > 0)) {
    fail(ErrorCode::InvalidArgument, "give exactly one of --sequences and --pairs");
  }
  StagedDir staged(options.out);
  if (sequences) {
    const auto n = static_cast<std::ptrdiff_t>(options.sequences);
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
      try {
        const std::uint64_t identity_seed = derive_seed(options.seed, 2 * static_cast<std::uint64_t>(k));
        Rng rng(derive_seed(options.seed, 2 * static_cast<std::uint64_t>(k) + 1));
        const FrameSequence seq =
            generate_sequence(generate_identity(identity_seed), rng, options.frame);
        write_sequence(staged.path() / sequence_dir_name(static_cast<std::size_t>(k)), seq,
                       identity_seed);
      } catch (...) {
#pragma omp critical
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
    log << "generated " << options.sequences << " sequences\n";
  } else {
    PairSetConfig config;
    config.frame = options.frame;
    config.identity_pool = options.identity_pool;
    const PairSet set = generate_pair_set(options.pairs, options.regime, options.seed, config);
    write_pair_set(staged.path(), set, options.seed);
    log << "generated " << options.pairs << " " << to_string(options.regime) << " pairs\n";
  }
  staged.commit();
}

void run_train(const TrainCommandOptions& options, std::ostream& log) {
  options.config.validate();
  const PairSet data = read_pair_set(options.data);
  StagedDir staged(options.out);

  TrainOptions train_options;
  std::optional<Checkpoint> resume;
  if (options.resume) {
    resume = load_checkpoint(*options.resume);
    if (!resumable(resume->config, options.config)) {
      fail(ErrorCode::ConfigMismatch, "checkpoint " + options.resume->string() +
                                          " was trained with a different config");
    }
    if (resume->epoch > options.config.epochs) {
      fail(ErrorCode::ConfigMismatch, "checkpoint is already past the requested epochs");
    }
    train_options.initial = &resume->params;
    train_options.start_epoch = resume->epoch;
  }
  train_options.on_epoch = [&log](const EpochStats& s) {
    char line[160];
    std::snprintf(line, sizeof(line), "epoch %3d  loss %10.4f  val theta %7.3f deg  t %7.3f mm  %.1fs\n",
                  s.epoch, s.mean_loss, s.val_mean_theta, s.val_mean_t, s.seconds);
    log << line << std::flush;
  };

  const TrainResult result = train(options.config, data, train_options);
  save_checkpoint(staged.path() / "model.ckpt",
                  {result.model.config, result.model.params, options.config.epochs});
  write_report_csv(staged.path() / "train_report.csv", result.report);
  write_json_file(staged.path() / "train_summary.json",
                  {{"loss_variant", to_string(result.report.loss_variant)},
                   {"train_examples", result.report.train_examples},
                   {"validation_pairs", result.report.validation_pairs},
                   {"validation_identities", result.report.validation_identities},
                   {"start_epoch", train_options.start_epoch},
                   {"epochs", options.config.epochs}});
  staged.commit();
}

BenchmarkReport run_eval(const EvalOptions& options, std::ostream& log) {
  const PairSet data = read_pair_set(options.data);
  if (data.pairs.empty()) fail(ErrorCode::EmptyDataset, "no pairs in " + options.data.string());
  std::optional<Regressor> model;
  if (options.method != Method::Icp) model = load_model(options.checkpoint);
  StagedDir staged(options.out);

  Registrar registrar;
  std::string label = to_string(options.method);
  switch (options.method) {
    case Method::Icp:
      registrar = [&](const RegistrationPair& p) {
        return icp_register(p.source, p.target, options.icp).transform;
      };
      break;
    case Method::Model:
      registrar = [&](const RegistrationPair& p) { return predict(*model, p.source, p.target); };
      break;
    case Method::ModelTwice:
      registrar = [&](const RegistrationPair& p) {
        return register_twice(*model, p.source, p.target).combined;
      };
      break;
  }
  if (model) label += ":" + std::string(to_string(model->config.loss_variant));

  const auto start = std::chrono::steady_clock::now();
  const std::vector<PairResult> results = evaluate_pairs(data, registrar);
  const BenchmarkReport report = summarize(label, data.regime, results, seconds_since(start));
  write_pair_csv(staged.path() / "pairs.csv", results);
  write_summary_csv(staged.path() / "summary.csv", report);
  staged.commit();
  print_report_table(log, {report});
  return report;
}

void run_fuse(const FuseOptions& options, std::ostream& log) {
  const FrameSequence seq = read_sequence(options.sequence);
  options.augment.validate();

  std::vector<RigidTransform> transforms;
  if (options.method == "gt") {
    transforms = ground_truth_transforms(seq);
  } else if (options.method == "icp" || options.method == "model") {
    std::optional<Regressor> model;
    if (options.method == "model") model = load_model(options.checkpoint);
    const PointCloud& reference = seq.frames[seq.reference_index];
    for (int k = 0; k < kSequenceLength; ++k) {
      if (k == seq.reference_index) continue;
      transforms.push_back(model ? register_twice(*model, seq.frames[k], reference).combined
                                 : icp_register(seq.frames[k], reference, options.icp).transform);
    }
  } else {
    fail(ErrorCode::InvalidArgument, "unknown fusion method '" + options.method + "'");
  }
  StagedDir staged(options.out);

  const FusedCloud fused = fuse_sequence(seq, transforms);
  DenoiseStats stats;
  const FusedCloud clean = denoise(fused, options.radius, options.threshold, Exec::Parallel, &stats);
  write_ply(staged.path() / "fused.ply", clean.cloud);

  RasterConfig raster;
  raster.resolution = options.raster_resolution;
  raster.scale = options.raster_scale;
  write_depth_map(staged.path() / "depth",
                  to_depth_map(rasterize_coordinate_map(clean.cloud, raster)));
  for (int k = 0; k < options.augment_count; ++k) {
    Rng rng(derive_seed(options.augment.seed, static_cast<std::uint64_t>(k)));
    const PointCloud jittered = jitter_pose(clean.cloud, options.augment, rng);
    const AugmentedDepth aug = augment_depth(
        to_depth_map(rasterize_coordinate_map(jittered, raster)), options.augment, rng);
    write_depth_map(staged.path() / ("augment_" + std::to_string(k)), aug.map);
  }

  json frame_counts = json::array();
  for (const auto& f : seq.frames) frame_counts.push_back(f.size());
  json report{{"method", options.method},
              {"identity", seq.identity},
              {"points", clean.cloud.size()},
              {"frame_points", frame_counts},
              {"denoised", stats.changed},
              {"isolated", stats.isolated},
              {"augmented_maps", options.augment_count}};
  // Sequences written by generate record the identity seed, so the known
  // surface is available for a residual.
  std::ifstream meta_in(options.sequence / "meta.json");
  if (meta_in) {
    const json meta = json::parse(meta_in, nullptr, false);
    if (!meta.is_discarded() && meta.contains("seed")) {
      const SyntheticIdentity identity = generate_identity(meta["seed"].get<std::uint64_t>());
      if (identity.label() == seq.identity) {
        report["surface_residual_fused"] = surface_residual(fused.cloud, identity);
        report["surface_residual_denoised"] = surface_residual(clean.cloud, identity);
      }
    }
  }
  write_json_file(staged.path() / "fuse_report.json", report);
  staged.commit();
  log << "fused " << clean.cloud.size() << " points, " << stats.changed << " denoised\n";
}

bool run_losscheck(const LossCheckOptions& options, std::ostream& log) {
  bool ok = true;
  for (const CheckLine& line : run_loss_checks(options.seed)) {
    char text[160];
    std::snprintf(text, sizeof(text), "%-4s %-26s worst %.3e  tol %.0e\n",
                  line.pass ? "ok" : "FAIL", line.name.c_str(), line.value, line.tolerance);
    log << text;
    ok = ok && line.pass;
  }
  return ok;
}

}  // namespace sparsereg::cli
