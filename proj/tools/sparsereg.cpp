#include <CLI11.hpp>
#include <omp.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "sparsereg/commands.hpp"

namespace cli = sparsereg::cli;
using sparsereg::ErrorCode;

namespace {

// SPARSEREG_THREADS caps the OpenMP team size.
bool apply_thread_cap() {
  const char* env = std::getenv("SPARSEREG_THREADS");
  if (!env || !*env) return true;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) {
    std::cerr << "error: SPARSEREG_THREADS must be a positive integer\n";
    return false;
  }
  omp_set_num_threads(static_cast<int>(n));
  return true;
}

void add_output(CLI::App* app, cli::OutputOptions& out) {
  app->add_option("--out", out.dir, "Output directory (created atomically)")->required();
  app->add_flag("--force", out.force, "Replace an existing output directory");
}

// Declared for --help only; expand_config does the work.
void add_config(CLI::App* app) {
  app->add_option("--config", "Flat key=value file of long option names; flags override it")
      ->type_name("FILE");
}

// CLI11 reads config files only for the top-level app, so the file given to
// a subcommand is spliced in as --key=value tokens right after the
// subcommand name. Options take their last value, so later flags win.
bool expand_config(const CLI::App& app, std::vector<std::string>& args) {
  std::size_t sub = 0;
  while (sub < args.size() && !app.get_subcommand_no_throw(args[sub])) ++sub;
  if (sub == args.size()) return true;
  for (std::size_t i = sub + 1; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      continue;
    }
    std::ifstream in(path);
    if (!in) {
      std::cerr << "error: cannot read config file " << path << "\n";
      return false;
    }
    std::vector<std::string> tokens;
    for (const CLI::ConfigItem& item : CLI::ConfigBase().from_config(in)) {
      if (item.name == "++" || item.name == "--") continue;
      if (!item.parents.empty()) {
        std::cerr << "error: config file " << path << " must be flat (no sections)\n";
        return false;
      }
      for (const std::string& value : item.inputs) tokens.push_back("--" + item.name + "=" + value);
    }
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub) + 1, tokens.begin(), tokens.end());
    return true;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse face point-cloud registration and fusion toolkit"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  cli::GenerateOptions gen;
  std::string gen_regime = "standard";
  bool no_noise = false;
  auto* generate = app.add_subcommand("generate", "Write synthetic sequences or a pair set");
  add_config(generate);
  add_output(generate, gen.out);
  generate->add_option("--seed", gen.seed, "Master seed");
  generate->add_option("--sequences", gen.sequences, "Number of six-frame sequences");
  generate->add_option("--pairs", gen.pairs, "Number of registration pairs");
  generate->add_option("--regime", gen_regime, "standard or difficult");
  generate->add_option("--dense-points", gen.frame.dense_points, "Dense scan size");
  generate->add_option("--grids", gen.frame.grids, "Sparse sampling budget per frame");
  generate->add_option("--identity-pool", gen.identity_pool, "Identities shared by a pair set");
  generate->add_flag("--no-noise", no_noise, "Skip the depth noise");

  cli::TrainCommandOptions tr;
  std::string tr_variant = "quat_l2";
  std::string tr_resume;
  auto* train = app.add_subcommand("train", "Train the pose regressor on a pair set");
  add_config(train);
  add_output(train, tr.out);
  train->add_option("--data", tr.data, "Pair set directory")->required();
  train->add_option("--seed", tr.config.seed, "Master seed");
  train->add_option("--loss-variant", tr_variant, "quat_l2, quat_l1, aa_l2 or aa_l1");
  train->add_option("--epochs", tr.config.epochs, "Training epochs");
  train->add_option("--lr", tr.config.lr, "Initial learning rate");
  train->add_option("--lr-min-fraction", tr.config.lr_min_fraction, "Final lr as a fraction");
  train->add_option("--weight-decay", tr.config.weight_decay, "Decoupled weight decay");
  train->add_option("--batch-size", tr.config.batch_size, "Mini-batch size");
  train->add_option("--resolution", tr.config.input_resolution, "Network input resolution");
  train->add_option("--fc-width", tr.config.fc_width, "Hidden fully connected width");
  train->add_option("--alpha", tr.config.loss_weights.alpha, "Rotation weight");
  train->add_option("--alpha-boosted", tr.config.loss_weights.alpha_boosted,
                    "Rotation weight for small residuals");
  train->add_option("--boost-threshold", tr.config.loss_weights.boost_threshold,
                    "Squared residual below which the boosted weight applies");
  train->add_option("--refine-fraction", tr.config.refine_fraction,
                    "Share of pairs with a refinement example");
  train->add_option("--refine-max-deg", tr.config.refine_max_deg, "Refinement residual angle");
  train->add_option("--refine-max-mm", tr.config.refine_max_mm, "Refinement residual shift");
  train->add_option("--resume", tr_resume, "Continue from this checkpoint");

  cli::EvalOptions ev;
  std::string ev_method = "icp";
  std::string ev_checkpoint;
  auto* eval = app.add_subcommand("eval", "Benchmark a method on a pair set");
  add_config(eval);
  add_output(eval, ev.out);
  eval->add_option("--data", ev.data, "Pair set directory")->required();
  eval->add_option("--method", ev_method, "icp, model or model_twice");
  eval->add_option("--checkpoint", ev_checkpoint, "Model checkpoint");
  eval->add_option("--icp-max-iterations", ev.icp.max_iterations, "ICP iteration cap");
  eval->add_option("--icp-tol", ev.icp.convergence_tol, "ICP residual change tolerance, mm");
  eval->add_option("--icp-trim", ev.icp.trim_fraction, "ICP trimmed fraction");

  cli::FuseOptions fu;
  std::string fu_checkpoint;
  auto* fuse = app.add_subcommand("fuse", "Fuse, denoise and rasterize one sequence");
  add_config(fuse);
  add_output(fuse, fu.out);
  fuse->add_option("--sequence", fu.sequence, "Sequence directory")->required();
  fuse->add_option("--method", fu.method, "gt, icp or model");
  fuse->add_option("--checkpoint", fu_checkpoint, "Model checkpoint for --method model");
  fuse->add_option("--radius", fu.radius, "Denoise radius, mm");
  fuse->add_option("--threshold", fu.threshold, "Denoise threshold, mm");
  fuse->add_option("--raster-resolution", fu.raster_resolution, "Depth-map resolution");
  fuse->add_option("--raster-scale", fu.raster_scale, "Depth-map mm per pixel");
  fuse->add_option("--augment-count", fu.augment_count, "Augmented depth-maps to write");
  fuse->add_option("--augment-seed", fu.augment.seed, "Augmentation seed");

  cli::LossCheckOptions lc;
  auto* losscheck = app.add_subcommand("losscheck", "Loss identity and gradient checks");
  losscheck->add_option("--seed", lc.seed, "Seed for the random points");

  std::vector<std::string> args(argv + 1, argv + argc);
  if (!expand_config(app, args)) return cli::kUsage;
  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kOk : cli::kUsage;
  }
  if (!apply_thread_cap()) return cli::kUsage;

  try {
    if (generate->parsed()) {
      gen.regime = sparsereg::parse_regime(gen_regime);
      gen.frame.noise_enabled = !no_noise;
      cli::run_generate(gen, std::cout);
    } else if (train->parsed()) {
      tr.config.loss_variant = sparsereg::parse_loss_variant(tr_variant);
      if (!tr_resume.empty()) tr.resume = tr_resume;
      cli::run_train(tr, std::cout);
    } else if (eval->parsed()) {
      ev.method = sparsereg::parse_method(ev_method);
      if (!ev_checkpoint.empty()) ev.checkpoint = ev_checkpoint;
      cli::run_eval(ev, std::cout);
    } else if (fuse->parsed()) {
      if (!fu_checkpoint.empty()) fu.checkpoint = fu_checkpoint;
      cli::run_fuse(fu, std::cout);
    } else if (losscheck->parsed()) {
      return cli::run_losscheck(lc, std::cout) ? cli::kOk : cli::kNumericFailure;
    }
  } catch (const sparsereg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kDataError;
  }
  return cli::kOk;
}
