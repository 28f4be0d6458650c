#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sparsereg/benchmark_report.hpp"
#include "sparsereg/commands.hpp"
#include "sparsereg/dataset_io.hpp"
#include "sparsereg/error.hpp"
#include "sparsereg/selfcheck.hpp"

using namespace sparsereg;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sparsereg_bench_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream s(line);
    std::string cell;
    while (std::getline(s, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::Io;
}

std::vector<PairResult> fake_results(const std::vector<double>& theta) {
  std::vector<PairResult> out;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    out.push_back({i, "id", theta[i], 0.5 * theta[i], theta[i] > kFailureThresholdDeg});
  }
  return out;
}

}  // namespace

TEST_SUITE("bench") {
  TEST_CASE("summaries") {
    const BenchmarkReport odd = summarize("x", Regime::Standard, fake_results({3, 1, 25, 2, 40}));
    CHECK(odd.mean_theta == doctest::Approx(14.2));
    CHECK(odd.median_theta == 3.0);
    CHECK(odd.failures == 2);
    CHECK(odd.failure_rate == 0.4);
    const BenchmarkReport even = summarize("x", Regime::Difficult, fake_results({4, 1, 3, 2}));
    CHECK(even.median_theta == 2.5);
    CHECK(even.median_t == 1.25);
    CHECK(even.failure_rate == 0.0);
  }

  TEST_CASE("method tokens") {
    for (auto m : {Method::Icp, Method::Model, Method::ModelTwice}) {
      CHECK(parse_method(to_string(m)) == m);
    }
    CHECK(code_of([] { parse_method("svm"); }) == ErrorCode::InvalidArgument);
  }

  TEST_CASE("exit codes") {
    CHECK(cli::exit_code_for(ErrorCode::InvalidArgument) == 2);
    CHECK(cli::exit_code_for(ErrorCode::ConfigMismatch) == 2);
    CHECK(cli::exit_code_for(ErrorCode::CorruptDataset) == 3);
    CHECK(cli::exit_code_for(ErrorCode::MissingCheckpoint) == 3);
    CHECK(cli::exit_code_for(ErrorCode::ZeroQuaternion) == 4);
    CHECK(cli::exit_code_for(ErrorCode::NumericFailure) == 4);
  }

  TEST_CASE("generate, eval and recompute from the per-pair CSV") {
    const fs::path root = scratch_dir("eval");
    std::ostringstream log;
    cli::GenerateOptions gen;
    gen.out.dir = root / "pairs";
    gen.seed = 5;
    gen.pairs = 12;
    gen.regime = Regime::Difficult;
    gen.identity_pool = 4;
    cli::run_generate(gen, log);
    const PairSet set = read_pair_set(root / "pairs");
    REQUIRE(set.pairs.size() == 12);
    CHECK(set.regime == Regime::Difficult);
    for (const auto& p : set.pairs) {
      CHECK(pose_in_regime(p.source_pose, Regime::Difficult));
      CHECK(pose_in_regime(p.target_pose, Regime::Difficult));
    }

    cli::EvalOptions ev;
    ev.data = root / "pairs";
    ev.out.dir = root / "eval";
    const BenchmarkReport report = cli::run_eval(ev, log);

    const auto rows = read_csv(root / "eval" / "pairs.csv");
    REQUIRE(rows.size() == 13);
    std::vector<double> theta, trans;
    std::size_t failures = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      theta.push_back(std::stod(rows[i][2]));
      trans.push_back(std::stod(rows[i][3]));
      failures += rows[i][4] == "1";
    }
    double mean_theta = 0, mean_t = 0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      mean_theta += theta[i] / theta.size();
      mean_t += trans[i] / trans.size();
    }
    std::sort(theta.begin(), theta.end());
    CHECK(std::abs(mean_theta - report.mean_theta) < 1e-9);
    CHECK(std::abs(mean_t - report.mean_t) < 1e-9);
    CHECK(std::abs(0.5 * (theta[5] + theta[6]) - report.median_theta) < 1e-9);
    CHECK(report.failures == failures);
    CHECK(report.failure_rate == static_cast<double>(failures) / 12.0);

    const auto summary = read_csv(root / "eval" / "summary.csv");
    REQUIRE(summary.size() == 2);
    CHECK(summary[1][0] == "icp");
    CHECK(std::stod(summary[1][8]) == report.failure_rate);

    CHECK(code_of([&] {
            cli::EvalOptions m = ev;
            m.method = Method::Model;
            m.out.dir = root / "eval_model";
            cli::run_eval(m, log);
          }) == ErrorCode::MissingCheckpoint);
    CHECK(!fs::exists(root / "eval_model"));
    fs::remove_all(root);
  }

  TEST_CASE("generate is byte-reproducible and refuses bad targets") {
    const fs::path root = scratch_dir("gen");
    std::ostringstream log;
    cli::GenerateOptions gen;
    gen.seed = 7;
    gen.sequences = 3;
    gen.out.dir = root / "a";
    cli::run_generate(gen, log);
    gen.out.dir = root / "b";
    cli::run_generate(gen, log);
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
      if (!e.is_regular_file()) continue;
      ++files;
      CHECK(slurp(e.path()) == slurp(root / "b" / fs::relative(e.path(), root / "a")));
    }
    CHECK(files == 3 * 8);

    CHECK(code_of([&] { cli::run_generate(gen, log); }) == ErrorCode::InvalidArgument);
    gen.out.force = true;
    cli::run_generate(gen, log);

    gen.out = {root / "missing" / "deeper", false};
    CHECK(code_of([&] { cli::run_generate(gen, log); }) == ErrorCode::InvalidArgument);
    CHECK(!fs::exists(root / "missing"));

    gen.out.dir = root / "c";
    gen.pairs = 4;  // both set
    CHECK(code_of([&] { cli::run_generate(gen, log); }) == ErrorCode::InvalidArgument);
    CHECK(!fs::exists(root / "c"));
    fs::remove_all(root);
  }

  TEST_CASE("fuse with ground truth on noiseless frames") {
    const fs::path root = scratch_dir("fuse");
    std::ostringstream log;
    cli::GenerateOptions gen;
    gen.seed = 9;
    gen.sequences = 1;
    gen.frame.noise_enabled = false;
    gen.out.dir = root / "seqs";
    cli::run_generate(gen, log);

    cli::FuseOptions fo;
    fo.sequence = root / "seqs" / "seq_00000";
    fo.out.dir = root / "fused";
    fo.augment_count = 2;
    cli::run_fuse(fo, log);
    const auto report = nlohmann::json::parse(slurp(root / "fused" / "fuse_report.json"));
    CHECK(report["surface_residual_fused"].get<double>() < 1e-6);
    std::size_t total = 0;
    for (const auto& n : report["frame_points"]) total += n.get<std::size_t>();
    CHECK(report["points"].get<std::size_t>() == total);
    CHECK(report.contains("denoised"));
    CHECK(fs::exists(root / "fused" / "fused.ply"));
    CHECK(fs::exists(root / "fused" / "augment_1.pgm"));

    fo.method = "bogus";
    fo.out.dir = root / "fused2";
    CHECK(code_of([&] { cli::run_fuse(fo, log); }) == ErrorCode::InvalidArgument);
    fs::remove_all(root);
  }

  TEST_CASE("train writes its artifacts and refuses a mismatched resume") {
    const fs::path root = scratch_dir("train");
    std::ostringstream log;
    cli::GenerateOptions gen;
    gen.seed = 11;
    gen.pairs = 20;
    gen.identity_pool = 5;
    gen.out.dir = root / "pairs";
    cli::run_generate(gen, log);

    cli::TrainCommandOptions tr;
    tr.data = root / "pairs";
    tr.out.dir = root / "run";
    tr.config = tiny_network_config();
    tr.config.epochs = 1;
    tr.config.batch_size = 8;
    tr.config.loss_variant = LossVariant::AxisAngleL1;
    cli::run_train(tr, log);
    CHECK(fs::exists(root / "run" / "model.ckpt"));
    const auto rows = read_csv(root / "run" / "train_report.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[1][1] == "aa_l1");

    cli::TrainCommandOptions again = tr;
    again.out.dir = root / "run2";
    again.resume = root / "run" / "model.ckpt";
    again.config.epochs = 2;
    cli::run_train(again, log);
    CHECK(read_csv(root / "run2" / "train_report.csv").size() == 2);

    again.out.dir = root / "run3";
    again.config.lr = 0.5;
    CHECK(code_of([&] { cli::run_train(again, log); }) == ErrorCode::ConfigMismatch);
    CHECK(!fs::exists(root / "run3"));
    fs::remove_all(root);
  }

  TEST_CASE("losscheck passes") {
    std::ostringstream log;
    CHECK(cli::run_losscheck({1}, log));
    CHECK(log.str().find("FAIL") == std::string::npos);
  }
}
