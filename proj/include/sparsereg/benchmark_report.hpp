#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "sparsereg/coordinate_map.hpp"
#include "sparsereg/synth.hpp"

namespace sparsereg {

enum class Method { Icp, Model, ModelTwice };

std::string to_string(Method method);
/// Tokens icp, model, model_twice. Throws InvalidArgument.
Method parse_method(const std::string& text);

struct PairResult {
  std::size_t index = 0;
  std::string identity;
  double theta_e = 0.0;  // degrees
  double t_e = 0.0;      // mm
  bool failed = false;   // theta_e above kFailureThresholdDeg
};

struct BenchmarkReport {
  std::string method;
  Regime regime = Regime::Standard;
  std::size_t pair_count = 0;
  double mean_theta = 0.0;
  double median_theta = 0.0;
  double mean_t = 0.0;
  double median_t = 0.0;
  std::size_t failures = 0;
  double failure_rate = 0.0;
  double wall_seconds = 0.0;  // console only
};

using Registrar = std::function<RigidTransform(const RegistrationPair&)>;

/// Runs the registrar on every pair (in parallel when asked) and scores the
/// result against the stored ground truth. Output order is pair order.
std::vector<PairResult> evaluate_pairs(const PairSet& data, const Registrar& registrar,
                                       Exec exec = Exec::Parallel);

/// Aggregates over all results; medians average the two middle values.
BenchmarkReport summarize(const std::string& method, Regime regime,
                          const std::vector<PairResult>& results, double wall_seconds = 0.0);

/// pair_index, identity, theta_e_deg, t_e_mm, failed.
void write_pair_csv(const std::filesystem::path& path, const std::vector<PairResult>& results);
/// One header row and one data row; wall time is omitted.
void write_summary_csv(const std::filesystem::path& path, const BenchmarkReport& report);
void print_report_table(std::ostream& out, const std::vector<BenchmarkReport>& reports);

}  // namespace sparsereg
