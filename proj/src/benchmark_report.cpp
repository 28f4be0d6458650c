#include "sparsereg/benchmark_report.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <ostream>

#include "sparsereg/error.hpp"
#include "sparsereg/icp.hpp"

namespace sparsereg {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  return out;
}

}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::Icp: return "icp";
    case Method::Model: return "model";
    case Method::ModelTwice: return "model_twice";
  }
  return "unknown";
}

Method parse_method(const std::string& text) {
  if (text == "icp") return Method::Icp;
  if (text == "model") return Method::Model;
  if (text == "model_twice") return Method::ModelTwice;
  fail(ErrorCode::InvalidArgument, "unknown method '" + text + "'");
}

std::vector<PairResult> evaluate_pairs(const PairSet& data, const Registrar& registrar,
                                       Exec exec) {
  std::vector<PairResult> results(data.pairs.size());
  std::exception_ptr error;
  const auto n = static_cast<std::ptrdiff_t>(data.pairs.size());
#pragma omp parallel for schedule(dynamic) if (exec == Exec::Parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const RegistrationPair& pair = data.pairs[i];
      const RigidTransform pred = registrar(pair);
      PairResult& r = results[i];
      r.index = static_cast<std::size_t>(i);
      r.identity = pair.identity;
      r.theta_e = rotation_error(pair.gt.q, pred.q);
      r.t_e = translation_error(pair.gt.t, pred.t);
      r.failed = r.theta_e > kFailureThresholdDeg;
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return results;
}

BenchmarkReport summarize(const std::string& method, Regime regime,
                          const std::vector<PairResult>& results, double wall_seconds) {
  BenchmarkReport r;
  r.method = method;
  r.regime = regime;
  r.pair_count = results.size();
  r.wall_seconds = wall_seconds;
  if (results.empty()) return r;
  std::vector<double> theta, trans;
  for (const auto& p : results) {
    theta.push_back(p.theta_e);
    trans.push_back(p.t_e);
    r.mean_theta += p.theta_e;
    r.mean_t += p.t_e;
    if (p.failed) ++r.failures;
  }
  const auto n = static_cast<double>(results.size());
  r.mean_theta /= n;
  r.mean_t /= n;
  r.median_theta = median(std::move(theta));
  r.median_t = median(std::move(trans));
  r.failure_rate = static_cast<double>(r.failures) / n;
  return r;
}

void write_pair_csv(const std::filesystem::path& path, const std::vector<PairResult>& results) {
  auto out = open_csv(path);
  out << "pair_index,identity,theta_e_deg,t_e_mm,failed\n";
  char line[256];
  for (const auto& r : results) {
    std::snprintf(line, sizeof(line), "%zu,%s,%.17g,%.17g,%d\n", r.index, r.identity.c_str(),
                  r.theta_e, r.t_e, r.failed ? 1 : 0);
    out << line;
  }
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

void write_summary_csv(const std::filesystem::path& path, const BenchmarkReport& r) {
  auto out = open_csv(path);
  out << "method,regime,pairs,mean_theta_deg,median_theta_deg,mean_t_mm,median_t_mm,failures,"
         "failure_rate\n";
  char line[512];
  std::snprintf(line, sizeof(line), "%s,%s,%zu,%.17g,%.17g,%.17g,%.17g,%zu,%.17g\n",
                r.method.c_str(), to_string(r.regime).c_str(), r.pair_count, r.mean_theta,
                r.median_theta, r.mean_t, r.median_t, r.failures, r.failure_rate);
  out << line;
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

void print_report_table(std::ostream& out, const std::vector<BenchmarkReport>& reports) {
  char line[256];
  std::snprintf(line, sizeof(line), "%-12s %-10s %6s %9s %9s %8s %8s %8s %8s\n", "method",
                "regime", "pairs", "mean_th", "med_th", "mean_t", "med_t", "fail%", "time_s");
  out << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof(line), "%-12s %-10s %6zu %9.3f %9.3f %8.3f %8.3f %8.2f %8.1f\n",
                  r.method.c_str(), to_string(r.regime).c_str(), r.pair_count, r.mean_theta,
                  r.median_theta, r.mean_t, r.median_t, 100.0 * r.failure_rate, r.wall_seconds);
    out << line;
  }
}

}  // namespace sparsereg
