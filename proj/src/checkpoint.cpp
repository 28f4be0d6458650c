#include "sparsereg/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>

#include "sparsereg/error.hpp"

namespace sparsereg {

namespace {

constexpr const char* kFormat = "sparsereg-checkpoint";
constexpr int kVersion = 1;

std::array<char, 8> to_le(double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  std::array<char, 8> out{};
  for (int i = 0; i < 8; ++i) out[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  return out;
}

double from_le(const char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
  }
  return std::bit_cast<double>(bits);
}

[[noreturn]] void corrupt(const std::filesystem::path& path, const std::string& what) {
  fail(ErrorCode::CorruptDataset, "checkpoint " + path.string() + ": " + what);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const NetworkShape shape = network_shape(checkpoint.config);
  if (checkpoint.params.values.size() != shape.parameter_count) {
    fail(ErrorCode::ShapeMismatch, "parameter count does not match the config");
  }
  const nlohmann::json header{{"format", kFormat},
                              {"version", kVersion},
                              {"config", checkpoint.config},
                              {"seed", checkpoint.config.seed},
                              {"epoch", checkpoint.epoch},
                              {"parameter_count", shape.parameter_count}};
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << header.dump() << '\n';
  for (Eigen::Index i = 0; i < checkpoint.params.values.size(); ++i) {
    const auto bytes = to_le(checkpoint.params.values[i]);
    out.write(bytes.data(), bytes.size());
  }
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    fail(ErrorCode::MissingCheckpoint, "no checkpoint at " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) corrupt(path, "missing header");

  Checkpoint cp;
  Eigen::Index count = 0;
  try {
    const auto header = nlohmann::json::parse(line);
    if (header.at("format").get<std::string>() != kFormat) corrupt(path, "unknown format");
    if (header.at("version").get<int>() != kVersion) corrupt(path, "unsupported version");
    cp.config = header.at("config").get<RegressorConfig>();
    cp.epoch = header.at("epoch").get<int>();
    count = header.at("parameter_count").get<Eigen::Index>();
  } catch (const nlohmann::json::exception& e) {
    corrupt(path, std::string("bad header: ") + e.what());
  }
  cp.config.validate();

  const std::string payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const NetworkShape shape = network_shape(cp.config);
  if (count != shape.parameter_count) corrupt(path, "parameter count disagrees with config");
  if (payload.size() != static_cast<std::size_t>(count) * 8) corrupt(path, "truncated payload");

  cp.params.slices = shape.slices;
  cp.params.values.resize(count);
  for (Eigen::Index i = 0; i < count; ++i) cp.params.values[i] = from_le(payload.data() + 8 * i);
  if (!cp.params.values.allFinite()) corrupt(path, "non-finite parameters");
  return cp;
}

}  // namespace sparsereg
