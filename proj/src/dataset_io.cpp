#include "sparsereg/dataset_io.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <string>

#include "sparsereg/cloud_io.hpp"
#include "sparsereg/error.hpp"

namespace sparsereg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << j.dump(2) << "\n";
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::CorruptDataset, "missing " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::CorruptDataset, path.string() + ": " + e.what());
  }
}

std::string pair_file(std::size_t i, const char* role) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "clouds/pair_%05zu_%s.ply", i, role);
  return buf;
}

}  // namespace

void write_sequence(const fs::path& dir, const FrameSequence& seq, std::uint64_t seed) {
  fs::create_directories(dir);
  json transforms = json::array();
  for (int k = 0; k < kSequenceLength; ++k) {
    write_ply(dir / ("frame_" + std::to_string(k) + ".ply"), seq.frames[k]);
    transforms.push_back(seq.poses[k]);
  }
  write_json(dir / "gt.json", {{"transforms", transforms}, {"reference_index", seq.reference_index}});
  write_json(dir / "meta.json", {{"seed", seed}, {"identity", seq.identity}});
}

FrameSequence read_sequence(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorCode::CorruptDataset, "no sequence at " + dir.string());
  FrameSequence seq;
  try {
    const json gt = read_json(dir / "gt.json");
    const json meta = read_json(dir / "meta.json");
    const auto& transforms = gt.at("transforms");
    if (transforms.size() != kSequenceLength) {
      fail(ErrorCode::CorruptDataset, dir.string() + ": gt.json needs 6 transforms");
    }
    seq.reference_index = gt.at("reference_index").get<int>();
    if (seq.reference_index < 0 || seq.reference_index >= kSequenceLength) {
      fail(ErrorCode::CorruptDataset, dir.string() + ": reference_index out of range");
    }
    seq.identity = meta.at("identity").get<std::string>();
    for (int k = 0; k < kSequenceLength; ++k) {
      seq.poses[k] = transforms[k].get<RigidTransform>();
      seq.frames[k] = read_ply(dir / ("frame_" + std::to_string(k) + ".ply"));
      seq.frames[k].frame_index = k;
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::CorruptDataset, dir.string() + ": " + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) fail(ErrorCode::CorruptDataset, e.what());
    throw;
  }
  return seq;
}

void write_pair_set(const fs::path& dir, const PairSet& set, std::uint64_t seed) {
  fs::create_directories(dir / "clouds");
  std::ofstream lines(dir / "pairs.jsonl", std::ios::binary);
  if (!lines) fail(ErrorCode::Io, "cannot write " + (dir / "pairs.jsonl").string());
  for (std::size_t i = 0; i < set.pairs.size(); ++i) {
    const auto& p = set.pairs[i];
    const std::string src = pair_file(i, "source");
    const std::string tgt = pair_file(i, "target");
    write_ply(dir / src, p.source);
    write_ply(dir / tgt, p.target);
    const json j = {{"source", src},
                    {"target", tgt},
                    {"gt", p.gt},
                    {"identity", p.identity},
                    {"source_pose", p.source_pose},
                    {"target_pose", p.target_pose}};
    lines << j.dump() << "\n";
  }
  write_json(dir / "meta.json",
             {{"seed", seed}, {"regime", to_string(set.regime)}, {"count", set.pairs.size()}});
}

PairSet read_pair_set(const fs::path& dir) {
  std::ifstream lines(dir / "pairs.jsonl", std::ios::binary);
  if (!lines) fail(ErrorCode::CorruptDataset, "no pairs.jsonl in " + dir.string());
  PairSet set;
  try {
    const json meta = read_json(dir / "meta.json");
    set.regime = parse_regime(meta.at("regime").get<std::string>());
    std::string line;
    while (std::getline(lines, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      RegistrationPair p;
      p.source = read_ply(dir / j.at("source").get<std::string>());
      p.target = read_ply(dir / j.at("target").get<std::string>());
      p.gt = j.at("gt").get<RigidTransform>();
      p.identity = j.at("identity").get<std::string>();
      if (j.contains("source_pose")) p.source_pose = j.at("source_pose").get<RigidTransform>();
      if (j.contains("target_pose")) p.target_pose = j.at("target_pose").get<RigidTransform>();
      set.pairs.push_back(std::move(p));
    }
    if (meta.at("count").get<std::size_t>() != set.pairs.size()) {
      fail(ErrorCode::CorruptDataset, dir.string() + ": pair count disagrees with meta.json");
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::CorruptDataset, dir.string() + ": " + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io || e.code() == ErrorCode::InvalidArgument) {
      fail(ErrorCode::CorruptDataset, e.what());
    }
    throw;
  }
  if (set.pairs.empty()) fail(ErrorCode::CorruptDataset, dir.string() + ": no pairs");
  return set;
}

}  // namespace sparsereg
