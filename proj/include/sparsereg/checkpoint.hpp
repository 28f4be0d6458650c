#pragma once

#include <filesystem>

#include "sparsereg/network.hpp"

namespace sparsereg {

struct Checkpoint {
  RegressorConfig config;
  RegressorParams params;
  int epoch = 0;
};

/// One line of JSON (format, version, config, seed, epoch, parameter_count)
/// terminated by '\n', then the flat parameters as little-endian doubles.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);

/// Throws MissingCheckpoint when the file is absent and CorruptDataset when
/// the header or payload does not parse.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sparsereg
