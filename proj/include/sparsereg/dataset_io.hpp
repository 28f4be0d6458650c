#pragma once

#include <cstdint>
#include <filesystem>

#include "sparsereg/synth.hpp"

namespace sparsereg {

// Sequence directory: frame_0.ply .. frame_5.ply, gt.json
// {"transforms": [6 x {"t","q"}], "reference_index": r} and meta.json
// {"seed", "identity"}. Transforms map the standard pose onto each frame.
void write_sequence(const std::filesystem::path& dir, const FrameSequence& seq,
                    std::uint64_t seed);
FrameSequence read_sequence(const std::filesystem::path& dir);

// Pair set directory: pairs.jsonl, one object per line with "source" and
// "target" paths relative to the directory, "gt", "identity", and the two
// endpoint poses; clouds/ holds the PLY files; meta.json records seed,
// regime and count.
void write_pair_set(const std::filesystem::path& dir, const PairSet& set, std::uint64_t seed);
PairSet read_pair_set(const std::filesystem::path& dir);

}  // namespace sparsereg
