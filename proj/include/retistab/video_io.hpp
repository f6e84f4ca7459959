#pragma once

#include <filesystem>

#include "retistab/image.hpp"

namespace retistab {

/// Loads a frame sequence either from a directory holding `meta.json` plus
/// zero-padded `%06d.png` frames, or from a single uncompressed Y4M file
/// (C420/C444, converted to RGB with BT.601).
VideoSequence load_sequence(const std::filesystem::path& path, int threads = 1);

/// Writes `meta.json` plus `%06d.png` frames such that load_sequence inverts
/// it bit-exactly.
void save_sequence(const VideoSequence& seq, const std::filesystem::path& dir,
                   int threads = 1);

}  // namespace retistab
