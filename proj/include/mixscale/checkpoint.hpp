#pragma once

#include "mixscale/sampler.hpp"

#include <filesystem>
#include <iosfwd>

namespace mixscale {

inline constexpr int kCheckpointVersion = 1;

/// Structured-text dump of a ChainState. Reals are written as hexadecimal
/// floating point so a save/load round trip is bit-exact, engine state
/// included.
void write_checkpoint(std::ostream& out, const ChainState& state);
ChainState read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const ChainState& state);
ChainState load_checkpoint(const std::filesystem::path& path);

}  // namespace mixscale
