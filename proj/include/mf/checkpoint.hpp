#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "mf/corpus.hpp"
#include "mf/params.hpp"

namespace mf {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointHeader {
  std::string kind;                            // "hred" or "focus"
  std::map<std::string, std::string> config;   // resolved config echo
  Vocabulary vocab;
  std::uint64_t seed = 0;                      // master RNG seed for the run
};

struct Checkpoint {
  CheckpointHeader header;
  ParameterSet params;
};

// Binary layout: magic "MFCK", format version (u32), header byte length (u32),
// UTF-8 JSON header, then one blob per parameter in lexicographic name order:
// name length (u32) + name + rank (u32) + dims (u32 each) + values as
// little-endian binary64. All integers little-endian.
void save_checkpoint(const std::string& path, const ParameterSet& params,
                     const CheckpointHeader& header);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mf
