#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "adapitch/nn.hpp"

namespace adapitch {

/// FNV-1a 64-bit digest; used for checkpoint integrity and freeze checks.
uint64_t fnv1a64(const void* data, size_t len, uint64_t seed = 0xcbf29ce484222325ull);

// Serialized training state: named parameter blobs with freeze flags plus a
// JSON config snapshot. Binary layout: magic "ADPT", u32 version, u32 blob
// count, length-prefixed named blobs in sorted order, trailing u64 FNV-1a
// checksum of everything before it. Round trips are byte-exact.
struct Checkpoint {
  static constexpr uint32_t kVersion = 1;

  std::string stage;  // "t2t" | "m2m" | "stage2"
  int64_t step = 0;
  uint64_t seed = 0;
  std::string config_json;  // model dims, mel config, vocabulary, speakers

  struct Param {
    Shape shape;
    std::vector<float> values;
    bool frozen = false;
  };
  std::map<std::string, Param> params;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Copies every parameter of `ps` (with freeze flags) into the checkpoint.
void collect_params(const ParameterSet& ps, Checkpoint& ckpt);
/// Installs checkpoint parameters into `ps`, optionally forcing frozen.
void install_params(const Checkpoint& ckpt, ParameterSet& ps, bool force_frozen = false);

/// Order-insensitive digest of a parameter subtree; byte-exact freeze checks.
uint64_t params_digest(const ParameterSet& ps, const std::string& prefix);

}  // namespace adapitch
