#pragma once

#include <cstdint>
#include <filesystem>

#include "dekg/data.hpp"
#include "dekg/models.hpp"
#include "dekg/training.hpp"

namespace dekg {

struct VocabHashes {
  std::uint64_t entities = 0;
  std::uint64_t relations = 0;
  std::uint64_t timestamps = 0;

  bool operator==(const VocabHashes&) const = default;
};

/// FNV-1a over the names (and timestamp strings) in id order.
VocabHashes vocab_hashes(const Vocabulary& vocab);

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  TrainConfig config;
  VocabHashes hashes;
  int best_epoch = 0;
  double best_val_mrr = 0.0;  // NaN when no validation ran
  ModelParams params;
};

/// "DEKGCKPT" | u32 version | u64 header length | JSON header |
/// per table: u64 count, count little-endian f64 values.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

/// Throws Checkpoint on a malformed file, or when `expected` is given and
/// its hashes differ from the stored ones.
Checkpoint load_checkpoint(const std::filesystem::path& path, const Vocabulary* expected = nullptr);

}  // namespace dekg
