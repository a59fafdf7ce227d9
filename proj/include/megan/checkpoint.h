//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MEGAN_CHECKPOINT_H_
#define MEGAN_CHECKPOINT_H_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "megan/editops.h"
#include "megan/featurize.h"
#include "megan/meganet.h"
#include "megan/params.h"
#include "megan/runtime.h"

namespace megan {

// Files of a checkpoint directory.
inline constexpr const char *kParamsFile = "params.bin";
inline constexpr const char *kBestParamsFile = "best_params.bin";
inline constexpr const char *kModelFile = "model.cfg";
inline constexpr const char *kVocabFile = "vocab.txt";
inline constexpr const char *kFeaturesFile = "features.txt";
inline constexpr const char *kTrainStateFile = "train_state.txt";
inline constexpr const char *kRunConfigFile = "run.cfg";
inline constexpr const char *kLockFile = "LOCK";

struct Bundle {
  ModelConfig model;
  ActionVocab vocab;
  FeatureConfig features;
  ParamStore params;
  std::optional<TrainState> state;
  std::string run_config;  // echo of the RunConfig
  std::string hash;
};

// Writes every file through a temporary name and a rename. `best_params`
// (params_to_bytes) is written when non-empty.
void write_bundle(const std::filesystem::path &dir, const Bundle &bundle,
                  std::string_view best_params = {});
// Reads params.bin, or best_params.bin when `best` is set and it exists.
// Throws DataError for missing or malformed files.
Bundle read_bundle(const std::filesystem::path &dir, bool best = false);
bool has_bundle(const std::filesystem::path &dir);

std::string read_file(const std::filesystem::path &path);
// Atomic replace via "<path>.tmp".
void write_file(const std::filesystem::path &path, std::string_view bytes);

// Exclusive writer lock on a directory (O_CREAT | O_EXCL on LOCK). Throws
// DataError when another writer holds it.
class DirLock {
public:
  explicit DirLock(const std::filesystem::path &dir);
  ~DirLock();
  DirLock(const DirLock &) = delete;
  DirLock &operator=(const DirLock &) = delete;

private:
  std::filesystem::path path_;
};

}  // namespace megan

#endif  // MEGAN_CHECKPOINT_H_
