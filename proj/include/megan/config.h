//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MEGAN_CONFIG_H_
#define MEGAN_CONFIG_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "megan/dataset.h"
#include "megan/meganet.h"
#include "megan/runtime.h"

namespace megan {

// Everything a command needs, resolved from defaults, the config file and
// command-line overrides.
struct RunConfig {
  Direction direction = Direction::Retro;
  OrderingStrategy ordering = OrderingStrategy::BfsRandAt;
  std::uint64_t seed = 0;
  int max_steps = 16;
  int beam = 50;
  bool length_normalize = false;
  bool reaction_type_prior = false;

  std::string train_path;
  std::string valid_path;
  std::string test_path;

  bool use_chirality = true;
  bool use_bond_stereo = true;
  bool use_reactant_flag = false;
  double min_acceptance = 0.0;

  std::string model_preset = "default";  // default or wide
  ModelConfig model;
  TrainConfig train;

  std::vector<int> ks = kDefaultTopK;
};

// Direction-dependent defaults: forward uses 8 steps and beam 20.
RunConfig default_run_config(Direction direction = Direction::Retro);

// Lines "key: type = value" where type is int, float, bool or string; '#'
// starts a comment. Throws ConfigError naming the offending key or line.
void apply_config_text(RunConfig &cfg, std::string_view text);
// Sets one key from its textual value (same keys as the file, type implied).
void set_config_value(RunConfig &cfg, std::string_view key,
                      std::string_view value);
std::vector<std::string> config_keys();

// Canonical "key: type = value" listing of every key, sorted by key.
std::string config_to_text(const RunConfig &cfg);
// FNV-1a 64 of config_to_text(), as 16 hex digits.
std::string config_hash(const RunConfig &cfg);

// Checks ranges and cross-field rules; throws ConfigError.
void validate(const RunConfig &cfg);

PreprocessOptions preprocess_options(const RunConfig &cfg);
// Model settings with the preset applied (widths unbound).
ModelConfig model_config(const RunConfig &cfg);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace megan

#endif  // MEGAN_CONFIG_H_
