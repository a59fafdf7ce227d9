//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MEGAN_TOOLS_COMMANDS_H_
#define MEGAN_TOOLS_COMMANDS_H_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace megan::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kData = 2;
inline constexpr int kNumeric = 3;

// Options shared by every command; unset values leave the config alone.
struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> direction;
  std::optional<std::string> ordering;
  std::optional<int> beam;
  std::optional<int> max_steps;
  bool reaction_type_prior = false;
  std::vector<std::string> overrides;  // key=value
};

struct PreprocessArgs {
  std::string input;
  std::string train, valid, test;
  std::string out;
};

struct TrainArgs {
  std::string data;
  std::string checkpoint;
  bool fresh = false;
  std::optional<int> max_epochs;
  // Pauses after this many optimizer steps (state saved, resumable).
  std::optional<std::uint64_t> stop_after_steps;
};

struct PredictArgs {
  std::string checkpoint;
  std::string input;
  std::string reactions;
  std::string output;
  bool last = false;  // use the latest instead of the best parameters
};

struct EvaluateArgs {
  std::string predictions;
  std::string truth;
  std::string output;
  std::string ks;
};

int cmd_preprocess(const CommonOptions &common, const PreprocessArgs &args,
                   std::ostream &log);
int cmd_train(const CommonOptions &common, const TrainArgs &args,
              std::ostream &log);
int cmd_predict(const CommonOptions &common, const PredictArgs &args,
                std::ostream &log);
int cmd_evaluate(const CommonOptions &common, const EvaluateArgs &args,
                 std::ostream &log);

// Parses argv and runs a command; maps errors to exit codes.
int run(int argc, char **argv, std::ostream &out, std::ostream &err);

}  // namespace megan::cli

#endif  // MEGAN_TOOLS_COMMANDS_H_
