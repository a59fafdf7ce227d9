//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MEGAN_DATASET_H_
#define MEGAN_DATASET_H_

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "megan/featurize.h"
#include "megan/oracle.h"

namespace megan {

struct ReactionRecord {
  std::string id;
  std::optional<int> reaction_class;  // 1..10
  std::string rxn;  // "reactants>reagents>product", atom mapped
  std::string split;  // train, valid or test
};

// Reads a delimited file with a header row (comma, or tab when the header has
// one). Columns: "id", "class" (optional), the reaction (a column named
// "rxn"/"reaction"/"rxn_smiles" or any name containing '>'), and "split"
// (optional; `default_split` otherwise). Throws DataError on a missing file
// or header; malformed rows are kept and fail later with their own reason.
std::vector<ReactionRecord> read_reactions(const std::string &path,
                                           std::string_view default_split);
std::vector<ReactionRecord> parse_reactions(std::string_view text,
                                            std::string_view default_split,
                                            std::string_view origin = "input");

// Splits one delimited line, honouring double quotes.
std::vector<std::string> split_fields(std::string_view line, char delimiter);

struct Rejection {
  std::string id;
  std::string split;
  std::string reason;  // error kind, e.g. "SyntaxError"
  std::string message;
};

struct PreprocessOptions {
  Direction direction = Direction::Retro;
  OrderingPolicy ordering;
  int max_steps = 16;
  FitOptions features;
  // Replays every sequence and rejects it unless it rebuilds the target.
  bool verify_replay = true;
};

struct PreprocessReport {
  std::map<std::string, int> accepted;  // per split
  std::map<std::string, int> rejected;
  std::map<std::string, int> reasons;
  std::vector<Rejection> rejections;
  // Kind of the first action of accepted sequences.
  std::map<std::string, int> first_action;
  std::map<int, int> sequence_lengths;
  int benzene_fallbacks = 0;
  int dropped_molecules = 0;
  int cleared_maps = 0;

  int total_accepted() const;
  int total_rejected() const;
  double acceptance() const;
};

struct PreprocessOutput {
  std::map<std::string, std::vector<TrainingSample>> samples;
  ActionVocab vocab;
  FeatureConfig features;
  PreprocessReport report;
};

// Generates the action sequence of every record; failures are collected, not
// thrown. Vocabulary and features are fitted on the train and valid splits.
PreprocessOutput preprocess(const std::vector<ReactionRecord> &records,
                            const PreprocessOptions &options);

// One accepted sample, or the error that rejected it.
TrainingSample prepare_sample(const ReactionRecord &record,
                              const PreprocessOptions &options,
                              OracleStats *stats = nullptr,
                              ReactionPrepStats *prep = nullptr);

std::string report_to_text(const PreprocessReport &report,
                           const ActionVocab &vocab,
                           const FeatureConfig &features,
                           std::string_view config_hash = "");

// Record stream: a header line, then one tab-separated sample per line.
inline constexpr int kSampleFormatVersion = 1;
std::string samples_to_text(const std::vector<TrainingSample> &samples,
                            std::string_view config_hash = "");
// Throws DataError naming the offending line.
std::vector<TrainingSample> samples_from_text(std::string_view text);

// Exact textual encoding of a graph (atom order preserved).
std::string graph_to_text(const MolGraph &g);
MolGraph graph_from_text(std::string_view atoms, std::string_view bonds);

}  // namespace megan

#endif  // MEGAN_DATASET_H_
