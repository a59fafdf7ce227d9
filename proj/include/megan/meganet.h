//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MEGAN_MEGANET_H_
#define MEGAN_MEGANET_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "megan/editops.h"
#include "megan/featurize.h"
#include "megan/numcore.h"
#include "megan/oracle.h"
#include "megan/params.h"

namespace megan {

// How step t > 1 combines the previous decoder output with the current graph.
enum class Recurrence : std::uint8_t {
  // H_t = dec(max(embed(x_t), pad(H_{t-1}))).
  Decoder,
  // H_t = dec(max(enc(pad(H_{t-1})), pad(H_{t-1}))).
  Literal,
};

std::string_view to_string(Recurrence r);
Recurrence parse_recurrence(std::string_view s);

struct ModelConfig {
  int atom_dim = 128;  // n_a
  int bond_dim = 128;  // n_b
  int heads = 8;  // K
  int attention_dim = 128;  // d
  int head_hidden = 1024;  // n_h
  int encoder_layers = 6;
  int decoder_layers = 2;
  int max_steps = 16;
  Direction direction = Direction::Retro;
  bool use_reaction_type = false;
  Recurrence recurrence = Recurrence::Decoder;

  // Fixed by the data.
  int atom_features = 0;
  int bond_features = 0;
  int atom_actions = 0;  // EditAtom, AddAtom and AddBenzene entries
  int bond_actions = 0;  // EditBond entries
  int reaction_types = 10;

  bool operator==(const ModelConfig &) const = default;
};

// Widths taken from the vocabulary and the feature configuration.
ModelConfig bind_data(ModelConfig cfg, const ActionVocab &vocab,
                      const FeatureConfig &features);
// Throws ConfigError naming the offending field.
void validate(const ModelConfig &cfg);

// Wide variant with a 1024-wide node state: atom_dim 1024
// (128 per head), attention, bond and head hidden widths 128.
ModelConfig wide_preset(ModelConfig cfg);

inline constexpr int kModelFormatVersion = 1;
std::string model_config_to_text(const ModelConfig &cfg,
                                 std::string_view config_hash = "");
ModelConfig model_config_from_text(std::string_view text);

// Weights and biases drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
ParamStore init_params(const ModelConfig &cfg, std::uint64_t seed);
std::int64_t count_params(const ModelConfig &cfg);

// Hidden node states of a previous step, with the row each current node takes
// (-1 for nodes added since, which get zeros).
struct PreviousHidden {
  Var hidden;
  std::vector<int> rows;
};

// Row map between consecutive states: atoms keep their index, new atoms are
// inserted before the supernode.
std::vector<int> carry_rows(const MolGraph &previous, const MolGraph &current);

struct Embedding {
  Var nodes;  // n x n_a
  Var edges;  // edges x n_b, rows follow GraphTensors::edges
  Var pairs;  // pairs x n_b, rows follow GraphTensors::pairs
};

struct StepOutput {
  Var hidden;  // H_t
  Var atom_logits;  // n x (atom_actions + 1); last column is the Stop slot
  Var bond_logits;  // pairs x bond_actions
  Var log_probs;  // 1 x layout size
};

// The network evaluated on one tape. Parameters are placed on the tape once.
class MeganNet {
public:
  MeganNet(const ModelConfig &cfg, ParamStore &params, Tape &tape);

  const ModelConfig &config() const { return cfg_; }
  Tape &tape() { return tape_; }

  Embedding embed(const GraphTensors &gt,
                  std::optional<int> reaction_class = std::nullopt);
  // One GCN-att layer of the given stack ("enc" or "dec") and depth.
  Var gcn_att_layer(std::string_view stack, int layer, Var h,
                    const Embedding &emb, const GraphTensors &gt);
  Var encode(Var h, const Embedding &emb, const GraphTensors &gt);
  Var decode(Var h, const Embedding &emb, const GraphTensors &gt);

  StepOutput forward_step(const GraphTensors &gt,
                          const PreviousHidden *previous,
                          std::optional<int> reaction_class = std::nullopt);

  Var param(const std::string &name);

private:
  Var linear(std::string_view name, Var x);

  ModelConfig cfg_;
  ParamStore &params_;
  Tape &tape_;
  std::vector<Var> bound_;
};

// Sum over the steps of -log p(ground-truth action), teacher forced.
struct SequenceLoss {
  Var nll;
  int steps = 0;
};
// Throws DataError when an action is missing from the vocabulary or cannot be
// placed in the layout.
SequenceLoss sequence_nll(MeganNet &net, const TrainingSample &sample,
                          const ActionVocab &vocab,
                          const FeatureConfig &features);

// Layout positions of the ground-truth actions of a sample, one per step.
std::vector<int> target_positions(const TrainingSample &sample,
                                  const ActionVocab &vocab);

}  // namespace megan

#endif  // MEGAN_MEGANET_H_
