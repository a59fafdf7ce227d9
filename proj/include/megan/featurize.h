//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MEGAN_FEATURIZE_H_
#define MEGAN_FEATURIZE_H_

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "megan/molgraph.h"

namespace megan {

struct TrainingSample;

// Value lists of every categorical feature. Each list becomes one one-hot
// block; values missing from a list encode as an all-zero block.
struct FeatureConfig {
  // Atom blocks, in this order.
  std::vector<int> is_supernode { 0, 1 };
  std::vector<int> atomic_numbers;
  std::vector<int> formal_charges;
  std::vector<int> chiral_tags;  // ChiralTag values
  std::vector<int> explicit_h_counts;
  std::vector<int> is_aromatic;
  std::vector<int> is_edited { 0, 1 };
  // Forward "separated" variant: reactant (vs reagent) flag.
  std::vector<int> in_reactant;

  // Bond blocks.
  std::vector<int> bond_types;  // BondType values
  std::vector<int> bond_stereo;  // BondStereo values
  std::vector<int> bond_edited { 0, 1 };

  // Classes of the optional reaction-type prior (0 when unused).
  int num_reaction_types = 0;

  int atom_width() const;
  int bond_width() const;

  bool operator==(const FeatureConfig &) const = default;
};

struct FitOptions {
  bool use_chirality = true;
  bool use_bond_stereo = true;
  bool use_reactant_flag = false;
  int num_reaction_types = 0;
};

// Collects feature values from every state graph of every sample (the steps
// of the replayed action sequences included).
FeatureConfig fit_config(const std::vector<TrainingSample> &samples,
                         const FitOptions &options = {});
// Same, from plain graphs (each is given a supernode if it lacks one).
FeatureConfig fit_config_graphs(const std::vector<MolGraph> &graphs,
                                const FitOptions &options = {});

inline constexpr int kFeatureFormatVersion = 1;
std::string feature_config_to_text(const FeatureConfig &cfg,
                                   std::string_view config_hash = "");
// Throws DataError.
FeatureConfig feature_config_from_text(std::string_view text);

// One-hot tensors of a graph with supernode. Edges are the directed pairs
// (i, j) with j in N(i), which holds i itself (Self), its bonded atoms, and
// the supernode links; they are sorted by (i, j) so that the edges of node i
// form the contiguous segment [segment_begin[i], segment_begin[i + 1]).
struct GraphTensors {
  int num_nodes = 0;
  int num_atoms = 0;
  int atom_width = 0;
  int bond_width = 0;

  std::vector<double> atom_features;  // num_nodes x atom_width
  std::vector<std::pair<int, int>> edges;
  std::vector<double> edge_features;  // edges x bond_width
  std::vector<int> segment_begin;  // num_nodes + 1
  // Atom pairs i < j (supernode excluded) in lexicographic order, with their
  // bond features (all zero when not bonded).
  std::vector<std::pair<int, int>> pairs;
  std::vector<double> pair_features;  // pairs x bond_width

  std::vector<int> edge_sources() const;
  std::vector<int> edge_targets() const;
  // Entry (i, j) of the dense n x n x bond_width tensor.
  std::vector<double> bond_feature(int i, int j) const;
};

GraphTensors featurize(const MolGraph &g, const FeatureConfig &cfg);

}  // namespace megan

#endif  // MEGAN_FEATURIZE_H_
