//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "megan/featurize.h"

#include <random>

#include <gtest/gtest.h>

#include "megan/error.h"
#include "megan/oracle.h"
#include "megan/smiles.h"
#include "test_util.h"

namespace megan {
namespace {

std::vector<std::vector<int>> atom_blocks(const FeatureConfig &c) {
  return { c.is_supernode,      c.atomic_numbers, c.formal_charges,
           c.chiral_tags,       c.explicit_h_counts, c.is_aromatic,
           c.is_edited,         c.in_reactant };
}

std::vector<std::vector<int>> bond_blocks(const FeatureConfig &c) {
  return { c.bond_types, c.bond_stereo, c.bond_edited };
}

std::vector<int> atom_values(const AtomNode &a) {
  return { a.is_supernode,
           a.atomic_number,
           a.formal_charge,
           static_cast<int>(a.chiral_tag),
           a.explicit_h_count,
           a.is_aromatic,
           a.is_edited,
           a.in_reactant };
}

// Decodes one one-hot row; -1000 marks an all-zero block.
std::vector<int> decode(const double *row,
                        const std::vector<std::vector<int>> &blocks) {
  std::vector<int> out;
  int off = 0;
  for (const auto &b: blocks) {
    int value = -1000, ones = 0;
    for (std::size_t k = 0; k < b.size(); ++k)
      if (row[off + k] == 1.0) {
        value = b[k];
        ++ones;
      }
      else
        EXPECT_EQ(row[off + k], 0.0);
    EXPECT_LE(ones, 1);
    out.push_back(value);
    off += static_cast<int>(b.size());
  }
  return out;
}

FeatureConfig corpus_config() {
  std::vector<TrainingSample> samples;
  for (const ReactionRecord &rec: test::smoke_split("train")) {
    Reaction r = parse_reaction(rec.rxn, Direction::Retro);
    r.id = rec.id;
    samples.push_back(generate_sequence(r, {}, 16));
  }
  return fit_config(samples);
}

TEST(FitConfig, OnlyMethane) {
  const FeatureConfig c = fit_config_graphs({ parse_smiles("C"), parse_smiles("C") });
  EXPECT_EQ(c.atomic_numbers, std::vector<int> { 6 });
  EXPECT_EQ(c.formal_charges, std::vector<int> { 0 });
  EXPECT_EQ(c.is_supernode, (std::vector<int> { 0, 1 }));
  // Supernode and Self are always present.
  EXPECT_EQ(c.bond_types,
            (std::vector<int> { static_cast<int>(BondType::Supernode),
                                static_cast<int>(BondType::Self) }));
}

TEST(FitConfig, PaperTableWidths) {
  FeatureConfig c;
  c.atomic_numbers = { 5, 6, 7, 8, 9, 12, 14, 15, 16, 17, 29, 30, 34, 35, 50, 53 };
  c.formal_charges = { -1, 0, 1 };
  c.chiral_tags = { 0, 1, 2 };
  c.explicit_h_counts = { 0, 1, 2, 4 };
  c.is_aromatic = { 0, 1 };
  c.bond_types = { 0, 1, 2, 3, 4, 5 };
  c.bond_stereo = { 0, 1, 2 };
  EXPECT_EQ(c.atom_width(), 32);
  EXPECT_EQ(c.bond_width(), 11);
}

TEST(FitConfig, OptionalBlocks) {
  const std::vector<MolGraph> g = { parse_smiles("C/C=C/[C@H](N)O") };
  const FeatureConfig full = fit_config_graphs(g);
  EXPECT_EQ(full.chiral_tags.size(), 2u);
  EXPECT_EQ(full.bond_stereo.size(), 2u);
  EXPECT_TRUE(full.in_reactant.empty());
  FitOptions o;
  o.use_chirality = false;
  o.use_bond_stereo = false;
  o.use_reactant_flag = true;
  o.num_reaction_types = 10;
  const FeatureConfig reduced = fit_config_graphs(g, o);
  EXPECT_TRUE(reduced.chiral_tags.empty());
  EXPECT_TRUE(reduced.bond_stereo.empty());
  EXPECT_EQ(reduced.in_reactant, (std::vector<int> { 0, 1 }));
  EXPECT_EQ(reduced.num_reaction_types, 10);
  EXPECT_EQ(reduced.atom_width(), full.atom_width() - 2 + 2);
}

TEST(FitConfig, IncludesReplayedStates) {
  // Edited flags and intermediate values only appear in replayed states.
  const FeatureConfig c = corpus_config();
  EXPECT_EQ(c.is_edited, (std::vector<int> { 0, 1 }));
  EXPECT_TRUE(std::is_sorted(c.atomic_numbers.begin(), c.atomic_numbers.end()));
  EXPECT_TRUE(std::binary_search(c.atomic_numbers.begin(),
                                 c.atomic_numbers.end(), 6));
}

TEST(FitConfig, TextRoundTrip) {
  const FeatureConfig c = corpus_config();
  EXPECT_EQ(feature_config_from_text(feature_config_to_text(c, "h")), c);
  EXPECT_THROW(feature_config_from_text("megan-features\t9\t-\n"), DataError);
  EXPECT_THROW(feature_config_from_text("junk"), DataError);
}

TEST(Featurize, BlocksAndSpecialRows) {
  const FeatureConfig c = corpus_config();
  for (const char *s: { "CC(=O)Oc1ccccc1", "N[C@@H](C)C(=O)O", "C/C=C/Cl" }) {
    const MolGraph g = add_supernode(normalize_hydrogens(parse_smiles(s)));
    const GraphTensors t = featurize(g, c);
    ASSERT_EQ(t.num_nodes, g.size());
    ASSERT_EQ(t.num_atoms, g.num_atoms());
    ASSERT_EQ(t.atom_width, c.atom_width());
    for (int i = 0; i < t.num_nodes; ++i) {
      const double *row = &t.atom_features[i * t.atom_width];
      double sum = 0.0;
      for (int k = 0; k < t.atom_width; ++k)
        sum += row[k];
      const std::vector<int> v = decode(row, atom_blocks(c));
      if (i == g.supernode()) {
        EXPECT_EQ(sum, 1.0);
        EXPECT_EQ(v[0], 1);
      }
      else {
        const std::vector<std::vector<int>> blocks = atom_blocks(c);
        const std::vector<int> raw = atom_values(g.atom(i));
        for (std::size_t b = 0; b < blocks.size(); ++b) {
          const bool known = std::find(blocks[b].begin(), blocks[b].end(),
                                       raw[b]) != blocks[b].end();
          EXPECT_EQ(v[b], known ? raw[b] : -1000) << s << " atom " << i;
        }
      }
    }
    // Edges: segments per node, Self and Supernode rows carry only the type.
    ASSERT_EQ(t.segment_begin.size(), static_cast<std::size_t>(t.num_nodes + 1));
    for (int i = 0; i < t.num_nodes; ++i)
      for (int e = t.segment_begin[i]; e < t.segment_begin[i + 1]; ++e) {
        const auto [a, b] = t.edges[e];
        EXPECT_EQ(a, i);
        const std::vector<int> v =
            decode(&t.edge_features[e * t.bond_width], bond_blocks(c));
        if (a == b)
          EXPECT_EQ(v, (std::vector<int> { static_cast<int>(BondType::Self),
                                           -1000, -1000 }));
        else if (a == g.supernode() || b == g.supernode())
          EXPECT_EQ(v, (std::vector<int> { static_cast<int>(BondType::Supernode),
                                           -1000, -1000 }));
        else {
          const Bond *bond = g.bond(a, b);
          ASSERT_NE(bond, nullptr);
          EXPECT_EQ(v, (std::vector<int> { static_cast<int>(bond->type),
                                           static_cast<int>(bond->stereo), 0 }));
        }
      }
    EXPECT_EQ(t.edges.size(),
              static_cast<std::size_t>(t.num_nodes + 2 * g.num_bonds()));
    // Pairs: all i < j atoms, zero when not bonded.
    ASSERT_EQ(t.pairs.size(),
              static_cast<std::size_t>(t.num_atoms * (t.num_atoms - 1) / 2));
    for (std::size_t p = 0; p < t.pairs.size(); ++p) {
      const auto [a, b] = t.pairs[p];
      EXPECT_LT(a, b);
      double sum = 0.0;
      for (int k = 0; k < t.bond_width; ++k)
        sum += t.pair_features[p * t.bond_width + k];
      EXPECT_EQ(sum, g.has_bond(a, b) ? (c.bond_stereo.empty() ? 2.0 : 3.0) : 0.0);
      EXPECT_EQ(t.bond_feature(a, b), t.bond_feature(b, a));
    }
  }
}

TEST(Featurize, UnseenValuesEncodeAsZero) {
  const FeatureConfig c = fit_config_graphs({ parse_smiles("CCO") });
  const MolGraph g = add_supernode(parse_smiles("CS"));
  const GraphTensors t = featurize(g, c);
  const std::vector<int> sulfur = decode(&t.atom_features[1 * t.atom_width],
                                         atom_blocks(c));
  EXPECT_EQ(sulfur[1], -1000);
  EXPECT_EQ(sulfur[2], 0);
  // A triple bond never seen in the config.
  const MolGraph n = add_supernode(parse_smiles("CC#N"));
  const std::vector<double> f = featurize(n, c).bond_feature(1, 2);
  const std::vector<int> v = decode(f.data(), bond_blocks(c));
  EXPECT_EQ(v[0], -1000);
  EXPECT_EQ(v[2], 0);
}

TEST(Featurize, EditedFlags) {
  const FeatureConfig c = corpus_config();
  MolGraph g = add_supernode(parse_smiles("CCO"));
  g = apply_action(g, EditAction::delete_bond(), ActionTarget::pair(1, 2)).graph;
  const GraphTensors t = featurize(g, c);
  EXPECT_EQ(decode(&t.atom_features[1 * t.atom_width], atom_blocks(c))[6], 1);
  EXPECT_EQ(decode(&t.atom_features[0], atom_blocks(c))[6], 0);
}

TEST(Featurize, NeedsSupernode) {
  EXPECT_THROW(featurize(parse_smiles("C"), FeatureConfig {}), InvalidTargetError);
}

TEST(Featurize, PermutationEquivariance) {
  const FeatureConfig c = corpus_config();
  std::mt19937_64 rng(5);
  for (const char *s: { "CC(=O)Oc1ccccc1", "N[C@@H](C)C(=O)O", "C/C=C/Cl.O" }) {
    const MolGraph g = add_supernode(parse_smiles(s));
    const GraphTensors t = featurize(g, c);
    for (int trial = 0; trial < 20; ++trial) {
      const std::vector<int> p = test::random_atom_permutation(g.size(), true, rng);
      const GraphTensors u = featurize(permute_nodes(g, p), c);
      // Chiral tags are relative to neighbor order and are rewritten by the
      // relabeling, so that block is compared through the permuted graph.
      const int chiral_begin = static_cast<int>(
          c.is_supernode.size() + c.atomic_numbers.size()
          + c.formal_charges.size());
      const int chiral_end = chiral_begin + static_cast<int>(c.chiral_tags.size());
      for (int i = 0; i < g.size(); ++i)
        for (int k = 0; k < t.atom_width; ++k)
          if (k < chiral_begin || k >= chiral_end)
            ASSERT_EQ(u.atom_features[p[i] * t.atom_width + k],
                      t.atom_features[i * t.atom_width + k]);
      for (int i = 0; i < g.size(); ++i)
        for (int j = 0; j < g.size(); ++j)
          if (!g.atom(i).is_supernode && !g.atom(j).is_supernode && i != j)
            ASSERT_EQ(u.bond_feature(p[i], p[j]), t.bond_feature(i, j));
    }
  }
}

TEST(Featurize, Deterministic) {
  const FeatureConfig c = corpus_config();
  const MolGraph g = add_supernode(parse_smiles("CC(=O)Oc1ccccc1"));
  const GraphTensors a = featurize(g, c), b = featurize(g, c);
  EXPECT_EQ(a.atom_features, b.atom_features);
  EXPECT_EQ(a.edge_features, b.edge_features);
  EXPECT_EQ(a.edges, b.edges);
}

// The tensors carry enough to rebuild the graph when no value is unseen.
TEST(Featurize, GraphRecoverableFromTensors) {
  const FeatureConfig c = corpus_config();
  const MolGraph g = add_supernode(parse_smiles("CC(=O)Oc1ccc(Br)cc1"));
  const GraphTensors t = featurize(g, c);
  MolGraph back;
  for (int i = 0; i < t.num_atoms; ++i) {
    const std::vector<int> v = decode(&t.atom_features[i * t.atom_width],
                                      atom_blocks(c));
    AtomNode a;
    a.atomic_number = v[1];
    a.formal_charge = v[2];
    a.chiral_tag = static_cast<ChiralTag>(v[3]);
    a.explicit_h_count = v[4];
    a.is_aromatic = v[5];
    back.add_atom(a);
  }
  for (std::size_t p = 0; p < t.pairs.size(); ++p) {
    const std::vector<int> v =
        decode(&t.pair_features[p * t.bond_width], bond_blocks(c));
    if (v[0] == -1000)
      continue;
    back.set_bond(t.pairs[p].first, t.pairs[p].second,
                  Bond { static_cast<BondType>(v[0]),
                         static_cast<BondStereo>(v[1]) });
  }
  EXPECT_EQ(add_supernode(back), g);
}

}  // namespace
}  // namespace megan
