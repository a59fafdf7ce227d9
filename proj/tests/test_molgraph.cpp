//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "megan/molgraph.h"

#include <random>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "megan/error.h"
#include "megan/smiles.h"
#include "test_util.h"

namespace megan {
namespace {

struct ToolkitFacts {
  const char *smiles;
  int atoms;
  int bonds;
  int total_h;
  int aromatic;
};

// Atom, bond, hydrogen and aromatic-atom counts reported by RDKit for the
// same strings (frozen).
const ToolkitFacts kFacts[] = {
  { "C", 1, 0, 4, 0 },
  { "[CH3:1][OH:2]", 2, 1, 4, 0 },
  { "c1ccccc1", 6, 6, 6, 6 },
  { "CC(=O)O", 4, 3, 4, 0 },
  { "C/C=C/C", 4, 3, 8, 0 },
  { "C/C=C\\C", 4, 3, 8, 0 },
  { "N[C@@H](C)C(=O)O", 6, 5, 7, 0 },
  { "N[C@H](C)C(=O)O", 6, 5, 7, 0 },
  { "c1ccncc1", 6, 6, 5, 6 },
  { "c1cc[nH]c1", 5, 5, 5, 5 },
  { "O=[N+]([O-])c1ccccc1", 9, 9, 5, 6 },
  { "CC(C)(C)OC(=O)N1CCCC1", 12, 12, 17, 0 },
  { "Brc1ccc(Cl)cc1", 8, 8, 4, 6 },
  { "C#N", 2, 1, 1, 0 },
  { "[Na+].[Cl-]", 2, 0, 0, 0 },
  { "OB(O)c1ccccc1", 9, 9, 7, 6 },
  { "CS(=O)(=O)Cl", 5, 4, 3, 0 },
  { "FC(F)(F)c1cccs1", 9, 9, 3, 5 },
  { "C1CC2CCC1C2", 7, 8, 12, 0 },
  { "CCOC(=O)/C=C/c1ccco1", 12, 12, 10, 5 },
  { "[NH4+]", 1, 0, 4, 0 },
  { "O=C1CCCN1", 6, 6, 7, 0 },
  { "Cn1cnc2c1c(=O)n(C)c(=O)n2C", 14, 15, 10, 9 },
  { "C[Si](C)(C)Cl", 5, 4, 9, 0 },
  { "CC[Sn](CC)(CC)CC", 9, 8, 20, 0 },
  { "[Cu]", 1, 0, 0, 0 },
  { "[Zn+2]", 1, 0, 0, 0 },
  { "O=P(O)(O)O", 5, 4, 3, 0 },
  { "Ic1ccccc1", 7, 7, 5, 6 },
  { "C=CC=O", 4, 3, 4, 0 },
};

// Non-canonical SMILES of the same molecule, written by RDKit's randomized
// writer (frozen).
struct Equivalents {
  const char *smiles;
  std::vector<std::string> variants;
};

const Equivalents kEquivalents[] = {
  { "N[C@@H](C)C(=O)O",
    { "C(O)(=O)[C@@H](N)C", "N[C@H](C(=O)O)C", "OC(=O)[C@@H](N)C",
      "[C@H](C)(C(=O)O)N" } },
  { "C/C=C/C", { "C(/C)=C\\C", "C(=C\\C)/C", "C/C=C/C" } },
  { "CCOC(=O)/C=C/c1ccco1",
    { "C(=C\\C(=O)OCC)/c1ccco1", "C(=C\\c1ccco1)/C(OCC)=O",
      "C(=O)(/C=C/c1ccco1)OCC", "c1(ccco1)/C=C/C(=O)OCC" } },
  { "Cn1cnc2c1c(=O)n(C)c(=O)n2C",
    { "Cn1c(n(c(=O)c2n(cnc12)C)C)=O", "O=c1n(C)c(=O)c2n(cnc2n1C)C",
      "n1(c(n(C)c2ncn(C)c2c1=O)=O)C", "n1cn(C)c2c1n(c(=O)n(c2=O)C)C" } },
  { "O=[N+]([O-])c1ccccc1",
    { "[N+](c1ccccc1)(=O)[O-]", "c1cc([N+](=O)[O-])ccc1",
      "c1ccc([N+](=O)[O-])cc1", "c1cccc([N+]([O-])=O)c1" } },
  { "CC(C)(C)OC(=O)N1CCCC1",
    { "C(C)(OC(=O)N1CCCC1)(C)C", "C1CCCN1C(=O)OC(C)(C)C",
      "C1CN(C(=O)OC(C)(C)C)CC1", "O=C(OC(C)(C)C)N1CCCC1" } },
  { "C[C@H](O)[C@@H](N)C(=O)O",
    { "C(=O)(O)[C@H](N)[C@@H](O)C", "C[C@@H]([C@@H](N)C(=O)O)O",
      "N[C@@H](C(O)=O)[C@H](C)O", "O[C@@H](C)[C@H](C(=O)O)N" } },
  { "F/C=C/[C@@H](Cl)Br",
    { "Cl[C@@H](Br)/C=C/F", "Cl[C@H](/C=C/F)Br", "F/C=C/[C@@H](Cl)Br",
      "[C@@H](Br)(Cl)/C=C/F" } },
  { "OB(O)c1ccc2ccccc2c1",
    { "c1c(B(O)O)ccc2ccccc21", "c1c2ccc(cc2ccc1)B(O)O",
      "c1cc(B(O)O)cc2c1cccc2", "c1cccc2cc(ccc21)B(O)O" } },
  { "c1ccc2[nH]ccc2c1",
    { "c12c(cccc1)[nH]cc2", "c1c2[nH]ccc2ccc1", "c1cc2c([nH]cc2)cc1",
      "c1ccc2c(cc[nH]2)c1" } },
};

int total_h(const MolGraph &g) {
  int h = 0;
  for (int i = 0; i < g.size(); ++i)
    h += total_h_count(g, i);
  return h;
}

TEST(SmilesParse, MatchesToolkitCounts) {
  for (const ToolkitFacts &f: kFacts) {
    SCOPED_TRACE(f.smiles);
    const MolGraph g = parse_smiles(f.smiles);
    EXPECT_EQ(g.size(), f.atoms);
    EXPECT_EQ(g.num_bonds(), f.bonds);
    EXPECT_EQ(total_h(g), f.total_h);
    int aromatic = 0;
    for (const AtomNode &a: g.atoms())
      aromatic += a.is_aromatic;
    EXPECT_EQ(aromatic, f.aromatic);
    EXPECT_FALSE(g.has_supernode());
  }
}

TEST(SmilesParse, SingleCarbon) {
  const MolGraph g = parse_smiles("C");
  ASSERT_EQ(g.size(), 1);
  EXPECT_EQ(g.atom(0).atomic_number, 6);
  EXPECT_EQ(g.num_bonds(), 0);
  EXPECT_EQ(total_h_count(g, 0), 4);
}

TEST(SmilesParse, MappedMethanol) {
  const MolGraph g = parse_smiles("[CH3:1][OH:2]");
  ASSERT_EQ(g.size(), 2);
  EXPECT_EQ(g.atom(0).atomic_number, 6);
  EXPECT_EQ(g.atom(0).map_number, 1);
  EXPECT_EQ(g.atom(0).explicit_h_count, 3);
  EXPECT_EQ(g.atom(1).atomic_number, 8);
  EXPECT_EQ(g.atom(1).map_number, 2);
  EXPECT_EQ(g.atom(1).explicit_h_count, 1);
  ASSERT_TRUE(g.has_bond(0, 1));
  EXPECT_EQ(g.bond(0, 1)->type, BondType::Single);
}

TEST(SmilesParse, BenzeneRing) {
  const MolGraph g = parse_smiles("c1ccccc1");
  ASSERT_EQ(g.size(), 6);
  ASSERT_EQ(g.num_bonds(), 6);
  for (const auto &[key, b]: g.bonds())
    EXPECT_EQ(b.type, BondType::Aromatic);
  for (const AtomNode &a: g.atoms())
    EXPECT_TRUE(a.is_aromatic);
}

TEST(SmilesParse, StereoLabels) {
  const MolGraph e = parse_smiles("C/C=C/C");
  const MolGraph z = parse_smiles("C/C=C\\C");
  EXPECT_NE(e.bond(1, 2)->stereo, BondStereo::None);
  EXPECT_NE(e.bond(1, 2)->stereo, z.bond(1, 2)->stereo);
  EXPECT_NE(parse_smiles("N[C@@H](C)C(=O)O").atom(1).chiral_tag,
            ChiralTag::None);
}

TEST(SmilesParse, Errors) {
  EXPECT_THROW(parse_smiles("C1CC"), SyntaxError);
  EXPECT_THROW(parse_smiles("C(C"), SyntaxError);
  EXPECT_THROW(parse_smiles("C%"), SyntaxError);
  EXPECT_THROW(parse_smiles("[C"), SyntaxError);
  EXPECT_THROW(parse_smiles("C(=O)(=O)=O"), ValenceError);
  EXPECT_THROW(parse_smiles("FF(F)F"), ValenceError);
  EXPECT_THROW(parse_smiles("C*"), UnsupportedFeatureError);
  try {
    parse_smiles("CC)C");
    FAIL();
  }
  catch (const SyntaxError &e) {
    EXPECT_EQ(e.position(), 2u);
  }
}

TEST(SmilesParse, IsotopeIgnoredWithWarning) {
  std::vector<std::string> warnings;
  const MolGraph g = parse_smiles("[13CH4]", &warnings);
  EXPECT_EQ(g.size(), 1);
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_EQ(canonical_key(g), canonical_key("C"));
}

TEST(SmilesWrite, Examples) {
  EXPECT_EQ(write_smiles(parse_smiles("C")), "C");
  EXPECT_EQ(write_smiles(parse_smiles("OCC")), write_smiles(parse_smiles("CCO")));
  EXPECT_EQ(write_smiles(parse_smiles("[CH3:1][OH:2]"), true, false), "CO");
}

TEST(SmilesWrite, ToolkitEquivalentsShareKey) {
  for (const Equivalents &e: kEquivalents) {
    SCOPED_TRACE(e.smiles);
    const std::string key = canonical_key(e.smiles);
    for (const std::string &v: e.variants)
      EXPECT_EQ(canonical_key(v), key) << v;
  }
}

TEST(SmilesWrite, StereoisomersDiffer) {
  EXPECT_NE(canonical_key("N[C@@H](C)C(=O)O"), canonical_key("N[C@H](C)C(=O)O"));
  EXPECT_NE(canonical_key("C/C=C/C"), canonical_key("C/C=C\\C"));
  EXPECT_NE(canonical_key("C/C=C/C"), canonical_key("CC=CC"));
  EXPECT_NE(canonical_key("C[C@H](O)[C@@H](N)C(=O)O"),
            canonical_key("C[C@@H](O)[C@@H](N)C(=O)O"));
}

TEST(SmilesWrite, KekuleAndAromaticInputAgree) {
  EXPECT_EQ(canonical_key("C1=CC=CC=C1"), canonical_key("c1ccccc1"));
  EXPECT_EQ(canonical_key("Cc1ccccc1"), canonical_key("CC1=CC=CC=C1"));
}

TEST(SmilesWrite, RoundTripIsFixedPoint) {
  for (const ToolkitFacts &f: kFacts) {
    SCOPED_TRACE(f.smiles);
    const std::string once = write_smiles(parse_smiles(f.smiles));
    const std::string twice = write_smiles(parse_smiles(once));
    EXPECT_EQ(once, twice);
    EXPECT_EQ(parse_smiles(once).size(), f.atoms);
  }
  for (const char *split: { "train", "valid", "test" })
    for (const ReactionRecord &r: test::smoke_split(split)) {
      const std::string once = write_smiles(parse_smiles(r.rxn.substr(
          r.rxn.rfind('>') + 1)));
      EXPECT_EQ(write_smiles(parse_smiles(once)), once) << r.id;
    }
}

TEST(SmilesWrite, PermutationInvariance) {
  std::mt19937_64 rng(7);
  for (const ToolkitFacts &f: kFacts) {
    SCOPED_TRACE(f.smiles);
    const MolGraph g = parse_smiles(f.smiles);
    const std::string ref = write_smiles(g);
    const std::vector<int> ref_ranks = canonical_ranks(g, true);
    for (int trial = 0; trial < 100; ++trial) {
      const std::vector<int> p = test::random_permutation(g.size(), rng);
      const MolGraph h = permute_nodes(g, p);
      ASSERT_EQ(write_smiles(h), ref);
      const std::vector<int> ranks = canonical_ranks(h, true);
      for (int i = 0; i < g.size(); ++i)
        if (g.atom(i).map_number != 0)
          ASSERT_EQ(ranks[p[i]], ref_ranks[i]);
    }
  }
}

TEST(SmilesWrite, MapStrippingCommutes) {
  for (const char *s:
       { "[CH3:1][OH:2]", "[CH3:3][C:1](=[O:2])[OH:4]",
         "[cH:1]1[cH:2][cH:3][cH:4][cH:5][c:6]1[Br:7]",
         "[NH2:5][C@@H:2]([CH3:1])[C:3](=[O:4])[OH:6]" }) {
    const MolGraph g = parse_smiles(s);
    EXPECT_EQ(write_smiles(strip_maps(g), true, true),
              write_smiles(g, true, false))
        << s;
    EXPECT_EQ(canonical_key(g), canonical_key(strip_maps(g))) << s;
  }
}

TEST(SmilesWrite, ValenceConservation) {
  for (const ToolkitFacts &f: kFacts)
    EXPECT_TRUE(is_valence_ok(parse_smiles(f.smiles))) << f.smiles;
}

TEST(CanonicalRanks, Examples) {
  EXPECT_EQ(canonical_ranks(parse_smiles("C")), std::vector<int> { 0 });
  // Map-aligned atoms receive the same rank in both spellings.
  const MolGraph a = parse_smiles("[CH3:1][CH2:2][OH:3]");
  const MolGraph b = parse_smiles("[OH:3][CH2:2][CH3:1]");
  const std::vector<int> ra = canonical_ranks(a), rb = canonical_ranks(b);
  for (int i = 0; i < 3; ++i)
    EXPECT_EQ(ra[i], rb[2 - i]);
}

TEST(CanonicalRanks, MatchWriterTokenOrder) {
  // With map numbers equal to index + 1 and keep_maps, the written string
  // lists atoms in rank order; read the maps back from the written text.
  for (const char *s: { "CC(=O)O", "c1ccncc1", "CC(C)(C)OC(=O)N1CCCC1",
                        "N[C@@H](C)C(=O)O" }) {
    MolGraph g = parse_smiles(s);
    for (int i = 0; i < g.size(); ++i)
      g.atom(i).map_number = i + 1;
    const std::vector<int> ranks = canonical_ranks(g, true);
    const MolGraph back = parse_smiles(write_smiles(g, true, true));
    ASSERT_EQ(back.size(), g.size());
    for (int pos = 0; pos < back.size(); ++pos)
      EXPECT_EQ(ranks[back.atom(pos).map_number - 1], pos) << s;
  }
}

TEST(Supernode, Examples) {
  const MolGraph one = add_supernode(parse_smiles("C"));
  EXPECT_EQ(one.size(), 2);
  EXPECT_EQ(one.num_bonds(), 1);
  EXPECT_EQ(one.bond(0, 1)->type, BondType::Supernode);

  const MolGraph benz = add_supernode(parse_smiles("c1ccccc1"));
  EXPECT_EQ(benz.size(), 7);
  int super = 0, arom = 0;
  for (const auto &[k, b]: benz.bonds()) {
    super += b.type == BondType::Supernode;
    arom += b.type == BondType::Aromatic;
  }
  EXPECT_EQ(super, 6);
  EXPECT_EQ(arom, 6);
  EXPECT_EQ(benz.supernode(), 6);

  const MolGraph empty = add_supernode(MolGraph());
  EXPECT_EQ(empty.size(), 1);
  EXPECT_EQ(empty.num_bonds(), 0);
  EXPECT_THROW(add_supernode(one), AlreadyPresentError);
  EXPECT_EQ(remove_supernode(benz), parse_smiles("c1ccccc1"));
}

TEST(Supernode, NewAtomsAreLinked) {
  MolGraph g = add_supernode(parse_smiles("CC"));
  AtomNode n;
  n.atomic_number = 8;
  const int i = g.add_atom(n);
  EXPECT_EQ(i, 2);
  EXPECT_TRUE(g.has_supernode());
  EXPECT_EQ(g.supernode(), 3);
  ASSERT_TRUE(g.has_bond(2, 3));
  EXPECT_EQ(g.bond(2, 3)->type, BondType::Supernode);
  EXPECT_TRUE(g.atom(3).is_supernode);
  EXPECT_EQ(g.atom(3).atomic_number, 0);
}

TEST(Stereo, ImpossibleLabelsCleared) {
  MolGraph g = parse_smiles("N[C@@H](C)C(=O)O");
  g.atom(1).explicit_h_count = 2;
  g.remove_bond(0, 1);
  EXPECT_EQ(clear_impossible_stereo(g).atom(1).chiral_tag, ChiralTag::None);
  const MolGraph ok = parse_smiles("N[C@@H](C)C(=O)O");
  EXPECT_EQ(clear_impossible_stereo(ok), ok);
  MolGraph db = parse_smiles("C/C=C/C");
  db.remove_bond(0, 1);
  EXPECT_EQ(clear_impossible_stereo(db).bond(1, 2)->stereo, BondStereo::None);
}

TEST(Components, SplitAndInduce) {
  const MolGraph g = parse_smiles("CCO.[Na+].c1ccccc1");
  const auto comps = connected_components(g);
  ASSERT_EQ(comps.size(), 3u);
  std::set<std::string> keys;
  for (const auto &c: comps)
    keys.insert(canonical_key(induced_subgraph(g, c)));
  EXPECT_TRUE(keys.count(canonical_key("CCO")));
  EXPECT_TRUE(keys.count(canonical_key("[Na+]")));
  EXPECT_TRUE(keys.count(canonical_key("c1ccccc1")));
}

TEST(Aromaticity, PerceivesNewRing) {
  MolGraph g = parse_smiles("C1=CC=CC=C1");
  for (const AtomNode &a: g.atoms())
    EXPECT_FALSE(a.is_aromatic);
  perceive_aromaticity(g);
  for (const AtomNode &a: g.atoms())
    EXPECT_TRUE(a.is_aromatic);
  EXPECT_EQ(write_smiles(g), write_smiles(parse_smiles("c1ccccc1")));
}

}  // namespace
}  // namespace megan
