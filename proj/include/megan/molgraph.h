//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MEGAN_MOLGRAPH_H_
#define MEGAN_MOLGRAPH_H_

#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace megan {

// "@@" is clockwise, "@" is counter-clockwise. Tags are stored relative to the
// chiral reference order of the atom (see chiral_reference_order()).
enum class ChiralTag : std::uint8_t { None, CW, CCW };

enum class BondType : std::uint8_t {
  Supernode,
  Self,
  Single,
  Double,
  Triple,
  Aromatic,
};

// Z/E of a double bond, relative to the stereo reference substituents
// returned by stereo_reference().
enum class BondStereo : std::uint8_t { None, Z, E };

struct AtomNode {
  int atomic_number = 6;
  int formal_charge = 0;
  ChiralTag chiral_tag = ChiralTag::None;
  int explicit_h_count = 0;
  bool is_aromatic = false;
  int map_number = 0;
  bool is_supernode = false;
  bool is_edited = false;
  // Only consumed by the forward "separated" featurization: the atom belongs
  // to a molecule listed as a reactant (as opposed to a reagent).
  bool in_reactant = false;

  bool operator==(const AtomNode &) const = default;
};

struct Bond {
  BondType type = BondType::Single;
  BondStereo stereo = BondStereo::None;
  bool is_edited = false;

  bool operator==(const Bond &) const = default;
};

// Key of a bond: (i, j) with i < j.
using BondKey = std::pair<int, int>;

inline BondKey bond_key(int i, int j) {
  return i < j ? BondKey { i, j } : BondKey { j, i };
}

// Hydrogen-suppressed labeled molecular graph. If a supernode is present it is
// always the last node and is bonded to every atom.
class MolGraph {
public:
  MolGraph() = default;

  int size() const { return static_cast<int>(nodes_.size()); }
  int num_atoms() const { return size() - (has_supernode() ? 1 : 0); }
  bool empty() const { return nodes_.empty(); }
  bool has_supernode() const {
    return !nodes_.empty() && nodes_.back().is_supernode;
  }
  int supernode() const { return has_supernode() ? size() - 1 : -1; }

  const AtomNode &atom(int i) const { return nodes_[i]; }
  AtomNode &atom(int i) { return nodes_[i]; }
  const std::vector<AtomNode> &atoms() const { return nodes_; }

  // Appends an atom (before the supernode, if any) and returns its index. The
  // supernode, when present, is bonded to the new atom.
  int add_atom(const AtomNode &atom);

  const Bond *bond(int i, int j) const;
  Bond *bond(int i, int j);
  bool has_bond(int i, int j) const { return bond(i, j) != nullptr; }
  // Creates or overwrites the bond between i and j.
  void set_bond(int i, int j, const Bond &bond);
  bool remove_bond(int i, int j);

  // Neighbors sorted by index; includes the supernode when present.
  const std::vector<int> &neighbors(int i) const { return adjacency_[i]; }
  const std::map<BondKey, Bond> &bonds() const { return bonds_; }
  int num_bonds() const { return static_cast<int>(bonds_.size()); }

  bool operator==(const MolGraph &) const = default;

private:
  friend MolGraph add_supernode(const MolGraph &g);

  std::vector<AtomNode> nodes_;
  std::vector<std::vector<int>> adjacency_;
  std::map<BondKey, Bond> bonds_;
};

// Slot used for the (single) hydrogen in chiral neighbor orders.
inline constexpr int kHydrogenSlot = -1;

// --- elements and valence -------------------------------------------------

std::string_view element_symbol(int atomic_number);
// Returns 0 for unknown symbols. Case sensitive ("Cl", not "CL").
int element_from_symbol(std::string_view symbol);
// Atoms of these elements take implicit hydrogens (B C N O P S F Cl Br I).
bool is_organic_subset(int atomic_number);
// Allowed valences of a neutral element, ascending. Empty means unrestricted.
std::span<const int> default_valences(int atomic_number);
// Valences allowed for an atom, taking its formal charge into account.
std::span<const int> allowed_valences(int atomic_number, int formal_charge);

// Number of atom (non-supernode) neighbors.
int heavy_degree(const MolGraph &g, int i);
// Sum of bond orders, counting aromatic bonds as 1. Supernode bonds excluded.
int sigma_valence(const MolGraph &g, int i);
int implicit_h_count(const MolGraph &g, int i);
int total_h_count(const MolGraph &g, int i);
// Throws ValenceError naming the first offending atom.
void check_valence(const MolGraph &g);
bool is_valence_ok(const MolGraph &g);

// Rewrites explicit hydrogen counts to the smallest count that, combined with
// implicit completion, preserves every atom's total hydrogen count.
MolGraph normalize_hydrogens(MolGraph g);

// --- structure ------------------------------------------------------------

// Throws AlreadyPresentError if g already has a supernode.
MolGraph add_supernode(const MolGraph &g);
MolGraph remove_supernode(const MolGraph &g);
MolGraph strip_maps(MolGraph g);
MolGraph clear_edit_flags(MolGraph g);
// Drops chiral tags on atoms with more than one hydrogen or fewer than three
// substituents, and Z/E labels on bonds that are not double or have a bare end.
MolGraph clear_impossible_stereo(MolGraph g);

// new_index[old] = new. Stereo labels are rewritten so that they keep their
// meaning under the new numbering.
MolGraph permute_nodes(const MolGraph &g, std::span<const int> new_index);
// Atoms listed in `atoms` (sorted, no supernode) in their original order.
MolGraph induced_subgraph(const MolGraph &g, std::span<const int> atoms);
// Components over atom-atom bonds; supernode excluded. Sorted by first atom.
std::vector<std::vector<int>> connected_components(const MolGraph &g);

// --- stereo ---------------------------------------------------------------

// Hydrogen slot first (if the atom carries a hydrogen), then atom neighbors in
// ascending index order.
std::vector<int> chiral_reference_order(const MolGraph &g, int atom);
// Tag describing the stored configuration of `atom` when its neighbors are
// listed in `order` (a permutation of the reference order).
ChiralTag chiral_tag_in_order(const MolGraph &g, int atom,
                              std::span<const int> order);
// Inverse of chiral_tag_in_order(): the tag to store given a tag that is
// expressed relative to `order`.
ChiralTag chiral_tag_from_order(const MolGraph &g, int atom, ChiralTag tag,
                                std::span<const int> order);
ChiralTag invert(ChiralTag tag);

// Lowest-index atom neighbors of u (excluding v) and of v (excluding u), or -1.
std::pair<int, int> stereo_reference(const MolGraph &g, int u, int v);
// Z/E of bond (u, v) as seen from substituents x (on u) and y (on v).
BondStereo stereo_relative_to(const MolGraph &g, int u, int v, int x, int y);
// Stored Z/E given a label relative to substituents x (on u) and y (on v).
BondStereo stereo_from_relative(const MolGraph &g, int u, int v, int x, int y,
                                BondStereo relative);
BondStereo invert(BondStereo stereo);

// Marks rings of Kekule-form atoms whose pi-electron count satisfies 4n+2 as
// aromatic. Atoms and bonds already aromatic are left untouched. Returns true
// if anything changed.
bool perceive_aromaticity(MolGraph &g);

}  // namespace megan

#endif  // MEGAN_MOLGRAPH_H_
