//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MEGAN_EDITOPS_H_
#define MEGAN_EDITOPS_H_

#include <array>
#include <compare>
#include <string>
#include <string_view>
#include <vector>

#include "megan/molgraph.h"

namespace megan {

enum class ActionKind : std::uint8_t {
  EditAtom,
  EditBond,
  AddAtom,
  AddBenzene,
  Stop,
};

inline constexpr int kNumActionKinds = 5;

std::string_view action_kind_name(ActionKind kind);

// One parameterized graph edit. Fields that a kind does not use stay at their
// defaults, so that equality and ordering only see meaningful parameters.
struct EditAction {
  ActionKind kind = ActionKind::Stop;

  // EditAtom, AddAtom (the new atom).
  int atomic_number = 0;
  int formal_charge = 0;
  ChiralTag chiral_tag = ChiralTag::None;
  int explicit_h_count = 0;
  bool is_aromatic = false;

  // EditBond, AddAtom (the bond to the anchor).
  bool bond_delete = false;
  BondType bond_type = BondType::Single;
  BondStereo bond_stereo = BondStereo::None;

  auto operator<=>(const EditAction &) const = default;

  static EditAction edit_atom(int formal_charge, ChiralTag chiral_tag,
                              int explicit_h_count, bool is_aromatic);
  static EditAction delete_bond();
  static EditAction edit_bond(BondType type,
                              BondStereo stereo = BondStereo::None);
  static EditAction add_atom(int atomic_number, int formal_charge,
                             ChiralTag chiral_tag, int explicit_h_count,
                             bool is_aromatic, BondType bond_type,
                             BondStereo bond_stereo = BondStereo::None);
  static EditAction add_benzene();
  static EditAction stop();

  bool is_bond_action() const { return kind == ActionKind::EditBond; }
  bool is_stop() const { return kind == ActionKind::Stop; }
};

// "Kind key=value ..." with keys sorted; parse_action is its inverse.
std::string to_string(const EditAction &a);
EditAction parse_action(std::string_view text);

// Atom index i (j = -1), or bond pair i < j.
struct ActionTarget {
  int i = -1;
  int j = -1;

  bool operator==(const ActionTarget &) const = default;
  static ActionTarget atom(int i) { return { i, -1 }; }
  static ActionTarget pair(int a, int b) {
    return a < b ? ActionTarget { a, b } : ActionTarget { b, a };
  }
};

struct ApplyResult {
  MolGraph graph;
  bool terminated = false;
};

// Applies one action. Redundant actions (deleting a missing bond, setting
// values an atom already has) return the input unchanged. Throws
// InvalidTargetError for dangling indices, supernode misuse, or a non-carbon
// AddBenzene anchor.
ApplyResult apply_action(const MolGraph &g, const EditAction &a,
                         const ActionTarget &t);

// Sorted, deduplicated list of actions. Stop is always present.
class ActionVocab {
public:
  ActionVocab();
  explicit ActionVocab(std::vector<EditAction> actions);

  int size() const { return static_cast<int>(actions_.size()); }
  const EditAction &at(int index) const { return actions_[index]; }
  const std::vector<EditAction> &actions() const { return actions_; }
  // -1 when the action is not in the vocabulary.
  int index_of(const EditAction &a) const;
  int count(ActionKind kind) const;

  // Vocabulary indices of atom actions (EditAtom, AddAtom, AddBenzene), of
  // bond actions (EditBond), and of Stop.
  const std::vector<int> &atom_actions() const { return atom_actions_; }
  const std::vector<int> &bond_actions() const { return bond_actions_; }
  int stop_index() const { return stop_index_; }
  // Position of a vocabulary entry within atom_actions() or bond_actions().
  int slot_of(int index) const { return slot_of_[index]; }

  bool operator==(const ActionVocab &o) const {
    return actions_ == o.actions_;
  }

private:
  void index();

  std::vector<EditAction> actions_;
  std::vector<int> atom_actions_;
  std::vector<int> bond_actions_;
  std::vector<int> slot_of_;
  int stop_index_ = -1;
};

// Versioned line format: a header line, then one action per line.
inline constexpr int kVocabFormatVersion = 1;
std::string vocab_to_text(const ActionVocab &vocab,
                          std::string_view config_hash = "");
// Throws DataError on malformed input.
ActionVocab vocab_from_text(std::string_view text);

// Maps flat logit positions to (vocabulary index, target) pairs. The order is
// every atom row (atom actions), then every atom pair i < j in lexicographic
// order (bond actions), then the single Stop slot at the supernode.
class ActionLayout {
public:
  struct Entry {
    int action = -1;
    ActionTarget target;
  };

  ActionLayout(const ActionVocab &vocab, int num_atoms, int supernode);

  int size() const { return size_; }
  int num_atoms() const { return num_atoms_; }
  int atom_slots() const { return atom_slots_; }
  int bond_slots() const { return bond_slots_; }
  int num_pairs() const { return num_atoms_ * (num_atoms_ - 1) / 2; }
  int stop_position() const { return size_ - 1; }
  int atom_position(int atom, int slot) const {
    return atom * atom_slots_ + slot;
  }
  int pair_index(int i, int j) const;
  std::pair<int, int> pair_at(int p) const;
  int pair_position(int i, int j, int slot) const {
    return num_atoms_ * atom_slots_ + pair_index(i, j) * bond_slots_ + slot;
  }

  Entry decode(int position) const;
  // -1 when the action cannot be taken at that target (e.g. Stop at an atom).
  int encode(int action, const ActionTarget &t) const;

private:
  const ActionVocab *vocab_;
  int num_atoms_, supernode_, atom_slots_, bond_slots_, size_;
};

// Requires a graph with supernode.
ActionLayout action_space_layout(const ActionVocab &vocab, const MolGraph &g);

}  // namespace megan

#endif  // MEGAN_EDITOPS_H_
