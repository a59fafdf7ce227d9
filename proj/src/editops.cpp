//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "megan/editops.h"

#include <algorithm>
#include <charconv>
#include <map>
#include <sstream>

#include "megan/error.h"

namespace megan {

namespace {

std::string_view chiral_name(ChiralTag t) {
  switch (t) {
  case ChiralTag::CW: return "CW";
  case ChiralTag::CCW: return "CCW";
  default: return "None";
  }
}

std::string_view stereo_name(BondStereo s) {
  switch (s) {
  case BondStereo::Z: return "Z";
  case BondStereo::E: return "E";
  default: return "None";
  }
}

std::string_view bond_type_name(BondType t) {
  switch (t) {
  case BondType::Supernode: return "Supernode";
  case BondType::Self: return "Self";
  case BondType::Single: return "Single";
  case BondType::Double: return "Double";
  case BondType::Triple: return "Triple";
  case BondType::Aromatic: return "Aromatic";
  }
  return "?";
}

ChiralTag chiral_from_name(std::string_view s) {
  if (s == "CW")
    return ChiralTag::CW;
  if (s == "CCW")
    return ChiralTag::CCW;
  if (s == "None")
    return ChiralTag::None;
  throw DataError("unknown chiral tag '" + std::string(s) + "'");
}

BondStereo stereo_from_name(std::string_view s) {
  if (s == "Z")
    return BondStereo::Z;
  if (s == "E")
    return BondStereo::E;
  if (s == "None")
    return BondStereo::None;
  throw DataError("unknown bond stereo '" + std::string(s) + "'");
}

BondType bond_type_from_name(std::string_view s) {
  for (BondType t: { BondType::Single, BondType::Double, BondType::Triple,
                     BondType::Aromatic })
    if (bond_type_name(t) == s)
      return t;
  throw DataError("unknown bond type '" + std::string(s) + "'");
}

int parse_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DataError("bad integer '" + std::string(s) + "'");
  return v;
}

void check_atom(const MolGraph &g, int i, std::string_view what) {
  if (i < 0 || i >= g.size())
    throw InvalidTargetError(std::string(what) + ": atom index "
                             + std::to_string(i) + " out of range");
  if (g.atom(i).is_supernode)
    throw InvalidTargetError(std::string(what)
                             + ": the supernode can only take Stop");
}

}  // namespace

std::string_view action_kind_name(ActionKind kind) {
  switch (kind) {
  case ActionKind::EditAtom: return "EditAtom";
  case ActionKind::EditBond: return "EditBond";
  case ActionKind::AddAtom: return "AddAtom";
  case ActionKind::AddBenzene: return "AddBenzene";
  case ActionKind::Stop: return "Stop";
  }
  return "?";
}

EditAction EditAction::edit_atom(int formal_charge, ChiralTag chiral_tag,
                                 int explicit_h_count, bool is_aromatic) {
  EditAction a;
  a.kind = ActionKind::EditAtom;
  a.formal_charge = formal_charge;
  a.chiral_tag = chiral_tag;
  a.explicit_h_count = explicit_h_count;
  a.is_aromatic = is_aromatic;
  return a;
}

EditAction EditAction::delete_bond() {
  EditAction a;
  a.kind = ActionKind::EditBond;
  a.bond_delete = true;
  return a;
}

EditAction EditAction::edit_bond(BondType type, BondStereo stereo) {
  EditAction a;
  a.kind = ActionKind::EditBond;
  a.bond_type = type;
  a.bond_stereo = stereo;
  return a;
}

EditAction EditAction::add_atom(int atomic_number, int formal_charge,
                                ChiralTag chiral_tag, int explicit_h_count,
                                bool is_aromatic, BondType bond_type,
                                BondStereo bond_stereo) {
  EditAction a;
  a.kind = ActionKind::AddAtom;
  a.atomic_number = atomic_number;
  a.formal_charge = formal_charge;
  a.chiral_tag = chiral_tag;
  a.explicit_h_count = explicit_h_count;
  a.is_aromatic = is_aromatic;
  a.bond_type = bond_type;
  a.bond_stereo = bond_stereo;
  return a;
}

EditAction EditAction::add_benzene() {
  EditAction a;
  a.kind = ActionKind::AddBenzene;
  return a;
}

EditAction EditAction::stop() { return EditAction {}; }

std::string to_string(const EditAction &a) {
  std::ostringstream out;
  out << action_kind_name(a.kind);
  switch (a.kind) {
  case ActionKind::EditAtom:
    out << " aromatic=" << (a.is_aromatic ? 1 : 0)
        << " charge=" << a.formal_charge
        << " chiral=" << chiral_name(a.chiral_tag)
        << " h=" << a.explicit_h_count;
    break;
  case ActionKind::EditBond:
    out << " stereo=" << stereo_name(a.bond_stereo) << " type="
        << (a.bond_delete ? "Delete" : bond_type_name(a.bond_type));
    break;
  case ActionKind::AddAtom:
    out << " aromatic=" << (a.is_aromatic ? 1 : 0)
        << " bond_stereo=" << stereo_name(a.bond_stereo)
        << " bond_type=" << bond_type_name(a.bond_type)
        << " charge=" << a.formal_charge
        << " chiral=" << chiral_name(a.chiral_tag)
        << " h=" << a.explicit_h_count << " z=" << a.atomic_number;
    break;
  default: break;
  }
  return out.str();
}

EditAction parse_action(std::string_view text) {
  std::istringstream in { std::string(text) };
  std::string kind;
  in >> kind;
  std::map<std::string, std::string> kv;
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos)
      throw DataError("bad action field '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  auto get = [&](const char *key) -> const std::string & {
    auto it = kv.find(key);
    if (it == kv.end())
      throw DataError("action '" + std::string(text) + "' lacks '" + key
                      + "'");
    return it->second;
  };
  EditAction a;
  std::size_t expected = 0;
  if (kind == "EditAtom") {
    a = EditAction::edit_atom(parse_int(get("charge")),
                              chiral_from_name(get("chiral")),
                              parse_int(get("h")),
                              parse_int(get("aromatic")) != 0);
    expected = 4;
  } else if (kind == "EditBond") {
    const std::string &type = get("type");
    a = type == "Delete" ? EditAction::delete_bond()
                         : EditAction::edit_bond(bond_type_from_name(type),
                                                 stereo_from_name(
                                                     get("stereo")));
    expected = 2;
  } else if (kind == "AddAtom") {
    a = EditAction::add_atom(parse_int(get("z")), parse_int(get("charge")),
                             chiral_from_name(get("chiral")),
                             parse_int(get("h")),
                             parse_int(get("aromatic")) != 0,
                             bond_type_from_name(get("bond_type")),
                             stereo_from_name(get("bond_stereo")));
    expected = 7;
  } else if (kind == "AddBenzene") {
    a = EditAction::add_benzene();
  } else if (kind == "Stop") {
    a = EditAction::stop();
  } else {
    throw DataError("unknown action kind '" + kind + "'");
  }
  if (kv.size() != expected)
    throw DataError("unexpected fields in action '" + std::string(text) + "'");
  return a;
}

ApplyResult apply_action(const MolGraph &g, const EditAction &a,
                         const ActionTarget &t) {
  ApplyResult r { g, false };
  MolGraph &out = r.graph;
  switch (a.kind) {
  case ActionKind::Stop:
    if (t.i != g.supernode() || t.j != -1)
      throw InvalidTargetError("Stop must target the supernode");
    r.terminated = true;
    return r;

  case ActionKind::EditAtom: {
    check_atom(g, t.i, "EditAtom");
    AtomNode &atom = out.atom(t.i);
    if (atom.formal_charge == a.formal_charge
        && atom.chiral_tag == a.chiral_tag
        && atom.explicit_h_count == a.explicit_h_count
        && atom.is_aromatic == a.is_aromatic)
      return r;
    atom.formal_charge = a.formal_charge;
    atom.chiral_tag = a.chiral_tag;
    atom.explicit_h_count = a.explicit_h_count;
    atom.is_aromatic = a.is_aromatic;
    atom.is_edited = true;
    return r;
  }

  case ActionKind::EditBond: {
    check_atom(g, t.i, "EditBond");
    check_atom(g, t.j, "EditBond");
    if (t.i == t.j)
      throw InvalidTargetError("EditBond needs two distinct atoms");
    const Bond *existing = g.bond(t.i, t.j);
    if (a.bond_delete) {
      if (existing == nullptr)
        return r;
      out.remove_bond(t.i, t.j);
    } else {
      if (existing != nullptr && existing->type == a.bond_type
          && existing->stereo == a.bond_stereo)
        return r;
      out.set_bond(t.i, t.j, Bond { a.bond_type, a.bond_stereo, true });
    }
    out.atom(t.i).is_edited = true;
    out.atom(t.j).is_edited = true;
    return r;
  }

  case ActionKind::AddAtom: {
    check_atom(g, t.i, "AddAtom");
    AtomNode atom;
    atom.atomic_number = a.atomic_number;
    atom.formal_charge = a.formal_charge;
    atom.chiral_tag = a.chiral_tag;
    atom.explicit_h_count = a.explicit_h_count;
    atom.is_aromatic = a.is_aromatic;
    atom.is_edited = true;
    const int k = out.add_atom(atom);
    out.set_bond(t.i, k, Bond { a.bond_type, a.bond_stereo, true });
    out.atom(t.i).is_edited = true;
    return r;
  }

  case ActionKind::AddBenzene: {
    check_atom(g, t.i, "AddBenzene");
    if (g.atom(t.i).atomic_number != 6)
      throw InvalidTargetError("AddBenzene anchor must be a carbon");
    AtomNode c;
    c.atomic_number = 6;
    c.is_aromatic = true;
    c.is_edited = true;
    int ring[6];
    for (int &x: ring)
      x = out.add_atom(c);
    for (int k = 0; k < 6; ++k)
      out.set_bond(ring[k], ring[(k + 1) % 6],
                   Bond { BondType::Aromatic, BondStereo::None, true });
    out.set_bond(t.i, ring[0], Bond { BondType::Single, BondStereo::None,
                                      true });
    out.atom(t.i).is_edited = true;
    return r;
  }
  }
  return r;
}

// --- vocabulary -----------------------------------------------------------

ActionVocab::ActionVocab() : ActionVocab(std::vector<EditAction> {}) { }

ActionVocab::ActionVocab(std::vector<EditAction> actions)
    : actions_(std::move(actions)) {
  actions_.push_back(EditAction::stop());
  std::sort(actions_.begin(), actions_.end());
  actions_.erase(std::unique(actions_.begin(), actions_.end()),
                 actions_.end());
  index();
}

void ActionVocab::index() {
  atom_actions_.clear();
  bond_actions_.clear();
  slot_of_.assign(actions_.size(), -1);
  for (int k = 0; k < size(); ++k) {
    switch (actions_[k].kind) {
    case ActionKind::EditBond:
      slot_of_[k] = static_cast<int>(bond_actions_.size());
      bond_actions_.push_back(k);
      break;
    case ActionKind::Stop: stop_index_ = k; break;
    default:
      slot_of_[k] = static_cast<int>(atom_actions_.size());
      atom_actions_.push_back(k);
      break;
    }
  }
}

int ActionVocab::index_of(const EditAction &a) const {
  auto it = std::lower_bound(actions_.begin(), actions_.end(), a);
  if (it == actions_.end() || !(*it == a))
    return -1;
  return static_cast<int>(it - actions_.begin());
}

int ActionVocab::count(ActionKind kind) const {
  return static_cast<int>(
      std::count_if(actions_.begin(), actions_.end(),
                    [&](const EditAction &a) { return a.kind == kind; }));
}

std::string vocab_to_text(const ActionVocab &vocab,
                          std::string_view config_hash) {
  std::string out = "megan-vocab\t" + std::to_string(kVocabFormatVersion)
                    + "\t" + std::string(config_hash.empty() ? "-"
                                                             : config_hash)
                    + "\t" + std::to_string(vocab.size()) + "\n";
  for (const EditAction &a: vocab.actions())
    out += to_string(a) + "\n";
  return out;
}

ActionVocab vocab_from_text(std::string_view text) {
  std::istringstream in { std::string(text) };
  std::string line;
  if (!std::getline(in, line))
    throw DataError("empty vocabulary file");
  std::istringstream header(line);
  std::string magic, hash;
  int version = 0, count = 0;
  std::string vfield, cfield;
  if (!std::getline(header, magic, '\t') || magic != "megan-vocab"
      || !std::getline(header, vfield, '\t') || !std::getline(header, hash, '\t')
      || !std::getline(header, cfield))
    throw DataError("bad vocabulary header");
  version = parse_int(vfield);
  count = parse_int(cfield);
  if (version != kVocabFormatVersion)
    throw DataError("unsupported vocabulary version "
                    + std::to_string(version));
  std::vector<EditAction> actions;
  while (std::getline(in, line))
    if (!line.empty())
      actions.push_back(parse_action(line));
  if (static_cast<int>(actions.size()) != count)
    throw DataError("vocabulary size mismatch");
  ActionVocab vocab(actions);
  if (vocab.actions() != actions)
    throw DataError("vocabulary entries are not sorted and unique");
  return vocab;
}

// --- layout ---------------------------------------------------------------

ActionLayout::ActionLayout(const ActionVocab &vocab, int num_atoms,
                           int supernode)
    : vocab_(&vocab), num_atoms_(num_atoms), supernode_(supernode),
      atom_slots_(static_cast<int>(vocab.atom_actions().size())),
      bond_slots_(static_cast<int>(vocab.bond_actions().size())) {
  size_ = num_atoms_ * atom_slots_ + num_pairs() * bond_slots_ + 1;
}

int ActionLayout::pair_index(int i, int j) const {
  if (i > j)
    std::swap(i, j);
  // Pairs (0,1) (0,2) ... (0,n-1) (1,2) ...
  return i * num_atoms_ - i * (i + 1) / 2 + (j - i - 1);
}

std::pair<int, int> ActionLayout::pair_at(int p) const {
  int i = 0;
  int row = num_atoms_ - 1;
  while (p >= row) {
    p -= row;
    ++i;
    --row;
  }
  return { i, i + 1 + p };
}

ActionLayout::Entry ActionLayout::decode(int position) const {
  if (position < 0 || position >= size_)
    throw InvalidTargetError("layout position out of range");
  if (position == stop_position())
    return { vocab_->stop_index(), ActionTarget::atom(supernode_) };
  const int atom_block = num_atoms_ * atom_slots_;
  if (position < atom_block)
    return { vocab_->atom_actions()[position % atom_slots_],
             ActionTarget::atom(position / atom_slots_) };
  const int rest = position - atom_block;
  auto [i, j] = pair_at(rest / bond_slots_);
  return { vocab_->bond_actions()[rest % bond_slots_],
           ActionTarget::pair(i, j) };
}

int ActionLayout::encode(int action, const ActionTarget &t) const {
  if (action < 0 || action >= vocab_->size())
    return -1;
  const EditAction &a = vocab_->at(action);
  if (a.is_stop())
    return t.i == supernode_ && t.j < 0 ? stop_position() : -1;
  if (a.is_bond_action()) {
    if (t.i < 0 || t.j < 0 || t.i == t.j || t.i >= num_atoms_
        || t.j >= num_atoms_)
      return -1;
    return pair_position(t.i, t.j, vocab_->slot_of(action));
  }
  if (t.i < 0 || t.i >= num_atoms_ || t.j >= 0)
    return -1;
  return atom_position(t.i, vocab_->slot_of(action));
}

ActionLayout action_space_layout(const ActionVocab &vocab, const MolGraph &g) {
  if (!g.has_supernode())
    throw InvalidTargetError("action layout requires a supernode");
  return ActionLayout(vocab, g.num_atoms(), g.supernode());
}

}  // namespace megan
