//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "megan/molgraph.h"

#include <algorithm>
#include <array>
#include <cstddef>
#include <numeric>
#include <queue>
#include <string>

#include "megan/error.h"

namespace megan {

namespace {

constexpr std::array<std::string_view, 87> kSymbols = {
  "*",  "H",  "He", "Li", "Be", "B",  "C",  "N",  "O",  "F",  "Ne", "Na",
  "Mg", "Al", "Si", "P",  "S",  "Cl", "Ar", "K",  "Ca", "Sc", "Ti", "V",
  "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br",
  "Kr", "Rb", "Sr", "Y",  "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag",
  "Cd", "In", "Sn", "Sb", "Te", "I",  "Xe", "Cs", "Ba", "La", "Ce", "Pr",
  "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu",
  "Hf", "Ta", "W",  "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi",
  "Po", "At", "Rn",
};

struct ValenceRow {
  std::array<int, 3> values;
  int count;
};

// Restricted valence lists for main-group elements. Elements not listed here
// (transition metals, Mg, heavier elements) are unrestricted.
ValenceRow valence_row(int z) {
  switch (z) {
  case 1: return { { 1 }, 1 };
  case 2: case 10: case 18: case 36: case 54: case 86: return { { 0 }, 1 };
  case 3: case 11: case 19: case 37: case 55: return { { 1 }, 1 };
  case 4: case 20: case 38: case 56: return { { 2 }, 1 };
  case 5: case 13: case 31: case 49: return { { 3 }, 1 };
  case 6: case 14: case 32: return { { 4 }, 1 };
  case 7: return { { 3 }, 1 };
  case 8: return { { 2 }, 1 };
  case 9: case 17: case 35: return { { 1 }, 1 };
  case 15: case 33: case 51: return { { 3, 5 }, 2 };
  case 16: case 34: case 52: return { { 2, 4, 6 }, 3 };
  case 50: case 82: return { { 2, 4 }, 2 };
  case 53: return { { 1, 3, 5 }, 3 };
  default: return { {}, 0 };
  }
}

// Backing storage for the spans handed out by default_valences().
struct ValenceTable {
  std::array<ValenceRow, 87> rows;
  ValenceTable() {
    for (int z = 0; z < 87; ++z)
      rows[z] = valence_row(z);
  }
};

const ValenceTable &valence_table() {
  static const ValenceTable table;
  return table;
}

int bond_order(BondType t) {
  switch (t) {
  case BondType::Single: return 1;
  case BondType::Double: return 2;
  case BondType::Triple: return 3;
  case BondType::Aromatic: return 1;
  default: return 0;
  }
}

int implicit_h_with(const MolGraph &g, int i, int explicit_h) {
  const AtomNode &a = g.atom(i);
  if (a.is_supernode || !is_organic_subset(a.atomic_number))
    return 0;
  auto vals = allowed_valences(a.atomic_number, a.formal_charge);
  if (vals.empty())
    return 0;
  const int used = sigma_valence(g, i) + explicit_h;
  auto it = std::find_if(vals.begin(), vals.end(),
                         [used](int v) { return v >= used; });
  if (it == vals.end())
    return 0;
  const int spare = *it - used;
  if (a.is_aromatic)
    return spare >= 1 ? spare - 1 : 0;
  return spare;
}

int inversion_parity(std::span<const int> seq) {
  int inversions = 0;
  for (std::size_t i = 0; i < seq.size(); ++i)
    for (std::size_t j = i + 1; j < seq.size(); ++j)
      if (seq[i] > seq[j])
        ++inversions;
  return inversions & 1;
}

// Rebuilds g keeping atoms with new_index[old] >= 0, relabeled. Chiral tags
// and bond stereo are rewritten to keep their configuration.
MolGraph remap(const MolGraph &g, std::span<const int> new_index) {
  const int n_new = static_cast<int>(
      std::count_if(new_index.begin(), new_index.end(),
                    [](int x) { return x >= 0; }));
  std::vector<int> old_of(n_new, -1);
  for (int i = 0; i < g.size(); ++i)
    if (new_index[i] >= 0)
      old_of[new_index[i]] = i;

  MolGraph out;
  bool supernode = false;
  for (int k = 0; k < n_new; ++k) {
    if (old_of[k] < 0)
      throw InternalInconsistencyError("node relabeling is not a bijection");
    const AtomNode &a = g.atom(old_of[k]);
    if (a.is_supernode) {
      if (k != n_new - 1)
        throw InternalInconsistencyError("supernode must stay the last node");
      supernode = true;
      continue;
    }
    AtomNode copy = a;
    out.add_atom(copy);
  }
  if (supernode)
    out = add_supernode(out);

  for (const auto &[key, b]: g.bonds()) {
    const int u = new_index[key.first], v = new_index[key.second];
    if (u < 0 || v < 0 || b.type == BondType::Supernode)
      continue;
    out.set_bond(u, v, b);
  }

  for (int k = 0; k < out.num_atoms(); ++k) {
    const int old = old_of[k];
    const AtomNode &a = g.atom(old);
    if (a.chiral_tag == ChiralTag::None)
      continue;
    std::vector<int> mapped;
    for (int x: chiral_reference_order(g, old)) {
      if (x == kHydrogenSlot)
        mapped.push_back(kHydrogenSlot);
      else if (new_index[x] >= 0)
        mapped.push_back(new_index[x]);
    }
    out.atom(k).chiral_tag = chiral_tag_from_order(out, k, a.chiral_tag,
                                                   mapped);
  }

  for (const auto &[key, b]: g.bonds()) {
    if (b.stereo == BondStereo::None)
      continue;
    const int u = new_index[key.first], v = new_index[key.second];
    if (u < 0 || v < 0)
      continue;
    auto [ru, rv] = stereo_reference(g, key.first, key.second);
    if (ru < 0 || rv < 0 || new_index[ru] < 0 || new_index[rv] < 0)
      continue;
    out.bond(u, v)->stereo = stereo_from_relative(out, u, v, new_index[ru],
                                                  new_index[rv], b.stereo);
  }
  return out;
}

}  // namespace

// --- MolGraph -------------------------------------------------------------

int MolGraph::add_atom(const AtomNode &atom) {
  if (!has_supernode()) {
    nodes_.push_back(atom);
    adjacency_.emplace_back();
    return size() - 1;
  }

  const int old_super = size() - 1;
  const int idx = old_super;
  nodes_.insert(nodes_.end() - 1, atom);
  adjacency_.insert(adjacency_.end() - 1, std::vector<int> {});

  std::map<BondKey, Bond> rekeyed;
  for (auto &[key, b]: bonds_) {
    if (key.second == old_super)
      rekeyed.emplace(BondKey { key.first, old_super + 1 }, b);
    else
      rekeyed.emplace(key, b);
  }
  bonds_ = std::move(rekeyed);
  for (auto &nbrs: adjacency_)
    for (int &x: nbrs)
      if (x == old_super)
        x = old_super + 1;

  set_bond(idx, old_super + 1, Bond { BondType::Supernode });
  return idx;
}

const Bond *MolGraph::bond(int i, int j) const {
  auto it = bonds_.find(bond_key(i, j));
  return it == bonds_.end() ? nullptr : &it->second;
}

Bond *MolGraph::bond(int i, int j) {
  auto it = bonds_.find(bond_key(i, j));
  return it == bonds_.end() ? nullptr : &it->second;
}

void MolGraph::set_bond(int i, int j, const Bond &bond) {
  if (i == j || i < 0 || j < 0 || i >= size() || j >= size())
    throw InvalidTargetError("invalid bond endpoints " + std::to_string(i)
                             + "-" + std::to_string(j));
  auto [it, inserted] = bonds_.insert_or_assign(bond_key(i, j), bond);
  if (!inserted)
    return;
  auto insert_sorted = [](std::vector<int> &v, int x) {
    v.insert(std::lower_bound(v.begin(), v.end(), x), x);
  };
  insert_sorted(adjacency_[i], j);
  insert_sorted(adjacency_[j], i);
}

bool MolGraph::remove_bond(int i, int j) {
  if (bonds_.erase(bond_key(i, j)) == 0)
    return false;
  auto erase = [](std::vector<int> &v, int x) {
    v.erase(std::lower_bound(v.begin(), v.end(), x));
  };
  erase(adjacency_[i], j);
  erase(adjacency_[j], i);
  return true;
}

// --- elements and valence -------------------------------------------------

std::string_view element_symbol(int atomic_number) {
  if (atomic_number < 0 || atomic_number >= static_cast<int>(kSymbols.size()))
    return "*";
  return kSymbols[atomic_number];
}

int element_from_symbol(std::string_view symbol) {
  for (std::size_t z = 1; z < kSymbols.size(); ++z)
    if (kSymbols[z] == symbol)
      return static_cast<int>(z);
  return 0;
}

bool is_organic_subset(int z) {
  switch (z) {
  case 5: case 6: case 7: case 8: case 9: case 15: case 16: case 17: case 35:
  case 53:
    return true;
  default:
    return false;
  }
}

std::span<const int> default_valences(int atomic_number) {
  if (atomic_number <= 0 || atomic_number >= 87)
    return {};
  const ValenceRow &row = valence_table().rows[atomic_number];
  return { row.values.data(), static_cast<std::size_t>(row.count) };
}

std::span<const int> allowed_valences(int atomic_number, int formal_charge) {
  auto base = default_valences(atomic_number);
  if (formal_charge == 0 || base.empty())
    return base;
  // Isoelectronic rule: N+ behaves like C, O- like F, and so on.
  const int effective = atomic_number - formal_charge;
  if (effective <= 0)
    return {};
  return default_valences(effective);
}

int heavy_degree(const MolGraph &g, int i) {
  int d = 0;
  for (int j: g.neighbors(i))
    if (!g.atom(j).is_supernode)
      ++d;
  return d;
}

int sigma_valence(const MolGraph &g, int i) {
  int s = 0;
  for (int j: g.neighbors(i))
    s += bond_order(g.bond(i, j)->type);
  return s;
}

int implicit_h_count(const MolGraph &g, int i) {
  return implicit_h_with(g, i, g.atom(i).explicit_h_count);
}

int total_h_count(const MolGraph &g, int i) {
  return g.atom(i).explicit_h_count + implicit_h_count(g, i);
}

void check_valence(const MolGraph &g) {
  for (int i = 0; i < g.size(); ++i) {
    const AtomNode &a = g.atom(i);
    if (a.is_supernode)
      continue;
    auto vals = allowed_valences(a.atomic_number, a.formal_charge);
    if (vals.empty())
      continue;
    const int used = sigma_valence(g, i) + a.explicit_h_count;
    if (used > vals.back())
      throw ValenceError("atom " + std::to_string(i) + " ("
                         + std::string(element_symbol(a.atomic_number))
                         + ") has valence " + std::to_string(used)
                         + ", maximum is " + std::to_string(vals.back()));
  }
}

bool is_valence_ok(const MolGraph &g) {
  try {
    check_valence(g);
    return true;
  } catch (const ValenceError &) {
    return false;
  }
}

MolGraph normalize_hydrogens(MolGraph g) {
  for (int i = 0; i < g.size(); ++i) {
    if (g.atom(i).is_supernode)
      continue;
    const int total = total_h_count(g, i);
    for (int e = 0; e <= total; ++e) {
      if (e + implicit_h_with(g, i, e) == total) {
        g.atom(i).explicit_h_count = e;
        break;
      }
    }
  }
  return g;
}

// --- structure ------------------------------------------------------------

MolGraph add_supernode(const MolGraph &g) {
  if (g.has_supernode())
    throw AlreadyPresentError("graph already has a supernode");
  MolGraph out = g;
  AtomNode super;
  super.atomic_number = 0;
  super.is_supernode = true;
  out.nodes_.push_back(super);
  out.adjacency_.emplace_back();
  const int s = out.size() - 1;
  for (int i = 0; i < s; ++i)
    out.set_bond(i, s, Bond { BondType::Supernode });
  return out;
}

MolGraph remove_supernode(const MolGraph &g) {
  if (!g.has_supernode())
    return g;
  std::vector<int> idx(g.size());
  std::iota(idx.begin(), idx.end(), 0);
  idx.back() = -1;
  return remap(g, idx);
}

MolGraph strip_maps(MolGraph g) {
  for (int i = 0; i < g.size(); ++i)
    g.atom(i).map_number = 0;
  return g;
}

MolGraph clear_edit_flags(MolGraph g) {
  for (int i = 0; i < g.size(); ++i)
    g.atom(i).is_edited = false;
  std::vector<BondKey> keys;
  for (const auto &[k, b]: g.bonds())
    keys.push_back(k);
  for (const auto &k: keys)
    g.bond(k.first, k.second)->is_edited = false;
  return g;
}

MolGraph clear_impossible_stereo(MolGraph g) {
  for (int i = 0; i < g.size(); ++i) {
    AtomNode &a = g.atom(i);
    if (a.is_supernode || a.chiral_tag == ChiralTag::None)
      continue;
    const int h = total_h_count(g, i);
    if (h > 1 || heavy_degree(g, i) + h < 3)
      a.chiral_tag = ChiralTag::None;
  }
  std::vector<BondKey> keys;
  for (const auto &[k, b]: g.bonds())
    if (b.stereo != BondStereo::None)
      keys.push_back(k);
  for (const auto &[u, v]: keys) {
    Bond *b = g.bond(u, v);
    if (b->type != BondType::Double || heavy_degree(g, u) < 2
        || heavy_degree(g, v) < 2)
      b->stereo = BondStereo::None;
  }
  return g;
}

MolGraph permute_nodes(const MolGraph &g, std::span<const int> new_index) {
  if (static_cast<int>(new_index.size()) != g.size())
    throw InternalInconsistencyError("permutation size mismatch");
  return remap(g, new_index);
}

MolGraph induced_subgraph(const MolGraph &g, std::span<const int> atoms) {
  std::vector<int> idx(g.size(), -1);
  int k = 0;
  for (int a: atoms)
    idx[a] = k++;
  return remap(g, idx);
}

std::vector<std::vector<int>> connected_components(const MolGraph &g) {
  std::vector<int> comp(g.size(), -1);
  std::vector<std::vector<int>> out;
  for (int s = 0; s < g.size(); ++s) {
    if (comp[s] >= 0 || g.atom(s).is_supernode)
      continue;
    const int c = static_cast<int>(out.size());
    out.emplace_back();
    std::queue<int> q;
    q.push(s);
    comp[s] = c;
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      out[c].push_back(u);
      for (int v: g.neighbors(u)) {
        if (comp[v] >= 0 || g.atom(v).is_supernode)
          continue;
        comp[v] = c;
        q.push(v);
      }
    }
    std::sort(out[c].begin(), out[c].end());
  }
  return out;
}

// --- stereo ---------------------------------------------------------------

std::vector<int> chiral_reference_order(const MolGraph &g, int atom) {
  std::vector<int> order;
  if (total_h_count(g, atom) > 0)
    order.push_back(kHydrogenSlot);
  for (int j: g.neighbors(atom))
    if (!g.atom(j).is_supernode)
      order.push_back(j);
  return order;
}

ChiralTag invert(ChiralTag tag) {
  switch (tag) {
  case ChiralTag::CW: return ChiralTag::CCW;
  case ChiralTag::CCW: return ChiralTag::CW;
  default: return ChiralTag::None;
  }
}

ChiralTag chiral_tag_in_order(const MolGraph &g, int atom,
                              std::span<const int> order) {
  const ChiralTag tag = g.atom(atom).chiral_tag;
  return inversion_parity(order) ? invert(tag) : tag;
}

ChiralTag chiral_tag_from_order(const MolGraph & /*g*/, int /*atom*/,
                                ChiralTag tag, std::span<const int> order) {
  return inversion_parity(order) ? invert(tag) : tag;
}

BondStereo invert(BondStereo stereo) {
  switch (stereo) {
  case BondStereo::Z: return BondStereo::E;
  case BondStereo::E: return BondStereo::Z;
  default: return BondStereo::None;
  }
}

std::pair<int, int> stereo_reference(const MolGraph &g, int u, int v) {
  auto first_other = [&](int a, int b) {
    for (int x: g.neighbors(a))
      if (x != b && !g.atom(x).is_supernode)
        return x;
    return -1;
  };
  return { first_other(u, v), first_other(v, u) };
}

BondStereo stereo_relative_to(const MolGraph &g, int u, int v, int x, int y) {
  const Bond *b = g.bond(u, v);
  if (b == nullptr || b->stereo == BondStereo::None)
    return BondStereo::None;
  auto [ru, rv] = stereo_reference(g, u, v);
  const int flips = (x != ru ? 1 : 0) + (y != rv ? 1 : 0);
  return flips & 1 ? invert(b->stereo) : b->stereo;
}

BondStereo stereo_from_relative(const MolGraph &g, int u, int v, int x, int y,
                                BondStereo relative) {
  auto [ru, rv] = stereo_reference(g, u, v);
  const int flips = (x != ru ? 1 : 0) + (y != rv ? 1 : 0);
  return flips & 1 ? invert(relative) : relative;
}

// --- aromaticity ----------------------------------------------------------

namespace {

void simple_cycles_from(const MolGraph &g, int start, int max_len,
                        std::vector<int> &path, std::vector<char> &on_path,
                        std::vector<std::vector<int>> &out) {
  const int u = path.back();
  for (int v: g.neighbors(u)) {
    if (g.atom(v).is_supernode)
      continue;
    if (v == start && path.size() >= 5) {
      // Each cycle is found twice (two directions); keep one.
      if (path[1] < path.back())
        out.push_back(path);
      continue;
    }
    if (v <= start || on_path[v] || static_cast<int>(path.size()) >= max_len)
      continue;
    on_path[v] = 1;
    path.push_back(v);
    simple_cycles_from(g, start, max_len, path, on_path, out);
    path.pop_back();
    on_path[v] = 0;
  }
}

// Pi electrons contributed by ring atom `a` within `ring`, or -1 if the atom
// cannot take part in an aromatic ring.
int pi_electrons(const MolGraph &g, const std::vector<int> &ring, int a) {
  const AtomNode &atom = g.atom(a);
  if (atom.is_aromatic)
    return 1;
  bool ring_double = false, exo_double = false;
  for (int b: g.neighbors(a)) {
    const Bond *bd = g.bond(a, b);
    if (bd->type == BondType::Triple)
      return -1;
    if (bd->type != BondType::Double)
      continue;
    if (std::find(ring.begin(), ring.end(), b) != ring.end())
      ring_double = true;
    else
      exo_double = true;
  }
  if (ring_double)
    return 1;
  const int z = atom.atomic_number;
  if (exo_double)
    return z == 6 ? 0 : -1;
  if ((z == 7 || z == 15) && atom.formal_charge == 0
      && heavy_degree(g, a) + total_h_count(g, a) == 3)
    return 2;
  if ((z == 8 || z == 16 || z == 34) && atom.formal_charge == 0
      && heavy_degree(g, a) == 2)
    return 2;
  if (z == 6 && atom.formal_charge == -1)
    return 2;
  return -1;
}

}  // namespace

bool perceive_aromaticity(MolGraph &g) {
  std::vector<std::vector<int>> rings;
  {
    std::vector<int> path;
    std::vector<char> on_path(g.size(), 0);
    for (int s = 0; s < g.size(); ++s) {
      if (g.atom(s).is_supernode)
        continue;
      path.assign(1, s);
      on_path[s] = 1;
      simple_cycles_from(g, s, 7, path, on_path, rings);
      on_path[s] = 0;
    }
  }

  std::vector<int> totals(g.size(), 0);
  for (int i = 0; i < g.size(); ++i)
    if (!g.atom(i).is_supernode)
      totals[i] = total_h_count(g, i);

  bool any = false;
  std::vector<char> touched(g.size(), 0);
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto &ring: rings) {
      bool all_aromatic = true;
      for (std::size_t k = 0; k < ring.size(); ++k) {
        const int a = ring[k], b = ring[(k + 1) % ring.size()];
        if (!g.atom(a).is_aromatic
            || g.bond(a, b)->type != BondType::Aromatic)
          all_aromatic = false;
      }
      if (all_aromatic)
        continue;
      int electrons = 0;
      bool ok = true;
      for (int a: ring) {
        const int e = pi_electrons(g, ring, a);
        if (e < 0) {
          ok = false;
          break;
        }
        electrons += e;
      }
      if (!ok || electrons < 2 || (electrons - 2) % 4 != 0)
        continue;
      for (std::size_t k = 0; k < ring.size(); ++k) {
        const int a = ring[k], b = ring[(k + 1) % ring.size()];
        g.atom(a).is_aromatic = true;
        touched[a] = 1;
        Bond *bd = g.bond(a, b);
        bd->type = BondType::Aromatic;
        bd->stereo = BondStereo::None;
      }
      changed = any = true;
    }
  }

  for (int i = 0; i < g.size(); ++i) {
    if (!touched[i])
      continue;
    g.atom(i).explicit_h_count = 0;
    for (int e = 0; e <= totals[i]; ++e) {
      g.atom(i).explicit_h_count = e;
      if (e + implicit_h_count(g, i) == totals[i])
        break;
    }
  }
  return any;
}

}  // namespace megan
