//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "megan/smiles.h"

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <utility>

#include "megan/error.h"

namespace megan {

namespace {

constexpr int kRingPlaceholder = -2;

char flip(char c) { return c == '/' ? '\\' : '/'; }

bool is_bond_char(char c) {
  return c == '-' || c == '=' || c == '#' || c == ':' || c == '/' || c == '\\';
}

// Outward direction of a directional single bond, seen from atom `from`.
using OutwardMap = std::map<std::pair<int, int>, char>;

struct RawAtom {
  AtomNode atom;
  ChiralTag written_tag = ChiralTag::None;
  bool has_prev = false;
  std::vector<int> order;
};

struct RawBond {
  int a, b;
  char sym;
  bool ring_closure;
};

struct RingOpen {
  int atom;
  char sym;
  std::size_t slot;
  std::size_t position;
};

class SmilesParser {
public:
  SmilesParser(std::string_view text, std::vector<std::string> *warnings)
      : s_(text), warnings_(warnings) { }

  MolGraph parse();

private:
  [[noreturn]] void fail(const std::string &msg) const {
    throw SyntaxError(pos_, msg);
  }

  bool at_end() const { return pos_ >= s_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < s_.size() ? s_[pos_ + ahead] : '\0';
  }

  int read_number() {
    int v = 0;
    bool any = false;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
      v = v * 10 + (peek() - '0');
      ++pos_;
      any = true;
    }
    return any ? v : -1;
  }

  void parse_organic_atom();
  void parse_bracket_atom();
  void add_atom(RawAtom atom, int hcount);
  void add_bond(int a, int b, char sym, bool ring_closure);
  void ring_closure(int number);

  MolGraph finish();

  std::string_view s_;
  std::vector<std::string> *warnings_;
  std::size_t pos_ = 0;

  std::vector<RawAtom> atoms_;
  std::vector<RawBond> bonds_;
  std::vector<std::tuple<int, int, char>> directions_;
  std::map<int, RingOpen> rings_;
  int prev_ = -1;
  char pending_ = '\0';
};

void SmilesParser::add_bond(int a, int b, char sym, bool ring_closure) {
  for (const RawBond &rb: bonds_)
    if ((rb.a == a && rb.b == b) || (rb.a == b && rb.b == a))
      fail("duplicate bond");
  bonds_.push_back({ a, b, sym, ring_closure });
  if (sym == '/' || sym == '\\')
    directions_.emplace_back(a, b, sym);
}

void SmilesParser::add_atom(RawAtom atom, int hcount) {
  const int cur = static_cast<int>(atoms_.size());
  atoms_.push_back(std::move(atom));
  if (prev_ >= 0) {
    atoms_[cur].has_prev = true;
    atoms_[cur].order.push_back(prev_);
    atoms_[prev_].order.push_back(cur);
    add_bond(prev_, cur, pending_, false);
  } else if (pending_ != '\0') {
    fail("bond without a preceding atom");
  }
  if (hcount > 0)
    atoms_[cur].order.push_back(kHydrogenSlot);
  prev_ = cur;
  pending_ = '\0';
}

void SmilesParser::parse_organic_atom() {
  RawAtom ra;
  const char c = peek();
  int z = 0;
  bool aromatic = false;
  if (c == 'C' && peek(1) == 'l') {
    z = 17;
    pos_ += 2;
  } else if (c == 'B' && peek(1) == 'r') {
    z = 35;
    pos_ += 2;
  } else {
    switch (c) {
    case 'B': z = 5; break;
    case 'C': z = 6; break;
    case 'N': z = 7; break;
    case 'O': z = 8; break;
    case 'P': z = 15; break;
    case 'S': z = 16; break;
    case 'F': z = 9; break;
    case 'I': z = 53; break;
    case 'b': z = 5; aromatic = true; break;
    case 'c': z = 6; aromatic = true; break;
    case 'n': z = 7; aromatic = true; break;
    case 'o': z = 8; aromatic = true; break;
    case 'p': z = 15; aromatic = true; break;
    case 's': z = 16; aromatic = true; break;
    case '*': throw UnsupportedFeatureError("wildcard atoms are not supported");
    default: fail(std::string("unexpected character '") + c + "'");
    }
    ++pos_;
  }
  ra.atom.atomic_number = z;
  ra.atom.is_aromatic = aromatic;
  add_atom(std::move(ra), 0);
}

void SmilesParser::parse_bracket_atom() {
  const std::size_t start = pos_;
  ++pos_;  // '['
  RawAtom ra;
  if (std::isdigit(static_cast<unsigned char>(peek()))) {
    const int isotope = read_number();
    if (warnings_ != nullptr)
      warnings_->push_back("isotope " + std::to_string(isotope)
                           + " ignored at position " + std::to_string(start));
  }

  const char c = peek();
  int z = 0;
  bool aromatic = false;
  if (c == '*')
    throw UnsupportedFeatureError("wildcard atoms are not supported");
  if (std::isupper(static_cast<unsigned char>(c))) {
    if (std::islower(static_cast<unsigned char>(peek(1)))) {
      const std::string two { c, peek(1) };
      z = element_from_symbol(two);
      if (z != 0)
        pos_ += 2;
    }
    if (z == 0) {
      z = element_from_symbol(std::string(1, c));
      if (z == 0)
        fail(std::string("unknown element '") + c + "'");
      ++pos_;
    }
  } else if (std::islower(static_cast<unsigned char>(c))) {
    aromatic = true;
    const std::string two { c, peek(1) };
    if (two == "se" || two == "as" || two == "te") {
      z = two == "se" ? 34 : two == "as" ? 33 : 52;
      pos_ += 2;
    } else {
      switch (c) {
      case 'b': z = 5; break;
      case 'c': z = 6; break;
      case 'n': z = 7; break;
      case 'o': z = 8; break;
      case 'p': z = 15; break;
      case 's': z = 16; break;
      default: fail(std::string("unknown aromatic element '") + c + "'");
      }
      ++pos_;
    }
  } else {
    fail("expected element symbol");
  }
  ra.atom.atomic_number = z;
  ra.atom.is_aromatic = aromatic;

  if (peek() == '@') {
    ++pos_;
    if (peek() == '@') {
      ++pos_;
      ra.written_tag = ChiralTag::CW;
    } else {
      ra.written_tag = ChiralTag::CCW;
    }
    if (std::isupper(static_cast<unsigned char>(peek())) && peek() != 'H')
      throw UnsupportedFeatureError("extended chirality classes are not "
                                    "supported");
  }

  int hcount = 0;
  if (peek() == 'H') {
    ++pos_;
    const int n = read_number();
    hcount = n < 0 ? 1 : n;
  }

  if (peek() == '+' || peek() == '-') {
    const char sign = peek();
    ++pos_;
    int magnitude = 1;
    if (std::isdigit(static_cast<unsigned char>(peek()))) {
      magnitude = read_number();
    } else {
      while (peek() == sign) {
        ++magnitude;
        ++pos_;
      }
    }
    ra.atom.formal_charge = sign == '+' ? magnitude : -magnitude;
  }

  if (peek() == ':') {
    ++pos_;
    const int map = read_number();
    if (map < 0)
      fail("expected atom map number");
    ra.atom.map_number = map;
  }

  if (peek() != ']')
    fail("expected ']'");
  ++pos_;

  ra.atom.explicit_h_count = z == 1 ? 0 : hcount;
  ra.atom.chiral_tag = ra.written_tag;
  add_atom(std::move(ra), z == 1 ? 0 : hcount);
}

void SmilesParser::ring_closure(int number) {
  if (prev_ < 0)
    fail("ring closure without an atom");
  auto it = rings_.find(number);
  if (it == rings_.end()) {
    rings_[number] = { prev_, pending_, atoms_[prev_].order.size(), pos_ };
    atoms_[prev_].order.push_back(kRingPlaceholder);
    pending_ = '\0';
    return;
  }

  const RingOpen open = it->second;
  rings_.erase(it);
  if (open.atom == prev_)
    fail("ring closure to the same atom");

  auto strength = [](char c) { return c == '/' || c == '\\' ? '-' : c; };
  char sym = open.sym != '\0' ? strength(open.sym) : strength(pending_);
  if (open.sym != '\0' && pending_ != '\0'
      && strength(open.sym) != strength(pending_))
    fail("conflicting ring closure bond symbols");
  atoms_[open.atom].order[open.slot] = prev_;
  atoms_[prev_].order.push_back(open.atom);

  for (const RawBond &rb: bonds_)
    if ((rb.a == open.atom && rb.b == prev_)
        || (rb.a == prev_ && rb.b == open.atom))
      fail("duplicate bond");
  bonds_.push_back({ open.atom, prev_, sym, true });
  if (open.sym == '/' || open.sym == '\\')
    directions_.emplace_back(open.atom, prev_, open.sym);
  if (pending_ == '/' || pending_ == '\\')
    directions_.emplace_back(prev_, open.atom, pending_);
  pending_ = '\0';
}

MolGraph SmilesParser::parse() {
  std::vector<int> branches;
  while (!at_end()) {
    const char c = peek();
    if (c == '(') {
      if (prev_ < 0)
        fail("branch without a preceding atom");
      if (pending_ != '\0')
        fail("bond symbol before branch");
      branches.push_back(prev_);
      ++pos_;
    } else if (c == ')') {
      if (branches.empty())
        fail("unbalanced ')'");
      if (pending_ != '\0')
        fail("dangling bond symbol");
      prev_ = branches.back();
      branches.pop_back();
      ++pos_;
    } else if (c == '.') {
      if (pending_ != '\0')
        fail("dangling bond symbol");
      if (!branches.empty())
        fail("'.' inside a branch");
      prev_ = -1;
      ++pos_;
    } else if (is_bond_char(c)) {
      if (pending_ != '\0')
        fail("consecutive bond symbols");
      pending_ = c;
      ++pos_;
    } else if (c == '$') {
      throw UnsupportedFeatureError("quadruple bonds are not supported");
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      ++pos_;
      ring_closure(c - '0');
    } else if (c == '%') {
      ++pos_;
      if (!std::isdigit(static_cast<unsigned char>(peek()))
          || !std::isdigit(static_cast<unsigned char>(peek(1))))
        fail("expected two digits after '%'");
      const int number = (peek() - '0') * 10 + (peek(1) - '0');
      pos_ += 2;
      ring_closure(number);
    } else if (c == '[') {
      parse_bracket_atom();
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '*') {
      parse_organic_atom();
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      fail("unexpected whitespace");
    } else {
      fail(std::string("unexpected character '") + c + "'");
    }
  }
  if (!branches.empty())
    fail("unbalanced '('");
  if (!rings_.empty()) {
    pos_ = rings_.begin()->second.position;
    fail("unclosed ring " + std::to_string(rings_.begin()->first));
  }
  if (pending_ != '\0')
    fail("dangling bond symbol");
  return finish();
}

// Bonds that are not bridges, i.e. lie on at least one cycle.
std::vector<char> ring_bond_flags(int n, const std::vector<RawBond> &bonds) {
  std::vector<std::vector<std::pair<int, int>>> adj(n);
  for (int e = 0; e < static_cast<int>(bonds.size()); ++e) {
    adj[bonds[e].a].emplace_back(bonds[e].b, e);
    adj[bonds[e].b].emplace_back(bonds[e].a, e);
  }
  std::vector<int> disc(n, -1), low(n, 0);
  std::vector<char> in_ring(bonds.size(), 1);
  int timer = 0;
  std::function<void(int, int)> dfs = [&](int u, int parent_edge) {
    disc[u] = low[u] = timer++;
    for (auto [v, e]: adj[u]) {
      if (e == parent_edge)
        continue;
      if (disc[v] >= 0) {
        low[u] = std::min(low[u], disc[v]);
      } else {
        dfs(v, e);
        low[u] = std::min(low[u], low[v]);
        if (low[v] > disc[u])
          in_ring[e] = 0;
      }
    }
  };
  for (int i = 0; i < n; ++i)
    if (disc[i] < 0)
      dfs(i, -1);
  return in_ring;
}

MolGraph SmilesParser::finish() {
  const int n = static_cast<int>(atoms_.size());
  const std::vector<char> in_ring = ring_bond_flags(n, bonds_);

  // Fold [H] atoms into their neighbors.
  std::vector<int> degree(n, 0);
  for (const RawBond &rb: bonds_) {
    ++degree[rb.a];
    ++degree[rb.b];
  }
  std::vector<int> new_index(n, -1);
  std::vector<int> h_owner(n, -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    if (atoms_[i].atom.atomic_number != 1) {
      new_index[i] = next++;
      continue;
    }
    if (degree[i] != 1)
      throw UnsupportedFeatureError("hydrogen atoms must have exactly one "
                                    "neighbor");
    if (atoms_[i].atom.formal_charge != 0)
      throw UnsupportedFeatureError("charged hydrogen atoms are not "
                                    "supported");
  }
  for (const RawBond &rb: bonds_) {
    const bool ha = atoms_[rb.a].atom.atomic_number == 1;
    const bool hb = atoms_[rb.b].atom.atomic_number == 1;
    if (ha && hb)
      throw UnsupportedFeatureError("molecular hydrogen is not supported");
    if (ha) {
      h_owner[rb.a] = rb.b;
      ++atoms_[rb.b].atom.explicit_h_count;
    } else if (hb) {
      h_owner[rb.b] = rb.a;
      ++atoms_[rb.a].atom.explicit_h_count;
    }
  }

  MolGraph g;
  for (int i = 0; i < n; ++i) {
    if (new_index[i] < 0)
      continue;
    AtomNode a = atoms_[i].atom;
    a.chiral_tag = ChiralTag::None;
    g.add_atom(a);
  }
  for (int e = 0; e < static_cast<int>(bonds_.size()); ++e) {
    const RawBond &rb = bonds_[e];
    if (new_index[rb.a] < 0 || new_index[rb.b] < 0)
      continue;
    Bond b;
    switch (rb.sym) {
    case '=': b.type = BondType::Double; break;
    case '#': b.type = BondType::Triple; break;
    case ':': b.type = BondType::Aromatic; break;
    case '\0':
      b.type = atoms_[rb.a].atom.is_aromatic && atoms_[rb.b].atom.is_aromatic
                       && (rb.ring_closure || in_ring[e])
                   ? BondType::Aromatic
                   : BondType::Single;
      break;
    default: b.type = BondType::Single; break;
    }
    g.set_bond(new_index[rb.a], new_index[rb.b], b);
  }

  // Chirality: translate the written neighbor order into stored tags.
  for (int i = 0; i < n; ++i) {
    if (new_index[i] < 0 || atoms_[i].written_tag == ChiralTag::None)
      continue;
    const int a = new_index[i];
    std::vector<int> order;
    bool has_h = false;
    for (int x: atoms_[i].order) {
      if (x == kHydrogenSlot || (x >= 0 && new_index[x] < 0)) {
        order.push_back(kHydrogenSlot);
        has_h = true;
      } else {
        order.push_back(new_index[x]);
      }
    }
    if (!has_h && total_h_count(g, a) > 0)
      order.insert(order.begin() + (atoms_[i].has_prev ? 1 : 0),
                   kHydrogenSlot);
    g.atom(a).chiral_tag = chiral_tag_from_order(g, a, atoms_[i].written_tag,
                                                 order);
  }

  // E/Z. Outward direction chars, keyed by (atom, substituent) in raw indices.
  OutwardMap outward;
  for (auto [from, to, ch]: directions_) {
    outward.emplace(std::pair { from, to }, ch);
    outward.emplace(std::pair { to, from }, flip(ch));
  }
  if (!outward.empty()) {
    std::vector<std::vector<int>> adj(n);
    for (const RawBond &rb: bonds_) {
      adj[rb.a].push_back(rb.b);
      adj[rb.b].push_back(rb.a);
    }
    for (const RawBond &rb: bonds_) {
      if (rb.sym != '=' || new_index[rb.a] < 0 || new_index[rb.b] < 0)
        continue;
      // Returns (heavy substituent, outward char) for one side, or (-1, 0).
      auto side = [&](int p, int q) -> std::pair<int, char> {
        int marked = -1;
        char ch = '\0';
        for (int x: adj[p]) {
          if (x == q)
            continue;
          auto it = outward.find({ p, x });
          if (it != outward.end()) {
            marked = x;
            ch = it->second;
            break;
          }
        }
        if (marked < 0)
          return { -1, '\0' };
        if (new_index[marked] >= 0)
          return { new_index[marked], ch };
        // Marked substituent is a folded hydrogen: use the other heavy one.
        for (int x: adj[p])
          if (x != q && x != marked && new_index[x] >= 0)
            return { new_index[x], flip(ch) };
        return { -1, '\0' };
      };
      auto [x, cx] = side(rb.a, rb.b);
      auto [y, cy] = side(rb.b, rb.a);
      if (x < 0 || y < 0)
        continue;
      const int u = new_index[rb.a], v = new_index[rb.b];
      const BondStereo rel = cx != cy ? BondStereo::E : BondStereo::Z;
      g.bond(u, v)->stereo = stereo_from_relative(g, u, v, x, y, rel);
    }
  }

  check_valence(g);
  return g;
}

// --- canonical ranking ----------------------------------------------------

int bond_code(const Bond &b) {
  int code = static_cast<int>(b.type) + 1;
  if (b.stereo != BondStereo::None)
    code += 16;
  return code;
}

// Dense ranks of the given keys (equal keys share a rank).
template <class Key>
std::vector<int> dense_ranks(const std::vector<Key> &keys) {
  std::vector<int> idx(keys.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](int a, int b) { return keys[a] < keys[b]; });
  std::vector<int> rank(keys.size(), 0);
  int r = 0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (k > 0 && keys[idx[k - 1]] < keys[idx[k]])
      ++r;
    rank[idx[k]] = r;
  }
  return rank;
}

int count_classes(const std::vector<int> &rank) {
  return rank.empty() ? 0 : *std::max_element(rank.begin(), rank.end()) + 1;
}

std::vector<int> refine(const MolGraph &g, std::vector<int> rank) {
  const int n = g.size();
  int classes = count_classes(rank);
  while (true) {
    std::vector<std::vector<int>> keys(n);
    for (int i = 0; i < n; ++i) {
      std::vector<int> nbr;
      for (int j: g.neighbors(i))
        nbr.push_back(bond_code(*g.bond(i, j)) * (n + 1) + rank[j]);
      std::sort(nbr.begin(), nbr.end());
      keys[i].reserve(nbr.size() + 1);
      keys[i].push_back(rank[i]);
      keys[i].insert(keys[i].end(), nbr.begin(), nbr.end());
    }
    std::vector<int> next = dense_ranks(keys);
    const int next_classes = count_classes(next);
    rank = std::move(next);
    if (next_classes == classes)
      return rank;
    classes = next_classes;
  }
}

// Symmetry-class refinement followed by deterministic tie breaking. Returns
// a total order (distinct ranks).
std::vector<int> atom_ranks(const MolGraph &g, bool keep_maps) {
  const int n = g.size();
  std::vector<std::vector<int>> keys(n);
  for (int i = 0; i < n; ++i) {
    const AtomNode &a = g.atom(i);
    keys[i] = { heavy_degree(g, i),
                a.atomic_number,
                a.is_aromatic ? 1 : 0,
                a.formal_charge,
                total_h_count(g, i),
                keep_maps ? a.map_number : 0,
                a.chiral_tag == ChiralTag::None ? 0 : 1 };
  }
  std::vector<int> rank = refine(g, dense_ranks(keys));
  while (count_classes(rank) < n) {
    std::vector<int> count(n, 0);
    for (int r: rank)
      ++count[r];
    int tied = 0;
    while (count[tied] < 2)
      ++tied;
    int chosen = -1;
    for (int i = 0; i < n; ++i)
      if (rank[i] == tied) {
        chosen = i;
        break;
      }
    std::vector<int> split(n);
    for (int i = 0; i < n; ++i)
      split[i] = rank[i] * 2 + (rank[i] == tied && i != chosen ? 1 : 0);
    rank = refine(g, dense_ranks(split));
  }
  return rank;
}

// --- writer ---------------------------------------------------------------

std::string atom_token(const MolGraph &g, int i, ChiralTag tag,
                       bool keep_maps) {
  const AtomNode &a = g.atom(i);
  const int h = total_h_count(g, i);
  const int map = keep_maps ? a.map_number : 0;
  std::string symbol(element_symbol(a.atomic_number));
  if (a.is_aromatic)
    symbol[0] = static_cast<char>(std::tolower(symbol[0]));

  bool organic = is_organic_subset(a.atomic_number) && a.formal_charge == 0
                 && tag == ChiralTag::None && map == 0;
  if (organic && a.is_aromatic) {
    const int z = a.atomic_number;
    organic = z == 5 || z == 6 || z == 7 || z == 8 || z == 15 || z == 16;
  }
  if (organic) {
    MolGraph probe_free = g;
    probe_free.atom(i).explicit_h_count = 0;
    organic = implicit_h_count(probe_free, i) == h;
  }
  if (organic)
    return symbol;

  std::string out = "[" + symbol;
  if (tag == ChiralTag::CCW)
    out += "@";
  else if (tag == ChiralTag::CW)
    out += "@@";
  if (h > 0) {
    out += "H";
    if (h > 1)
      out += std::to_string(h);
  }
  if (a.formal_charge != 0) {
    out += a.formal_charge > 0 ? "+" : "-";
    const int m = std::abs(a.formal_charge);
    if (m > 1)
      out += std::to_string(m);
  }
  if (map > 0)
    out += ":" + std::to_string(map);
  out += "]";
  return out;
}

class SmilesWriter {
public:
  SmilesWriter(const MolGraph &g, std::vector<int> rank, bool keep_maps)
      : g_(g), rank_(std::move(rank)), keep_maps_(keep_maps),
        parent_(g.size(), -1), children_(g.size()), rings_at_(g.size()),
        pos_(g.size(), -1), visited_(g.size(), 0), on_stack_(g.size(), 0) { }

  // Returns component strings (unsorted) and their atom output orders.
  void run(std::vector<std::string> &strings,
           std::vector<std::vector<int>> &orders);

private:
  struct RingBond {
    int opener, closer;
  };

  void build_tree(int u);
  void assign_directions();
  void emit(int u, std::string &out);
  std::string bond_symbol(int from, int to) const;
  std::vector<int> output_neighbor_order(int u) const;
  // Sorted ring bond ids at u: closures first, then openings.
  const std::vector<int> &ring_items(int u) const { return rings_at_[u]; }

  const MolGraph &g_;
  std::vector<int> rank_;
  bool keep_maps_;

  std::vector<int> parent_;
  std::vector<std::vector<int>> children_;
  std::vector<RingBond> ring_bonds_;
  std::vector<std::vector<int>> rings_at_;
  std::vector<int> pos_;
  std::vector<char> visited_, on_stack_;
  int counter_ = 0;
  std::vector<int> current_order_;

  // Written direction char for oriented edges (from, to).
  std::map<std::pair<int, int>, char> written_dir_;
  std::vector<int> digit_of_ring_;
  std::vector<char> digit_used_;
};

void SmilesWriter::build_tree(int u) {
  visited_[u] = 1;
  on_stack_[u] = 1;
  pos_[u] = counter_++;
  current_order_.push_back(u);

  std::vector<int> nbrs;
  for (int v: g_.neighbors(u))
    if (!g_.atom(v).is_supernode)
      nbrs.push_back(v);
  std::sort(nbrs.begin(), nbrs.end(),
            [&](int a, int b) { return rank_[a] < rank_[b]; });
  for (int v: nbrs) {
    if (v == parent_[u])
      continue;
    if (visited_[v]) {
      if (on_stack_[v]) {
        rings_at_[v].push_back(static_cast<int>(ring_bonds_.size()));
        rings_at_[u].push_back(static_cast<int>(ring_bonds_.size()));
        ring_bonds_.push_back({ v, u });
      }
      continue;
    }
    parent_[v] = u;
    children_[u].push_back(v);
    build_tree(v);
  }
  on_stack_[u] = 0;
}

void SmilesWriter::run(std::vector<std::string> &strings,
                       std::vector<std::vector<int>> &orders) {
  std::vector<int> atoms;
  for (int i = 0; i < g_.size(); ++i)
    if (!g_.atom(i).is_supernode)
      atoms.push_back(i);
  std::sort(atoms.begin(), atoms.end(),
            [&](int a, int b) { return rank_[a] < rank_[b]; });

  std::vector<int> roots;
  for (int r: atoms) {
    if (visited_[r])
      continue;
    roots.push_back(r);
    current_order_.clear();
    build_tree(r);
    orders.push_back(current_order_);
  }

  // Ring items at each atom: closures (u is the closer) first in opener
  // output order, then openings in closer output order.
  for (int u = 0; u < g_.size(); ++u) {
    auto &items = rings_at_[u];
    std::sort(items.begin(), items.end(), [&](int a, int b) {
      const RingBond &ra = ring_bonds_[a], &rb = ring_bonds_[b];
      const bool ca = ra.closer == u, cb = rb.closer == u;
      if (ca != cb)
        return ca;
      if (ca)
        return pos_[ra.opener] < pos_[rb.opener];
      return pos_[ra.closer] < pos_[rb.closer];
    });
  }

  assign_directions();

  digit_of_ring_.assign(ring_bonds_.size(), 0);
  for (int r: roots) {
    digit_used_.assign(100, 0);
    std::string s;
    emit(r, s);
    strings.push_back(std::move(s));
  }
}

std::vector<int> SmilesWriter::output_neighbor_order(int u) const {
  std::vector<int> order;
  if (parent_[u] >= 0)
    order.push_back(parent_[u]);
  if (total_h_count(g_, u) > 0)
    order.push_back(kHydrogenSlot);
  for (int id: rings_at_[u]) {
    const RingBond &rb = ring_bonds_[id];
    order.push_back(rb.opener == u ? rb.closer : rb.opener);
  }
  for (int c: children_[u])
    order.push_back(c);
  return order;
}

void SmilesWriter::assign_directions() {
  // Orientation of every edge as written: tree edges parent -> child, ring
  // bonds opener -> closer.
  auto oriented = [&](int a, int b) {
    if (parent_[b] == a)
      return true;
    if (parent_[a] == b)
      return false;
    for (const RingBond &rb: ring_bonds_) {
      if (rb.opener == a && rb.closer == b)
        return true;
      if (rb.opener == b && rb.closer == a)
        return false;
    }
    return true;
  };
  // Outward char seen from p towards substituent x, if assigned.
  auto outward = [&](int p, int x) -> char {
    const bool fwd = oriented(p, x);
    auto it = fwd ? written_dir_.find({ p, x }) : written_dir_.find({ x, p });
    if (it == written_dir_.end())
      return '\0';
    return fwd ? it->second : flip(it->second);
  };
  auto set_outward = [&](int p, int x, char c) {
    if (oriented(p, x))
      written_dir_[{ p, x }] = c;
    else
      written_dir_[{ x, p }] = flip(c);
  };

  std::vector<BondKey> stereo_bonds;
  for (const auto &[key, b]: g_.bonds())
    if (b.stereo != BondStereo::None && b.type == BondType::Double)
      stereo_bonds.push_back(key);
  std::sort(stereo_bonds.begin(), stereo_bonds.end(),
            [&](const BondKey &a, const BondKey &b) {
              return std::min(pos_[a.first], pos_[a.second])
                     < std::min(pos_[b.first], pos_[b.second]);
            });

  for (const BondKey &key: stereo_bonds) {
    int p = key.first, q = key.second;
    if (pos_[q] < pos_[p])
      std::swap(p, q);
    auto substituents = [&](int a, int b) {
      std::vector<int> out;
      for (int x: g_.neighbors(a))
        if (x != b && !g_.atom(x).is_supernode
            && g_.bond(a, x)->type == BondType::Single)
          out.push_back(x);
      std::sort(out.begin(), out.end(),
                [&](int l, int r) { return pos_[l] < pos_[r]; });
      return out;
    };
    const std::vector<int> sp = substituents(p, q), sq = substituents(q, p);
    if (sp.empty() || sq.empty())
      continue;

    bool placed = false;
    for (int x: sp) {
      for (int y: sq) {
        const BondStereo rel = stereo_relative_to(g_, p, q, x, y);
        const char ox = outward(p, x), oy = outward(q, y);
        char want_x = ox, want_y = oy;
        if (want_x == '\0' && want_y == '\0') {
          // First marker of the bond is written as '/'.
          want_x = oriented(p, x) ? '/' : '\\';
        }
        if (want_x == '\0')
          want_x = rel == BondStereo::E ? flip(want_y) : want_y;
        if (want_y == '\0')
          want_y = rel == BondStereo::E ? flip(want_x) : want_x;
        const bool consistent = (rel == BondStereo::E) == (want_x != want_y);
        if (!consistent)
          continue;
        // The other substituents must not contradict the chosen ones.
        bool clash = false;
        for (int x2: sp)
          if (x2 != x && outward(p, x2) == want_x)
            clash = true;
        for (int y2: sq)
          if (y2 != y && outward(q, y2) == want_y)
            clash = true;
        if (clash)
          continue;
        set_outward(p, x, want_x);
        set_outward(q, y, want_y);
        placed = true;
        break;
      }
      if (placed)
        break;
    }
  }
}

std::string SmilesWriter::bond_symbol(int from, int to) const {
  const Bond *b = g_.bond(from, to);
  const bool both_aromatic = g_.atom(from).is_aromatic
                             && g_.atom(to).is_aromatic;
  switch (b->type) {
  case BondType::Single: {
    auto it = written_dir_.find({ from, to });
    if (it != written_dir_.end())
      return std::string(1, it->second);
    return both_aromatic ? "-" : "";
  }
  case BondType::Double: return "=";
  case BondType::Triple: return "#";
  case BondType::Aromatic: return both_aromatic ? "" : ":";
  default: return "";
  }
}

void SmilesWriter::emit(int u, std::string &out) {
  ChiralTag tag = g_.atom(u).chiral_tag;
  if (tag != ChiralTag::None) {
    const std::vector<int> order = output_neighbor_order(u);
    tag = chiral_tag_in_order(g_, u, order);
  }
  out += atom_token(g_, u, tag, keep_maps_);

  for (int id: rings_at_[u]) {
    const RingBond &rb = ring_bonds_[id];
    int digit;
    if (rb.closer == u) {
      digit = digit_of_ring_[id];
      digit_used_[digit] = 0;
    } else {
      digit = 1;
      while (digit_used_[digit])
        ++digit;
      digit_used_[digit] = 1;
      digit_of_ring_[id] = digit;
      out += bond_symbol(rb.opener, rb.closer);
    }
    if (digit >= 10)
      out += "%" + std::to_string(digit);
    else
      out += static_cast<char>('0' + digit);
  }

  const auto &kids = children_[u];
  for (std::size_t k = 0; k < kids.size(); ++k) {
    const bool last = k + 1 == kids.size();
    if (!last)
      out += "(";
    out += bond_symbol(u, kids[k]);
    emit(kids[k], out);
    if (!last)
      out += ")";
  }
}

struct WriteResult {
  std::string text;
  std::vector<int> position;
};

WriteResult write_impl(const MolGraph &input, bool canonical, bool keep_maps) {
  const MolGraph g = input.has_supernode() ? remove_supernode(input) : input;
  check_valence(g);

  std::vector<int> rank(g.size());
  if (canonical) {
    rank = atom_ranks(g, keep_maps);
  } else {
    std::iota(rank.begin(), rank.end(), 0);
  }

  SmilesWriter writer(g, rank, keep_maps);
  std::vector<std::string> strings;
  std::vector<std::vector<int>> orders;
  writer.run(strings, orders);

  std::vector<int> comp(strings.size());
  std::iota(comp.begin(), comp.end(), 0);
  if (canonical)
    std::stable_sort(comp.begin(), comp.end(),
                     [&](int a, int b) { return strings[a] < strings[b]; });

  WriteResult result;
  result.position.assign(g.size(), -1);
  int p = 0;
  for (std::size_t k = 0; k < comp.size(); ++k) {
    if (k > 0)
      result.text += ".";
    result.text += strings[comp[k]];
    for (int a: orders[comp[k]])
      result.position[a] = p++;
  }
  return result;
}

}  // namespace

MolGraph parse_smiles(std::string_view text, std::vector<std::string> *warnings) {
  SmilesParser parser(text, warnings);
  return parser.parse();
}

std::string write_smiles(const MolGraph &g, bool canonical, bool keep_maps) {
  return write_impl(g, canonical, keep_maps).text;
}

std::vector<int> canonical_ranks(const MolGraph &g, bool keep_maps) {
  return write_impl(g, true, keep_maps).position;
}

std::string canonical_key(const MolGraph &g) {
  MolGraph copy = strip_maps(g.has_supernode() ? remove_supernode(g) : g);
  copy = clear_edit_flags(std::move(copy));
  perceive_aromaticity(copy);
  return write_smiles(copy, true, false);
}

std::string canonical_key(std::string_view smiles) {
  return canonical_key(parse_smiles(smiles));
}

}  // namespace megan
