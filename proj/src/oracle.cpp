//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "megan/oracle.h"

#include <algorithm>
#include <deque>
#include <functional>
#include <numeric>
#include <set>
#include <unordered_map>

#include "megan/error.h"
#include "megan/smiles.h"

namespace megan {

namespace {

void append(MolGraph &dst, const MolGraph &src) {
  const int offset = dst.size();
  for (const AtomNode &a: src.atoms())
    dst.add_atom(a);
  for (const auto &[key, b]: src.bonds())
    dst.set_bond(key.first + offset, key.second + offset, b);
}

void check_unique_maps(const MolGraph &g, std::string_view side) {
  std::set<int> seen;
  for (const AtomNode &a: g.atoms())
    if (a.map_number != 0 && !seen.insert(a.map_number).second)
      throw MappingError("duplicate map number " + std::to_string(a.map_number)
                         + " in " + std::string(side));
}

std::set<int> map_set(const MolGraph &g) {
  std::set<int> out;
  for (const AtomNode &a: g.atoms())
    if (a.map_number != 0)
      out.insert(a.map_number);
  return out;
}

int clear_maps_not_in(MolGraph &g, const std::set<int> &keep) {
  int cleared = 0;
  for (int i = 0; i < g.size(); ++i) {
    int &m = g.atom(i).map_number;
    if (m != 0 && !keep.count(m)) {
      m = 0;
      ++cleared;
    }
  }
  return cleared;
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c: s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

int pick(std::mt19937_64 &rng, int n) {
  return static_cast<int>(rng() % static_cast<std::uint64_t>(n));
}

bool same_atom_state(const AtomNode &a, const EditAction &want) {
  return a.formal_charge == want.formal_charge
         && a.chiral_tag == want.chiral_tag
         && a.explicit_h_count == want.explicit_h_count
         && a.is_aromatic == want.is_aromatic;
}

bool benzene_atom(const MolGraph &t, int i) {
  const AtomNode &a = t.atom(i);
  return a.atomic_number == 6 && a.is_aromatic && a.formal_charge == 0
         && a.chiral_tag == ChiralTag::None && a.explicit_h_count == 0;
}

}  // namespace

std::string_view to_string(Direction d) {
  return d == Direction::Retro ? "retro" : "forward";
}

Direction parse_direction(std::string_view s) {
  if (s == "retro")
    return Direction::Retro;
  if (s == "forward")
    return Direction::Forward;
  throw ConfigError("unknown direction '" + std::string(s) + "'");
}

std::string_view to_string(OrderingStrategy s) {
  switch (s) {
  case OrderingStrategy::BfsRandAt: return "bfs-rand";
  case OrderingStrategy::DfsRandAt: return "dfs-rand";
  case OrderingStrategy::BfsCanoAt: return "bfs-cano";
  case OrderingStrategy::DfsCanoAt: return "dfs-cano";
  case OrderingStrategy::Random: return "random";
  }
  return "?";
}

OrderingStrategy parse_ordering(std::string_view s) {
  for (OrderingStrategy o: kAllOrderings)
    if (to_string(o) == s)
      return o;
  throw ConfigError("unknown ordering '" + std::string(s) + "'");
}

int priority(EditCategory c, Direction d) {
  switch (c) {
  case EditCategory::DeleteBond: return d == Direction::Retro ? 1 : 2;
  case EditCategory::AddBond: return d == Direction::Retro ? 2 : 1;
  case EditCategory::OtherBond: return 3;
  case EditCategory::EditAtom: return 4;
  case EditCategory::AddBenzene: return 5;
  case EditCategory::AddAtom: return 6;
  }
  return 7;
}

Reaction parse_reaction(std::string_view rxn, Direction direction,
                        std::optional<int> reaction_class,
                        ReactionPrepStats *stats) {
  const auto p1 = rxn.find('>');
  const auto p2 = p1 == std::string_view::npos ? p1 : rxn.find('>', p1 + 1);
  if (p2 == std::string_view::npos || rxn.find('>', p2 + 1) != rxn.npos)
    throw SyntaxError(0, "reaction SMILES needs the form "
                         "reactants>reagents>product");
  const std::string_view reactants = rxn.substr(0, p1);
  const std::string_view reagents = rxn.substr(p1 + 1, p2 - p1 - 1);
  const std::string_view product = rxn.substr(p2 + 1);

  Reaction r;
  r.direction = direction;
  r.reaction_class = reaction_class;
  MolGraph subs = parse_smiles(reactants);
  if (direction == Direction::Forward) {
    for (int i = 0; i < subs.size(); ++i)
      subs.atom(i).in_reactant = true;
    if (!reagents.empty())
      append(subs, parse_smiles(reagents));
  }
  MolGraph prod = parse_smiles(product);
  subs = normalize_hydrogens(std::move(subs));
  prod = normalize_hydrogens(std::move(prod));
  check_unique_maps(subs, "substrates");
  check_unique_maps(prod, "product");
  if (prod.empty())
    throw MappingError("empty product");

  ReactionPrepStats local;
  const std::set<int> sub_maps = map_set(subs);
  const std::set<int> prod_maps = map_set(prod);
  if (direction == Direction::Retro) {
    for (int i = 0; i < prod.size(); ++i) {
      const int m = prod.atom(i).map_number;
      if (m == 0)
        throw MappingError("product atom " + std::to_string(i)
                           + " is unmapped");
      if (!sub_maps.count(m))
        throw MappingError("product map " + std::to_string(m)
                           + " has no substrate atom");
    }
    local.cleared_maps += clear_maps_not_in(subs, prod_maps);
    std::vector<int> keep;
    for (const auto &comp: connected_components(subs)) {
      const bool mapped = std::any_of(comp.begin(), comp.end(), [&](int a) {
        return subs.atom(a).map_number != 0;
      });
      if (mapped)
        keep.insert(keep.end(), comp.begin(), comp.end());
      else
        ++local.dropped_molecules;
    }
    std::sort(keep.begin(), keep.end());
    if (static_cast<int>(keep.size()) != subs.size())
      subs = induced_subgraph(subs, keep);
  } else {
    local.cleared_maps += clear_maps_not_in(prod, sub_maps);
    local.cleared_maps += clear_maps_not_in(subs, map_set(prod));
  }
  if (stats != nullptr) {
    stats->dropped_molecules += local.dropped_molecules;
    stats->cleared_maps += local.cleared_maps;
  }
  r.substrates = std::move(subs);
  r.product = std::move(prod);
  return r;
}

// --- oracle state ---------------------------------------------------------

OracleState::OracleState(const Reaction &r) : direction_(r.direction) {
  const MolGraph &src = r.source();
  MolGraph s = clear_edit_flags(src.has_supernode() ? remove_supernode(src)
                                                    : src);
  target_ = clear_edit_flags(r.target().has_supernode()
                                 ? remove_supernode(r.target())
                                 : r.target());
  graph_ = add_supernode(s);
  const int n = s.size();
  target_of_.assign(n, -1);
  state_of_.assign(target_.size(), -1);

  std::unordered_map<int, int> target_by_map;
  for (int t = 0; t < target_.size(); ++t)
    if (target_.atom(t).map_number != 0)
      target_by_map[target_.atom(t).map_number] = t;
  for (int a = 0; a < n; ++a) {
    const int m = s.atom(a).map_number;
    if (m == 0)
      continue;
    auto it = target_by_map.find(m);
    if (it == target_by_map.end())
      continue;
    target_of_[a] = it->second;
    state_of_[it->second] = a;
  }
  if (direction_ == Direction::Retro)
    for (int a = 0; a < n; ++a)
      if (target_of_[a] < 0)
        throw MappingError("source atom " + std::to_string(a)
                           + " has no target atom");

  // Every target-only atom must hang off a mapped atom.
  std::vector<char> reached(target_.size(), 0);
  std::deque<int> queue;
  for (int t = 0; t < target_.size(); ++t)
    if (state_of_[t] >= 0) {
      reached[t] = 1;
      queue.push_back(t);
    }
  while (!queue.empty()) {
    const int t = queue.front();
    queue.pop_front();
    for (int u: target_.neighbors(t))
      if (!reached[u]) {
        reached[u] = 1;
        queue.push_back(u);
      }
  }
  const int unreached = static_cast<int>(
      std::count(reached.begin(), reached.end(), 0));
  if (unreached > 0)
    throw UnreachableAtomsError(std::to_string(unreached)
                                + " target atoms are not connected to any "
                                  "mapped atom");

  target_ranks_ = target_.empty() ? std::vector<int> {}
                                  : canonical_ranks(target_, false);
  for (const AtomNode &a: target_.atoms())
    if (a.chiral_tag != ChiralTag::None)
      target_has_stereo_ = true;
  for (const auto &[key, b]: target_.bonds())
    if (b.stereo != BondStereo::None)
      target_has_stereo_ = true;

  // Benzene rings made only of target-only atoms.
  rings_of_atom_.assign(target_.size(), {});
  auto aromatic_bond = [&](int a, int b) {
    const Bond *bd = target_.bond(a, b);
    return bd != nullptr && bd->type == BondType::Aromatic;
  };
  for (int a0 = 0; a0 < target_.size(); ++a0) {
    if (state_of_[a0] >= 0 || !benzene_atom(target_, a0))
      continue;
    std::vector<int> path { a0 };
    std::function<void()> extend = [&]() {
      const int last = path.back();
      if (path.size() == 6) {
        if (aromatic_bond(last, a0) && path[1] < path[5]) {
          const int id = static_cast<int>(benzene_rings_.size());
          benzene_rings_.push_back(path);
          for (int x: path)
            rings_of_atom_[x].push_back(id);
        }
        return;
      }
      for (int nb: target_.neighbors(last)) {
        if (nb <= a0 || state_of_[nb] >= 0 || !benzene_atom(target_, nb)
            || !aromatic_bond(last, nb)
            || std::find(path.begin(), path.end(), nb) != path.end())
          continue;
        path.push_back(nb);
        extend();
        path.pop_back();
      }
    };
    extend();
  }

  target_key_ = canonical_key(target_);

  guess_.assign(target_.size(), -1);
  int next = n;
  for (int t = 0; t < target_.size(); ++t)
    guess_[t] = state_of_[t] >= 0 ? state_of_[t] : next++;
}

int OracleState::canonical_rank(int atom) const {
  const int t = target_of_[atom];
  return t >= 0 ? target_ranks_[t] : target_.size() + atom;
}

int OracleState::final_index(int t) const {
  return state_of_[t] >= 0 ? state_of_[t] : guess_[t];
}

std::vector<int> OracleState::final_indices() const {
  std::vector<int> out(target_.size());
  for (int t = 0; t < target_.size(); ++t)
    out[t] = final_index(t);
  return out;
}

bool OracleState::in_missing_benzene(int t) const {
  for (int id: rings_of_atom_[t]) {
    const auto &ring = benzene_rings_[id];
    if (std::all_of(ring.begin(), ring.end(),
                    [&](int x) { return state_of_[x] < 0; }))
      return true;
  }
  return false;
}

ChiralTag OracleState::desired_chiral(int t) const {
  const ChiralTag tag = target_.atom(t).chiral_tag;
  if (tag == ChiralTag::None)
    return tag;
  std::vector<int> order = chiral_reference_order(target_, t);
  for (int &x: order)
    if (x != kHydrogenSlot)
      x = final_index(x);
  return chiral_tag_from_order(target_, t, tag, order);
}

BondStereo OracleState::desired_stereo(int ta, int tb) const {
  const Bond *b = target_.bond(ta, tb);
  if (b == nullptr || b->stereo == BondStereo::None)
    return BondStereo::None;
  auto [xt, yt] = stereo_reference(target_, ta, tb);
  if (xt < 0 || yt < 0)
    return BondStereo::None;
  auto lowest = [&](int p, int q) {
    int best = -1;
    for (int nb: target_.neighbors(p))
      if (nb != q) {
        const int f = final_index(nb);
        if (best < 0 || f < best)
          best = f;
      }
    return best;
  };
  const int flips = (final_index(xt) != lowest(ta, tb) ? 1 : 0)
                    + (final_index(yt) != lowest(tb, ta) ? 1 : 0);
  return flips & 1 ? invert(b->stereo) : b->stereo;
}

EditAction OracleState::desired_atom_action(int t) const {
  const AtomNode &a = target_.atom(t);
  return EditAction::edit_atom(a.formal_charge, desired_chiral(t),
                               a.explicit_h_count, a.is_aromatic);
}

PendingEditSet OracleState::pending() const {
  PendingEditSet p;
  const int n = graph_.num_atoms();
  for (int a = 0; a < n; ++a) {
    const int t = target_of_[a];
    if (t < 0)
      continue;
    const EditAction want = desired_atom_action(t);
    if (!same_atom_state(graph_.atom(a), want))
      p.atom_edits.emplace(a, want);
  }

  for (const auto &[key, bond]: graph_.bonds()) {
    const auto [a, b] = key;
    if (graph_.atom(a).is_supernode || graph_.atom(b).is_supernode)
      continue;
    const int ta = target_of_[a], tb = target_of_[b];
    if (ta < 0 && tb < 0)
      continue;
    const Bond *want = ta >= 0 && tb >= 0 ? target_.bond(ta, tb) : nullptr;
    if (want == nullptr) {
      p.bond_edits.emplace(key, EditAction::delete_bond());
      continue;
    }
    const BondStereo stereo = desired_stereo(ta, tb);
    if (bond.type != want->type || bond.stereo != stereo)
      p.bond_edits.emplace(key, EditAction::edit_bond(want->type, stereo));
  }
  for (const auto &[key, tbond]: target_.bonds()) {
    const int a = state_of_[key.first], b = state_of_[key.second];
    if (a < 0 || b < 0 || graph_.has_bond(a, b))
      continue;
    p.bond_edits.emplace(bond_key(a, b),
                         EditAction::edit_bond(tbond.type,
                                               desired_stereo(key.first,
                                                              key.second)));
  }

  for (int t = 0; t < target_.size(); ++t) {
    if (state_of_[t] >= 0)
      continue;
    ++p.missing_atoms;
    for (int u: target_.neighbors(t)) {
      const int anchor = state_of_[u];
      if (anchor < 0)
        continue;
      const Bond *tb = target_.bond(u, t);
      bool benzene = false;
      if (tb->type == BondType::Single
          && graph_.atom(anchor).atomic_number == 6) {
        for (int id: rings_of_atom_[t]) {
          const auto &ring = benzene_rings_[id];
          if (!std::all_of(ring.begin(), ring.end(),
                           [&](int x) { return state_of_[x] < 0; }))
            continue;
          // Rotate so that t comes first; walk towards the neighbor with the
          // smaller canonical rank.
          const int pos = static_cast<int>(
              std::find(ring.begin(), ring.end(), t) - ring.begin());
          const int fwd = ring[(pos + 1) % 6], bwd = ring[(pos + 5) % 6];
          const int step = target_ranks_[fwd] < target_ranks_[bwd] ? 1 : 5;
          std::vector<int> oriented;
          for (int k = 0; k < 6; ++k)
            oriented.push_back(ring[(pos + k * step) % 6]);
          p.atom_additions.push_back({ anchor, std::move(oriented),
                                       EditAction::add_benzene() });
          benzene = true;
          break;
        }
      }
      if (benzene)
        continue;
      const AtomNode &ta = target_.atom(t);
      p.atom_additions.push_back(
          { anchor,
            { t },
            EditAction::add_atom(ta.atomic_number, ta.formal_charge,
                                 desired_chiral(t), ta.explicit_h_count,
                                 ta.is_aromatic, tb->type,
                                 desired_stereo(u, t)) });
    }
  }
  return p;
}

void OracleState::apply(const EditAction &a, const ActionTarget &t,
                        const std::vector<int> &added_target_atoms) {
  const int before = graph_.num_atoms();
  graph_ = apply_action(graph_, a, t).graph;
  const int added = graph_.num_atoms() - before;
  for (int k = 0; k < added; ++k) {
    const int tgt = k < static_cast<int>(added_target_atoms.size())
                        ? added_target_atoms[k]
                        : -1;
    target_of_.push_back(tgt);
    if (tgt >= 0)
      state_of_[tgt] = before + k;
  }
}

std::string OracleState::reconstruction_key() const {
  if (direction_ == Direction::Retro)
    return canonical_key(graph_);
  const MolGraph g = remove_supernode(graph_);
  std::vector<int> keep;
  for (int a = 0; a < g.size(); ++a)
    if (target_of_[a] >= 0)
      keep.push_back(a);
  return canonical_key(induced_subgraph(g, keep));
}

PendingEditSet diff_reaction(const Reaction &r) {
  return OracleState(r).pending();
}

std::vector<Candidate> candidate_actions(const OracleState &s) {
  const PendingEditSet p = s.pending();
  std::vector<Candidate> out;
  for (const auto &[a, act]: p.atom_edits)
    out.push_back({ a, EditCategory::EditAtom, act, ActionTarget::atom(a), -1,
                    {} });
  for (const auto &[key, act]: p.bond_edits) {
    const EditCategory c = act.bond_delete ? EditCategory::DeleteBond
                           : s.graph().has_bond(key.first, key.second)
                               ? EditCategory::OtherBond
                               : EditCategory::AddBond;
    const ActionTarget t = ActionTarget::pair(key.first, key.second);
    out.push_back({ key.first, c, act, t, key.second, {} });
    out.push_back({ key.second, c, act, t, key.first, {} });
  }
  for (const auto &add: p.atom_additions) {
    const EditCategory c = add.action.kind == ActionKind::AddBenzene
                               ? EditCategory::AddBenzene
                               : EditCategory::AddAtom;
    out.push_back({ add.anchor, c, add.action, ActionTarget::atom(add.anchor),
                    add.target_atoms.front(), add.target_atoms });
  }
  return out;
}

Choice next_action(const OracleState &s, const OrderingPolicy &policy,
                   const std::vector<int> &order, std::mt19937_64 &rng,
                   OracleStats *stats) {
  const std::vector<Candidate> cands = candidate_actions(s);
  const MolGraph &g = s.graph();
  if (cands.empty())
    return { EditAction::stop(), ActionTarget::atom(g.supernode()), {} };

  std::vector<int> atoms;
  for (const Candidate &c: cands)
    atoms.push_back(c.atom);
  std::sort(atoms.begin(), atoms.end());
  atoms.erase(std::unique(atoms.begin(), atoms.end()), atoms.end());

  const OrderingStrategy st = policy.strategy;
  const bool bfs = st == OrderingStrategy::BfsRandAt
                   || st == OrderingStrategy::BfsCanoAt;
  const bool dfs = st == OrderingStrategy::DfsRandAt
                   || st == OrderingStrategy::DfsCanoAt;
  const bool cano = st == OrderingStrategy::BfsCanoAt
                    || st == OrderingStrategy::DfsCanoAt;
  std::vector<int> preferred;
  if (bfs || dfs)
    for (int a: atoms)
      if (g.atom(a).is_edited == dfs)
        preferred.push_back(a);
  const std::vector<int> &pool = preferred.empty() ? atoms : preferred;

  int chosen;
  if (cano) {
    chosen = *std::min_element(pool.begin(), pool.end(), [&](int x, int y) {
      return s.canonical_rank(x) < s.canonical_rank(y);
    });
  } else {
    chosen = pool[pick(rng, static_cast<int>(pool.size()))];
  }

  int best = 100;
  for (const Candidate &c: cands)
    if (c.atom == chosen)
      best = std::min(best, priority(c.category, s.direction()));
  std::vector<const Candidate *> top;
  for (const Candidate &c: cands)
    if (c.atom == chosen && priority(c.category, s.direction()) == best)
      top.push_back(&c);

  auto partner_order = [&](const Candidate &c) {
    if (c.category == EditCategory::AddAtom
        || c.category == EditCategory::AddBenzene)
      return order[c.partner];
    const int t = s.target_of(c.partner);
    return t >= 0 ? order[t] : s.target().size() + c.partner;
  };

  const Candidate *pickc = top.front();
  if (top.front()->category == EditCategory::AddBenzene && !cano) {
    pickc = top[pick(rng, static_cast<int>(top.size()))];
  } else {
    for (const Candidate *c: top)
      if (partner_order(*c) < partner_order(*pickc))
        pickc = c;
  }
  if (stats != nullptr && pickc->category == EditCategory::AddAtom
      && s.in_missing_benzene(pickc->partner))
    ++stats->benzene_fallbacks;
  return { pickc->action, pickc->target, pickc->added_target_atoms };
}

TrainingSample generate_sequence(const Reaction &r,
                                 const OrderingPolicy &policy, int max_steps,
                                 OracleStats *stats) {
  const OracleState base(r);
  const int nt = base.target().size();
  const std::uint64_t seed = fnv1a(r.id, policy.rng_seed * 0x9E3779B97F4A7C15ULL
                                             + 0x1234567ULL);

  std::vector<int> order(nt);
  const bool cano = policy.strategy == OrderingStrategy::BfsCanoAt
                    || policy.strategy == OrderingStrategy::DfsCanoAt;
  if (cano) {
    for (int t = 0; t < nt; ++t)
      order[t] = base.target_canonical_rank(t);
  } else {
    std::vector<int> perm(nt);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 order_rng(seed ^ 0xA5A5A5A5ULL);
    for (int k = nt - 1; k > 0; --k)
      std::swap(perm[k], perm[pick(order_rng, k + 1)]);
    for (int k = 0; k < nt; ++k)
      order[perm[k]] = k;
  }

  std::vector<int> guess = base.final_indices();
  for (int attempt = 0; attempt < 4; ++attempt) {
    OracleState s = base;
    s.set_final_index_guess(guess);
    std::mt19937_64 rng(seed);
    OracleStats local;
    std::vector<Step> steps;
    while (true) {
      const Choice c = next_action(s, policy, order, rng, &local);
      steps.push_back({ c.action, c.target });
      if (c.action.is_stop())
        break;
      if (static_cast<int>(steps.size()) >= max_steps)
        throw SequenceTooLongError("more than " + std::to_string(max_steps)
                                   + " actions needed");
      const MolGraph before = s.graph();
      s.apply(c.action, c.target, c.added_target_atoms);
      if (s.graph() == before)
        throw InternalInconsistencyError("pending edit "
                                         + to_string(c.action)
                                         + " did not change the graph");
    }
    if (s.reconstruction_key() == s.target_key()) {
      if (stats != nullptr)
        stats->benzene_fallbacks += local.benzene_fallbacks;
      TrainingSample out;
      out.id = r.id;
      out.reaction_class = r.reaction_class;
      out.direction = r.direction;
      out.source = remove_supernode(base.graph());
      out.steps = std::move(steps);
      out.source_key = canonical_key(out.source);
      out.target_key = s.target_key();
      return out;
    }
    const std::vector<int> actual = s.final_indices();
    if (!s.target_has_stereo() || actual == guess)
      throw ReconstructionError("reconstruction: got " + s.reconstruction_key()
                                + ", want " + s.target_key());
    guess = actual;
  }
  throw ReconstructionError("stereo-order: stereo labels did not settle");
}

std::vector<MolGraph> replay_states(const TrainingSample &s) {
  std::vector<MolGraph> states;
  MolGraph g = add_supernode(s.source);
  states.push_back(g);
  for (const Step &step: s.steps) {
    g = apply_action(g, step.action, step.target).graph;
    states.push_back(g);
  }
  return states;
}

std::string replay_key(const TrainingSample &s) {
  MolGraph g = add_supernode(s.source);
  for (const Step &step: s.steps)
    g = apply_action(g, step.action, step.target).graph;
  if (s.direction == Direction::Retro)
    return canonical_key(g);
  const MolGraph plain = remove_supernode(g);
  std::vector<int> keep;
  for (int a = 0; a < plain.size(); ++a)
    if (a >= s.source.size() || plain.atom(a).map_number != 0)
      keep.push_back(a);
  return canonical_key(induced_subgraph(plain, keep));
}

ActionVocab build_vocab(const std::vector<TrainingSample> &samples) {
  std::vector<EditAction> all;
  for (const TrainingSample &s: samples)
    for (const Step &step: s.steps)
      all.push_back(step.action);
  return ActionVocab(std::move(all));
}

}  // namespace megan
