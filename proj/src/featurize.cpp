//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "megan/featurize.h"

#include <algorithm>
#include <set>
#include <sstream>

#include "megan/error.h"
#include "megan/oracle.h"

namespace megan {

namespace {

using ListPtr = std::vector<int> FeatureConfig::*;

struct NamedList {
  const char *name;
  ListPtr list;
};

constexpr NamedList kAtomLists[] = {
  { "is_supernode", &FeatureConfig::is_supernode },
  { "atomic_numbers", &FeatureConfig::atomic_numbers },
  { "formal_charges", &FeatureConfig::formal_charges },
  { "chiral_tags", &FeatureConfig::chiral_tags },
  { "explicit_h_counts", &FeatureConfig::explicit_h_counts },
  { "is_aromatic", &FeatureConfig::is_aromatic },
  { "is_edited", &FeatureConfig::is_edited },
  { "in_reactant", &FeatureConfig::in_reactant },
};

constexpr NamedList kBondLists[] = {
  { "bond_types", &FeatureConfig::bond_types },
  { "bond_stereo", &FeatureConfig::bond_stereo },
  { "bond_edited", &FeatureConfig::bond_edited },
};

std::vector<int> sorted(const std::set<int> &s) {
  return { s.begin(), s.end() };
}

struct Collector {
  std::set<int> z, charge, chiral, h, aromatic, reactant, btype, bstereo;

  void add(const MolGraph &g) {
    for (const AtomNode &a: g.atoms()) {
      if (a.is_supernode)
        continue;
      z.insert(a.atomic_number);
      charge.insert(a.formal_charge);
      chiral.insert(static_cast<int>(a.chiral_tag));
      h.insert(a.explicit_h_count);
      aromatic.insert(a.is_aromatic ? 1 : 0);
      reactant.insert(a.in_reactant ? 1 : 0);
    }
    for (const auto &[key, b]: g.bonds()) {
      btype.insert(static_cast<int>(b.type));
      bstereo.insert(static_cast<int>(b.stereo));
    }
  }

  FeatureConfig finish(const FitOptions &o) const {
    FeatureConfig c;
    c.atomic_numbers = sorted(z);
    c.formal_charges = sorted(charge);
    if (o.use_chirality)
      c.chiral_tags = sorted(chiral);
    c.explicit_h_counts = sorted(h);
    c.is_aromatic = sorted(aromatic);
    if (o.use_reactant_flag)
      c.in_reactant = { 0, 1 };
    std::set<int> types = btype;
    types.insert(static_cast<int>(BondType::Supernode));
    types.insert(static_cast<int>(BondType::Self));
    c.bond_types = sorted(types);
    if (o.use_bond_stereo)
      c.bond_stereo = sorted(bstereo);
    c.num_reaction_types = o.num_reaction_types;
    return c;
  }
};

// Writes the one-hot of `value` in `list` at `out`; returns the block width.
int one_hot(const std::vector<int> &list, int value, double *out) {
  for (std::size_t k = 0; k < list.size(); ++k)
    if (list[k] == value) {
      out[k] = 1.0;
      break;
    }
  return static_cast<int>(list.size());
}

void bond_row(const FeatureConfig &cfg, BondType type, const Bond *b,
              double *out) {
  out += one_hot(cfg.bond_types, static_cast<int>(type), out);
  if (b == nullptr)
    return;
  out += one_hot(cfg.bond_stereo, static_cast<int>(b->stereo), out);
  one_hot(cfg.bond_edited, b->is_edited ? 1 : 0, out);
}

}  // namespace

int FeatureConfig::atom_width() const {
  int w = 0;
  for (const NamedList &l: kAtomLists)
    w += static_cast<int>((this->*l.list).size());
  return w;
}

int FeatureConfig::bond_width() const {
  int w = 0;
  for (const NamedList &l: kBondLists)
    w += static_cast<int>((this->*l.list).size());
  return w;
}

FeatureConfig fit_config(const std::vector<TrainingSample> &samples,
                         const FitOptions &options) {
  Collector c;
  for (const TrainingSample &s: samples)
    for (const MolGraph &g: replay_states(s))
      c.add(g);
  return c.finish(options);
}

FeatureConfig fit_config_graphs(const std::vector<MolGraph> &graphs,
                                const FitOptions &options) {
  Collector c;
  for (const MolGraph &g: graphs)
    c.add(g);
  return c.finish(options);
}

std::string feature_config_to_text(const FeatureConfig &cfg,
                                   std::string_view config_hash) {
  std::ostringstream out;
  out << "megan-features\t" << kFeatureFormatVersion << '\t'
      << (config_hash.empty() ? std::string_view("-") : config_hash) << '\n';
  auto write = [&](const NamedList &l) {
    out << l.name;
    for (int v: cfg.*l.list)
      out << ' ' << v;
    out << '\n';
  };
  for (const NamedList &l: kAtomLists)
    write(l);
  for (const NamedList &l: kBondLists)
    write(l);
  out << "num_reaction_types " << cfg.num_reaction_types << '\n';
  return out.str();
}

FeatureConfig feature_config_from_text(std::string_view text) {
  std::istringstream in { std::string(text) };
  std::string line;
  if (!std::getline(in, line) || line.rfind("megan-features\t", 0) != 0)
    throw DataError("feature config: missing header");
  {
    std::istringstream h(line.substr(15));
    int version = 0;
    if (!(h >> version) || version != kFeatureFormatVersion)
      throw DataError("feature config: unsupported format version");
  }
  FeatureConfig cfg;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    std::istringstream ls(line);
    std::string name;
    ls >> name;
    if (!seen.insert(name).second)
      throw DataError("feature config: duplicate entry " + name);
    std::vector<int> values;
    int v;
    while (ls >> v)
      values.push_back(v);
    if (!ls.eof())
      throw DataError("feature config: bad value in " + name);
    if (name == "num_reaction_types") {
      if (values.size() != 1 || values[0] < 0)
        throw DataError("feature config: bad num_reaction_types");
      cfg.num_reaction_types = values[0];
      continue;
    }
    ListPtr target = nullptr;
    for (const NamedList &l: kAtomLists)
      if (name == l.name)
        target = l.list;
    for (const NamedList &l: kBondLists)
      if (name == l.name)
        target = l.list;
    if (target == nullptr)
      throw DataError("feature config: unknown entry " + name);
    cfg.*target = std::move(values);
  }
  if (seen.size() != std::size(kAtomLists) + std::size(kBondLists) + 1)
    throw DataError("feature config: missing entries");
  return cfg;
}

std::vector<int> GraphTensors::edge_sources() const {
  std::vector<int> out;
  out.reserve(edges.size());
  for (const auto &e: edges)
    out.push_back(e.first);
  return out;
}

std::vector<int> GraphTensors::edge_targets() const {
  std::vector<int> out;
  out.reserve(edges.size());
  for (const auto &e: edges)
    out.push_back(e.second);
  return out;
}

std::vector<double> GraphTensors::bond_feature(int i, int j) const {
  std::vector<double> out(bond_width, 0.0);
  auto first = edges.begin() + segment_begin[i];
  auto last = edges.begin() + segment_begin[i + 1];
  auto it = std::lower_bound(first, last, std::pair<int, int> { i, j });
  if (it != last && *it == std::pair<int, int> { i, j }) {
    const std::size_t e = it - edges.begin();
    std::copy_n(edge_features.begin() + e * bond_width, bond_width,
                out.begin());
  }
  return out;
}

GraphTensors featurize(const MolGraph &g, const FeatureConfig &cfg) {
  if (!g.has_supernode())
    throw InvalidTargetError("featurize: graph has no supernode");
  GraphTensors t;
  t.num_nodes = g.size();
  t.num_atoms = g.num_atoms();
  t.atom_width = cfg.atom_width();
  t.bond_width = cfg.bond_width();
  const int n = t.num_nodes;
  const int aw = t.atom_width;
  const int bw = t.bond_width;

  t.atom_features.assign(static_cast<std::size_t>(n) * aw, 0.0);
  for (int i = 0; i < n; ++i) {
    const AtomNode &a = g.atom(i);
    double *row = t.atom_features.data() + static_cast<std::size_t>(i) * aw;
    row += one_hot(cfg.is_supernode, a.is_supernode ? 1 : 0, row);
    if (a.is_supernode)
      continue;
    row += one_hot(cfg.atomic_numbers, a.atomic_number, row);
    row += one_hot(cfg.formal_charges, a.formal_charge, row);
    row += one_hot(cfg.chiral_tags, static_cast<int>(a.chiral_tag), row);
    row += one_hot(cfg.explicit_h_counts, a.explicit_h_count, row);
    row += one_hot(cfg.is_aromatic, a.is_aromatic ? 1 : 0, row);
    row += one_hot(cfg.is_edited, a.is_edited ? 1 : 0, row);
    one_hot(cfg.in_reactant, a.in_reactant ? 1 : 0, row);
  }

  t.segment_begin.assign(n + 1, 0);
  for (int i = 0; i < n; ++i) {
    // neighbors() is sorted; Self goes in its place.
    std::vector<int> nb = g.neighbors(i);
    nb.insert(std::lower_bound(nb.begin(), nb.end(), i), i);
    for (int j: nb) {
      t.edges.emplace_back(i, j);
      const std::size_t base = t.edge_features.size();
      t.edge_features.resize(base + bw, 0.0);
      double *row = t.edge_features.data() + base;
      if (i == j)
        bond_row(cfg, BondType::Self, nullptr, row);
      else if (g.atom(i).is_supernode || g.atom(j).is_supernode)
        bond_row(cfg, BondType::Supernode, nullptr, row);
      else {
        const Bond *b = g.bond(i, j);
        bond_row(cfg, b->type, b, row);
      }
    }
    t.segment_begin[i + 1] = static_cast<int>(t.edges.size());
  }

  const int na = t.num_atoms;
  t.pairs.reserve(static_cast<std::size_t>(na) * (na - 1) / 2);
  t.pair_features.assign(static_cast<std::size_t>(na) * (na - 1) / 2 * bw,
                         0.0);
  for (int i = 0; i < na; ++i)
    for (int j = i + 1; j < na; ++j) {
      double *row = t.pair_features.data() + t.pairs.size() * bw;
      if (const Bond *b = g.bond(i, j))
        bond_row(cfg, b->type, b, row);
      t.pairs.emplace_back(i, j);
    }
  return t;
}

}  // namespace megan
