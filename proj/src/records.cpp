//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#include <cctype>
#include <charconv>
#include <sstream>

#include "megan/dataset.h"
#include "megan/error.h"

namespace megan {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t p = s.find(sep, start);
    out.push_back(s.substr(start, p == std::string_view::npos ? p : p - start));
    if (p == std::string_view::npos)
      break;
    start = p + 1;
  }
  return out;
}

int to_int(std::string_view s, std::string_view what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DataError("bad " + std::string(what) + " '" + std::string(s) + "'");
  return v;
}

std::string_view or_dash(std::string_view s) {
  return s.empty() ? std::string_view("-") : s;
}

std::string_view from_dash(std::string_view s) {
  return s == "-" ? std::string_view() : s;
}

void check_field(const std::string &s, std::string_view what) {
  if (s.find_first_of("\t\n\r") != std::string::npos)
    throw DataError(std::string(what) + " contains a tab or newline");
}

}  // namespace

std::string graph_to_text(const MolGraph &g) {
  std::ostringstream out;
  for (int i = 0; i < g.size(); ++i) {
    const AtomNode &a = g.atom(i);
    if (a.is_supernode)
      throw DataError("graph_to_text: graph has a supernode");
    out << (i ? " " : "") << a.atomic_number << ':' << a.formal_charge << ':'
        << static_cast<int>(a.chiral_tag) << ':' << a.explicit_h_count << ':'
        << a.is_aromatic << ':' << a.map_number << ':' << a.in_reactant << ':'
        << a.is_edited;
  }
  if (g.size() == 0)
    out << '-';
  out << '\t';
  bool first = true;
  for (const auto &[key, b]: g.bonds()) {
    out << (first ? "" : " ") << key.first << ':' << key.second << ':'
        << static_cast<int>(b.type) << ':' << static_cast<int>(b.stereo)
        << ':' << b.is_edited;
    first = false;
  }
  if (first)
    out << '-';
  return out.str();
}

MolGraph graph_from_text(std::string_view atoms, std::string_view bonds) {
  MolGraph g;
  if (atoms != "-")
    for (std::string_view tok: split(atoms, ' ')) {
      const auto f = split(tok, ':');
      if (f.size() != 8)
        throw DataError("bad atom '" + std::string(tok) + "'");
      AtomNode a;
      a.atomic_number = to_int(f[0], "atomic number");
      a.formal_charge = to_int(f[1], "charge");
      const int chiral = to_int(f[2], "chiral tag");
      if (chiral < 0 || chiral > 2)
        throw DataError("bad chiral tag");
      a.chiral_tag = static_cast<ChiralTag>(chiral);
      a.explicit_h_count = to_int(f[3], "hydrogen count");
      a.is_aromatic = to_int(f[4], "aromatic flag") != 0;
      a.map_number = to_int(f[5], "map number");
      a.in_reactant = to_int(f[6], "reactant flag") != 0;
      a.is_edited = to_int(f[7], "edited flag") != 0;
      if (a.atomic_number <= 0 || a.explicit_h_count < 0)
        throw DataError("bad atom '" + std::string(tok) + "'");
      g.add_atom(a);
    }
  if (bonds != "-")
    for (std::string_view tok: split(bonds, ' ')) {
      const auto f = split(tok, ':');
      if (f.size() != 5)
        throw DataError("bad bond '" + std::string(tok) + "'");
      const int i = to_int(f[0], "bond atom");
      const int j = to_int(f[1], "bond atom");
      const int type = to_int(f[2], "bond type");
      const int stereo = to_int(f[3], "bond stereo");
      if (i < 0 || j < 0 || i >= g.size() || j >= g.size() || i == j
          || type < static_cast<int>(BondType::Single)
          || type > static_cast<int>(BondType::Aromatic) || stereo < 0
          || stereo > 2)
        throw DataError("bad bond '" + std::string(tok) + "'");
      g.set_bond(i, j, { static_cast<BondType>(type),
                         static_cast<BondStereo>(stereo),
                         to_int(f[4], "edited flag") != 0 });
    }
  return g;
}

std::string samples_to_text(const std::vector<TrainingSample> &samples,
                            std::string_view config_hash) {
  std::ostringstream out;
  out << "megan-samples\t" << kSampleFormatVersion << '\t'
      << or_dash(config_hash) << '\t' << samples.size() << '\n';
  for (const TrainingSample &s: samples) {
    check_field(s.id, "sample id");
    out << or_dash(s.id) << '\t'
        << (s.reaction_class ? std::to_string(*s.reaction_class) : "-")
        << '\t' << to_string(s.direction) << '\t' << graph_to_text(s.source)
        << '\t';
    for (std::size_t k = 0; k < s.steps.size(); ++k)
      out << (k ? ";" : "") << to_string(s.steps[k].action) << '@'
          << s.steps[k].target.i << ',' << s.steps[k].target.j;
    if (s.steps.empty())
      out << '-';
    out << '\t' << or_dash(s.source_key) << '\t' << or_dash(s.target_key)
        << '\n';
  }
  return out.str();
}

std::vector<TrainingSample> samples_from_text(std::string_view text) {
  const std::vector<std::string_view> lines = split(text, '\n');
  if (lines.empty() || lines[0].rfind("megan-samples\t", 0) != 0)
    throw DataError("sample stream: missing header");
  const auto head = split(lines[0], '\t');
  if (head.size() != 4 || head[1] != std::to_string(kSampleFormatVersion))
    throw DataError("sample stream: unsupported header");
  const int count = to_int(head[3], "sample count");
  std::vector<TrainingSample> out;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty())
      continue;
    try {
      const auto f = split(lines[ln], '\t');
      if (f.size() != 8)
        throw DataError("expected 8 fields, got " + std::to_string(f.size()));
      TrainingSample s;
      s.id = std::string(from_dash(f[0]));
      if (f[1] != "-")
        s.reaction_class = to_int(f[1], "class");
      s.direction = parse_direction(f[2]);
      s.source = graph_from_text(f[3], f[4]);
      if (f[5] != "-")
        for (std::string_view step: split(f[5], ';')) {
          const std::size_t at = step.rfind('@');
          if (at == std::string_view::npos)
            throw DataError("bad step '" + std::string(step) + "'");
          const auto ij = split(step.substr(at + 1), ',');
          if (ij.size() != 2)
            throw DataError("bad step target '" + std::string(step) + "'");
          s.steps.push_back({ parse_action(step.substr(0, at)),
                              { to_int(ij[0], "target"),
                                to_int(ij[1], "target") } });
        }
      s.source_key = std::string(from_dash(f[6]));
      s.target_key = std::string(from_dash(f[7]));
      out.push_back(std::move(s));
    }
    catch (const Error &e) {
      throw DataError("sample stream line " + std::to_string(ln + 1) + ": "
                      + e.what());
    }
  }
  if (static_cast<int>(out.size()) != count)
    throw DataError("sample stream: header announces "
                    + std::to_string(count) + " samples, found "
                    + std::to_string(out.size()));
  return out;
}

}  // namespace megan
