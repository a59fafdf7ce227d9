//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "megan/dataset.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "megan/error.h"

namespace megan {

namespace {

std::string lower(std::string s) {
  for (char &c: s)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
    ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
    --e;
  return std::string(s.substr(b, e - b));
}

bool is_dev_split(const std::string &split) {
  return split == "train" || split == "valid";
}

}  // namespace

std::vector<std::string> split_fields(std::string_view line, char delimiter) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      }
      else if (c == '"')
        quoted = false;
      else
        cur += c;
    }
    else if (c == '"' && cur.empty())
      quoted = true;
    else if (c == delimiter) {
      out.push_back(std::move(cur));
      cur.clear();
    }
    else
      cur += c;
  }
  out.push_back(std::move(cur));
  return out;
}

std::vector<ReactionRecord> parse_reactions(std::string_view text,
                                            std::string_view default_split,
                                            std::string_view origin) {
  std::istringstream in { std::string(text) };
  std::string header;
  if (!std::getline(in, header))
    return {};
  if (!header.empty() && header.back() == '\r')
    header.pop_back();
  const char delim = header.find('\t') != std::string::npos ? '\t' : ',';
  const std::vector<std::string> cols = split_fields(header, delim);
  int id_col = -1, class_col = -1, rxn_col = -1, split_col = -1;
  for (int c = 0; c < static_cast<int>(cols.size()); ++c) {
    const std::string name = lower(trim(cols[c]));
    if (name == "id")
      id_col = c;
    else if (name == "class" || name == "reaction_class"
             || name == "reaction_type")
      class_col = c;
    else if (name == "split")
      split_col = c;
    else if (name == "rxn" || name == "reaction" || name == "rxn_smiles"
             || name.find('>') != std::string::npos)
      rxn_col = c;
  }
  if (rxn_col < 0)
    throw DataError(std::string(origin) + ": no reaction column in header");

  std::vector<ReactionRecord> out;
  std::string line;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (trim(line).empty())
      continue;
    const std::vector<std::string> f = split_fields(line, delim);
    auto field = [&](int c) {
      return c >= 0 && c < static_cast<int>(f.size()) ? trim(f[c])
                                                      : std::string();
    };
    ReactionRecord r;
    r.id = id_col >= 0 ? field(id_col)
                       : std::string(origin) + ":" + std::to_string(line_no);
    r.rxn = field(rxn_col);
    r.split = split_col >= 0 ? lower(field(split_col))
                             : std::string(default_split);
    if (r.split == "val" || r.split == "validation")
      r.split = "valid";
    const std::string cls = field(class_col);
    if (!cls.empty()) {
      try {
        std::size_t used = 0;
        const int v = std::stoi(cls, &used);
        if (used == cls.size())
          r.reaction_class = v;
      }
      catch (const std::logic_error &) {
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ReactionRecord> read_reactions(const std::string &path,
                                           std::string_view default_split) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_reactions(buf.str(), default_split, path);
}

int PreprocessReport::total_accepted() const {
  int n = 0;
  for (const auto &[k, v]: accepted)
    n += v;
  return n;
}

int PreprocessReport::total_rejected() const {
  int n = 0;
  for (const auto &[k, v]: rejected)
    n += v;
  return n;
}

double PreprocessReport::acceptance() const {
  const int total = total_accepted() + total_rejected();
  return total == 0 ? 0.0 : static_cast<double>(total_accepted()) / total;
}

TrainingSample prepare_sample(const ReactionRecord &record,
                              const PreprocessOptions &options,
                              OracleStats *stats, ReactionPrepStats *prep) {
  if (record.reaction_class && (*record.reaction_class < 1
                                || *record.reaction_class > 10))
    throw DataError("reaction class " + std::to_string(*record.reaction_class)
                    + " is outside 1..10");
  Reaction r = parse_reaction(record.rxn, options.direction,
                              record.reaction_class, prep);
  r.id = record.id;
  TrainingSample s = generate_sequence(r, options.ordering, options.max_steps,
                                       stats);
  if (options.verify_replay && replay_key(s) != s.target_key)
    throw ReconstructionError("replayed sequence does not rebuild the target");
  return s;
}

PreprocessOutput preprocess(const std::vector<ReactionRecord> &records,
                            const PreprocessOptions &options) {
  PreprocessOutput out;
  PreprocessReport &rep = out.report;
  std::vector<TrainingSample> dev;
  for (const ReactionRecord &rec: records) {
    OracleStats stats;
    ReactionPrepStats prep;
    try {
      TrainingSample s = prepare_sample(rec, options, &stats, &prep);
      ++rep.accepted[rec.split];
      rep.benzene_fallbacks += stats.benzene_fallbacks;
      rep.dropped_molecules += prep.dropped_molecules;
      rep.cleared_maps += prep.cleared_maps;
      ++rep.first_action[std::string(
          action_kind_name(s.steps.front().action.kind))];
      ++rep.sequence_lengths[static_cast<int>(s.steps.size())];
      if (is_dev_split(rec.split))
        dev.push_back(s);
      out.samples[rec.split].push_back(std::move(s));
    }
    catch (const Error &e) {
      ++rep.rejected[rec.split];
      ++rep.reasons[std::string(e.kind())];
      rep.rejections.push_back({ rec.id, rec.split, std::string(e.kind()),
                                 e.what() });
    }
  }
  out.vocab = build_vocab(dev);
  out.features = fit_config(dev, options.features);
  return out;
}

std::string report_to_text(const PreprocessReport &rep,
                           const ActionVocab &vocab,
                           const FeatureConfig &features,
                           std::string_view config_hash) {
  std::ostringstream out;
  out << "megan-report\t1\t"
      << (config_hash.empty() ? std::string_view("-") : config_hash) << '\n';
  out << "accepted\t" << rep.total_accepted() << '\n';
  out << "rejected\t" << rep.total_rejected() << '\n';
  for (const auto &[split, n]: rep.accepted)
    out << "accepted." << split << '\t' << n << '\n';
  for (const auto &[split, n]: rep.rejected)
    out << "rejected." << split << '\t' << n << '\n';
  for (const auto &[reason, n]: rep.reasons)
    out << "reason." << reason << '\t' << n << '\n';
  out << "vocab_size\t" << vocab.size() << '\n';
  for (ActionKind k: { ActionKind::EditAtom, ActionKind::EditBond,
                       ActionKind::AddAtom, ActionKind::AddBenzene,
                       ActionKind::Stop })
    out << "vocab." << action_kind_name(k) << '\t' << vocab.count(k) << '\n';
  out << "atom_feature_width\t" << features.atom_width() << '\n';
  out << "bond_feature_width\t" << features.bond_width() << '\n';
  for (const auto &[kind, n]: rep.first_action)
    out << "first_action." << kind << '\t' << n << '\n';
  for (const auto &[len, n]: rep.sequence_lengths)
    out << "length." << len << '\t' << n << '\n';
  out << "benzene_fallbacks\t" << rep.benzene_fallbacks << '\n';
  out << "dropped_molecules\t" << rep.dropped_molecules << '\n';
  out << "cleared_maps\t" << rep.cleared_maps << '\n';
  for (const Rejection &r: rep.rejections) {
    std::string msg = r.message;
    std::replace(msg.begin(), msg.end(), '\t', ' ');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    out << "rejection\t" << r.id << '\t' << r.split << '\t' << r.reason << '\t'
        << msg << '\n';
  }
  return out.str();
}

}  // namespace megan
