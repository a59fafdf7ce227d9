//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "megan/meganet.h"

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "megan/error.h"

namespace megan {

namespace {

struct Shape {
  std::string name;
  int rows;
  int cols;
  int fan_in;
};

void linear_shapes(std::vector<Shape> &out, const std::string &name, int in,
                   int outw) {
  out.push_back({ name + ".W", in, outw, in });
  out.push_back({ name + ".b", 1, outw, in });
}

std::vector<Shape> param_shapes(const ModelConfig &c) {
  std::vector<Shape> s;
  linear_shapes(s, "emb.atom", c.atom_features, c.atom_dim);
  linear_shapes(s, "emb.bond", c.bond_features, c.bond_dim);
  if (c.use_reaction_type)
    s.push_back({ "emb.rtype", c.reaction_types, c.atom_dim, 1 });
  auto stack = [&](const char *name, int layers) {
    for (int l = 0; l < layers; ++l) {
      const std::string p = std::string(name) + "." + std::to_string(l);
      linear_shapes(s, p + ".att", c.atom_dim, c.attention_dim);
      linear_shapes(s, p + ".att2", 2 * c.attention_dim + c.bond_dim,
                    c.heads);
      for (int k = 0; k < c.heads; ++k)
        linear_shapes(s, p + ".head" + std::to_string(k), c.atom_dim,
                      c.atom_dim / c.heads);
    }
  };
  stack("enc", c.encoder_layers);
  stack("dec", c.decoder_layers);
  linear_shapes(s, "atom.hidden", c.atom_dim, c.head_hidden);
  linear_shapes(s, "atom.out", c.head_hidden, c.atom_actions + 1);
  linear_shapes(s, "bond.hidden", c.atom_dim, c.head_hidden);
  linear_shapes(s, "bond.out", c.head_hidden + c.bond_dim, c.bond_actions);
  return s;
}

// Uniform in [0, 1) from the top 53 bits, identical on every platform.
double unit(std::mt19937_64 &rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

std::string_view to_string(Recurrence r) {
  return r == Recurrence::Decoder ? "decoder" : "literal";
}

Recurrence parse_recurrence(std::string_view s) {
  if (s == "decoder")
    return Recurrence::Decoder;
  if (s == "literal")
    return Recurrence::Literal;
  throw ConfigError("unknown recurrence '" + std::string(s) + "'");
}

ModelConfig bind_data(ModelConfig cfg, const ActionVocab &vocab,
                      const FeatureConfig &features) {
  cfg.atom_features = features.atom_width();
  cfg.bond_features = features.bond_width();
  cfg.atom_actions = static_cast<int>(vocab.atom_actions().size());
  cfg.bond_actions = static_cast<int>(vocab.bond_actions().size());
  if (features.num_reaction_types > 0)
    cfg.reaction_types = features.num_reaction_types;
  return cfg;
}

void validate(const ModelConfig &c) {
  auto positive = [](int v, const char *name) {
    if (v <= 0)
      throw ConfigError(std::string(name) + " must be positive");
  };
  positive(c.atom_dim, "atom_dim");
  positive(c.bond_dim, "bond_dim");
  positive(c.heads, "heads");
  positive(c.attention_dim, "attention_dim");
  positive(c.head_hidden, "head_hidden");
  positive(c.encoder_layers, "encoder_layers");
  positive(c.max_steps, "max_steps");
  positive(c.atom_features, "atom_features");
  positive(c.bond_features, "bond_features");
  if (c.decoder_layers < 0)
    throw ConfigError("decoder_layers must not be negative");
  if (c.atom_dim % c.heads != 0)
    throw ConfigError("atom_dim " + std::to_string(c.atom_dim)
                      + " is not divisible by heads "
                      + std::to_string(c.heads));
  if (c.atom_actions < 0 || c.bond_actions < 0)
    throw ConfigError("negative action counts");
  if (c.use_reaction_type && c.reaction_types <= 0)
    throw ConfigError("reaction_types must be positive");
}

ModelConfig wide_preset(ModelConfig cfg) {
  cfg.atom_dim = 1024;
  cfg.attention_dim = 128;
  cfg.bond_dim = 128;
  cfg.head_hidden = 128;
  cfg.heads = 8;
  return cfg;
}

std::string model_config_to_text(const ModelConfig &c,
                                 std::string_view config_hash) {
  std::ostringstream out;
  out << "megan-model\t" << kModelFormatVersion << '\t'
      << (config_hash.empty() ? std::string_view("-") : config_hash) << '\n'
      << "atom_dim " << c.atom_dim << '\n'
      << "bond_dim " << c.bond_dim << '\n'
      << "heads " << c.heads << '\n'
      << "attention_dim " << c.attention_dim << '\n'
      << "head_hidden " << c.head_hidden << '\n'
      << "encoder_layers " << c.encoder_layers << '\n'
      << "decoder_layers " << c.decoder_layers << '\n'
      << "max_steps " << c.max_steps << '\n'
      << "direction " << to_string(c.direction) << '\n'
      << "use_reaction_type " << (c.use_reaction_type ? 1 : 0) << '\n'
      << "recurrence " << to_string(c.recurrence) << '\n'
      << "atom_features " << c.atom_features << '\n'
      << "bond_features " << c.bond_features << '\n'
      << "atom_actions " << c.atom_actions << '\n'
      << "bond_actions " << c.bond_actions << '\n'
      << "reaction_types " << c.reaction_types << '\n';
  return out.str();
}

ModelConfig model_config_from_text(std::string_view text) {
  std::istringstream in { std::string(text) };
  std::string line;
  if (!std::getline(in, line) || line.rfind("megan-model\t", 0) != 0)
    throw DataError("model config: missing header");
  {
    std::istringstream h(line.substr(12));
    int version = 0;
    if (!(h >> version) || version != kModelFormatVersion)
      throw DataError("model config: unsupported format version");
  }
  ModelConfig c;
  const std::map<std::string, int *> ints = {
    { "atom_dim", &c.atom_dim },
    { "bond_dim", &c.bond_dim },
    { "heads", &c.heads },
    { "attention_dim", &c.attention_dim },
    { "head_hidden", &c.head_hidden },
    { "encoder_layers", &c.encoder_layers },
    { "decoder_layers", &c.decoder_layers },
    { "max_steps", &c.max_steps },
    { "atom_features", &c.atom_features },
    { "bond_features", &c.bond_features },
    { "atom_actions", &c.atom_actions },
    { "bond_actions", &c.bond_actions },
    { "reaction_types", &c.reaction_types },
  };
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    std::istringstream ls(line);
    std::string key, value;
    if (!(ls >> key >> value))
      throw DataError("model config: malformed line '" + line + "'");
    seen.insert(key);
    try {
      if (auto it = ints.find(key); it != ints.end())
        *it->second = std::stoi(value);
      else if (key == "direction")
        c.direction = parse_direction(value);
      else if (key == "use_reaction_type")
        c.use_reaction_type = value == "1";
      else if (key == "recurrence")
        c.recurrence = parse_recurrence(value);
      else
        throw DataError("model config: unknown key " + key);
    }
    catch (const std::logic_error &) {
      throw DataError("model config: bad value for " + key);
    }
    catch (const ConfigError &e) {
      throw DataError(std::string("model config: ") + e.what());
    }
  }
  if (seen.size() != ints.size() + 3)
    throw DataError("model config: missing keys");
  return c;
}

ParamStore init_params(const ModelConfig &cfg, std::uint64_t seed) {
  validate(cfg);
  std::mt19937_64 rng(seed);
  ParamStore store;
  for (const Shape &s: param_shapes(cfg)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(s.fan_in));
    Tensor t(s.rows, s.cols);
    for (int k = 0; k < t.size(); ++k)
      t[k] = (2.0 * unit(rng) - 1.0) * bound;
    store.add(s.name, std::move(t));
  }
  return store;
}

std::int64_t count_params(const ModelConfig &cfg) {
  std::int64_t n = 0;
  for (const Shape &s: param_shapes(cfg))
    n += static_cast<std::int64_t>(s.rows) * s.cols;
  return n;
}

std::vector<int> carry_rows(const MolGraph &previous,
                            const MolGraph &current) {
  const int kept = previous.num_atoms();
  std::vector<int> rows(current.size(), -1);
  for (int i = 0; i < current.size(); ++i) {
    if (current.atom(i).is_supernode)
      rows[i] = previous.supernode();
    else if (i < kept)
      rows[i] = i;
  }
  return rows;
}

MeganNet::MeganNet(const ModelConfig &cfg, ParamStore &params, Tape &tape)
    : cfg_(cfg), params_(params), tape_(tape) {
  validate(cfg_);
  if (params_.size() != static_cast<int>(param_shapes(cfg_).size()))
    throw ConfigError("parameter store does not match the model config");
  bound_.resize(params_.size());
}

Var MeganNet::param(const std::string &name) {
  const int i = params_.index_of(name);
  if (!bound_[i].valid())
    bound_[i] = tape_.param(params_.at(i));
  return bound_[i];
}

Var MeganNet::linear(std::string_view name, Var x) {
  const std::string n(name);
  return ops::add_row(ops::matmul(x, param(n + ".W")), param(n + ".b"));
}

Embedding MeganNet::embed(const GraphTensors &gt,
                          std::optional<int> reaction_class) {
  if (gt.atom_width != cfg_.atom_features || gt.bond_width != cfg_.bond_features)
    throw ShapeMismatchError("feature widths " + std::to_string(gt.atom_width)
                             + "/" + std::to_string(gt.bond_width)
                             + " do not match the model ("
                             + std::to_string(cfg_.atom_features) + "/"
                             + std::to_string(cfg_.bond_features) + ")");
  Embedding e;
  const int n_pairs = static_cast<int>(gt.pairs.size());
  e.nodes = linear("emb.atom",
                   tape_.constant(Tensor(gt.num_nodes, gt.atom_width,
                                         gt.atom_features)));
  e.edges = linear("emb.bond",
                   tape_.constant(Tensor(static_cast<int>(gt.edges.size()),
                                         gt.bond_width, gt.edge_features)));
  e.pairs = linear("emb.bond", tape_.constant(Tensor(n_pairs, gt.bond_width,
                                                     gt.pair_features)));
  if (cfg_.use_reaction_type) {
    if (!reaction_class || *reaction_class < 1
        || *reaction_class > cfg_.reaction_types)
      throw DataError("reaction type prior needs a class in 1.."
                      + std::to_string(cfg_.reaction_types));
    std::vector<int> rows(gt.num_nodes, -1);
    rows[gt.num_nodes - 1] = *reaction_class - 1;
    e.nodes = ops::add(e.nodes, ops::gather_rows(param("emb.rtype"), rows));
  }
  return e;
}

Var MeganNet::gcn_att_layer(std::string_view stack, int layer, Var h,
                            const Embedding &emb, const GraphTensors &gt) {
  const std::string p = std::string(stack) + "." + std::to_string(layer);
  const Var hp = ops::relu(linear(p + ".att", h));
  const std::vector<int> src = gt.edge_sources();
  const std::vector<int> dst = gt.edge_targets();
  const Var b[] = { ops::gather_rows(hp, src), ops::gather_rows(hp, dst),
                    emb.edges };
  const Var c = linear(p + ".att2", ops::concat_cols(b));
  const Var alpha = ops::segment_softmax(c, gt.segment_begin);
  const Var g = ops::segment_weighted_sum(alpha, ops::gather_rows(h, dst),
                                          gt.segment_begin);
  std::vector<Var> heads;
  heads.reserve(cfg_.heads);
  for (int k = 0; k < cfg_.heads; ++k) {
    const Var gk = ops::slice_cols(g, k * cfg_.atom_dim,
                                   (k + 1) * cfg_.atom_dim);
    heads.push_back(ops::relu(linear(p + ".head" + std::to_string(k), gk)));
  }
  return ops::concat_cols(heads);
}

Var MeganNet::encode(Var h, const Embedding &emb, const GraphTensors &gt) {
  for (int l = 0; l < cfg_.encoder_layers; ++l)
    h = gcn_att_layer("enc", l, h, emb, gt);
  return h;
}

Var MeganNet::decode(Var h, const Embedding &emb, const GraphTensors &gt) {
  for (int l = 0; l < cfg_.decoder_layers; ++l)
    h = gcn_att_layer("dec", l, h, emb, gt);
  return h;
}

StepOutput MeganNet::forward_step(const GraphTensors &gt,
                                  const PreviousHidden *previous,
                                  std::optional<int> reaction_class) {
  const Embedding emb = embed(gt, reaction_class);
  StepOutput out;
  if (previous == nullptr)
    out.hidden = decode(encode(emb.nodes, emb, gt), emb, gt);
  else {
    if (static_cast<int>(previous->rows.size()) != gt.num_nodes)
      throw ShapeMismatchError("previous hidden rows do not match the graph");
    const Var padded = ops::gather_rows(previous->hidden, previous->rows);
    const Var base = cfg_.recurrence == Recurrence::Decoder
                         ? emb.nodes
                         : encode(padded, emb, gt);
    out.hidden = decode(ops::maximum(base, padded), emb, gt);
  }

  const int atom_cols = cfg_.atom_actions + 1;
  const Var f = ops::relu(linear("atom.hidden", out.hidden));
  out.atom_logits = linear("atom.out", f);

  const Var j = ops::relu(linear("bond.hidden", out.hidden));
  std::vector<int> left, right;
  left.reserve(gt.pairs.size());
  right.reserve(gt.pairs.size());
  for (const auto &[a, b]: gt.pairs) {
    left.push_back(a);
    right.push_back(b);
  }
  const Var jsum = ops::add(ops::gather_rows(j, left),
                            ops::gather_rows(j, right));
  const Var jp_parts[] = { jsum, emb.pairs };
  const Var jp = ops::relu(ops::concat_cols(jp_parts));
  out.bond_logits = linear("bond.out", jp);

  std::vector<int> atom_index;
  atom_index.reserve(static_cast<std::size_t>(gt.num_atoms)
                     * cfg_.atom_actions);
  for (int i = 0; i < gt.num_atoms; ++i)
    for (int s = 0; s < cfg_.atom_actions; ++s)
      atom_index.push_back(i * atom_cols + s);
  std::vector<int> bond_index(static_cast<std::size_t>(gt.pairs.size())
                              * cfg_.bond_actions);
  for (std::size_t k = 0; k < bond_index.size(); ++k)
    bond_index[k] = static_cast<int>(k);
  const int stop_index[] = { (gt.num_nodes - 1) * atom_cols
                             + cfg_.atom_actions };
  const Var layout[] = { ops::gather_flat(out.atom_logits, atom_index),
                         ops::gather_flat(out.bond_logits, bond_index),
                         ops::gather_flat(out.atom_logits, stop_index) };
  out.log_probs = ops::log_softmax(ops::concat_cols(layout));
  return out;
}

std::vector<int> target_positions(const TrainingSample &sample,
                                  const ActionVocab &vocab) {
  const std::vector<MolGraph> states = replay_states(sample);
  std::vector<int> out;
  out.reserve(sample.steps.size());
  for (std::size_t k = 0; k < sample.steps.size(); ++k) {
    const Step &step = sample.steps[k];
    const int action = vocab.index_of(step.action);
    if (action < 0)
      throw DataError(sample.id + ": action '" + to_string(step.action)
                      + "' is not in the vocabulary");
    const int pos = action_space_layout(vocab, states[k]).encode(action,
                                                                 step.target);
    if (pos < 0)
      throw DataError(sample.id + ": step " + std::to_string(k)
                      + " has no place in the action layout");
    out.push_back(pos);
  }
  return out;
}

SequenceLoss sequence_nll(MeganNet &net, const TrainingSample &sample,
                          const ActionVocab &vocab,
                          const FeatureConfig &features) {
  const std::vector<MolGraph> states = replay_states(sample);
  const std::vector<int> positions = target_positions(sample, vocab);
  SequenceLoss loss;
  std::optional<PreviousHidden> previous;
  std::vector<Var> terms;
  for (std::size_t k = 0; k < positions.size(); ++k) {
    const GraphTensors gt = featurize(states[k], features);
    const StepOutput out = net.forward_step(
        gt, previous ? &*previous : nullptr, sample.reaction_class);
    const int pos[] = { positions[k] };
    terms.push_back(ops::gather_flat(out.log_probs, pos));
    if (k + 1 < positions.size())
      previous = PreviousHidden { out.hidden,
                                  carry_rows(states[k], states[k + 1]) };
  }
  if (terms.empty())
    throw DataError(sample.id + ": empty action sequence");
  loss.nll = ops::scale(ops::reduce_sum(ops::concat_cols(terms)), -1.0);
  loss.steps = static_cast<int>(terms.size());
  return loss;
}

}  // namespace megan
