//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "megan/runtime.h"

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "megan/error.h"
#include "megan/smiles.h"

namespace megan {

namespace {

std::vector<int> permutation(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(p[i], p[j]);
  }
  return p;
}

}  // namespace

void validate(const TrainConfig &c) {
  auto positive = [](double v, const char *name) {
    if (!(v > 0))
      throw ConfigError(std::string(name) + " must be positive");
  };
  positive(c.batch_size, "batch_size");
  positive(c.lr0, "lr0");
  positive(c.warmup_steps, "warmup_steps");
  positive(c.eval_every, "eval_every");
  positive(c.eval_subset, "eval_subset");
  positive(c.decay_factor, "decay_factor");
  positive(c.decay_patience, "decay_patience");
  positive(c.stop_patience, "stop_patience");
  if (c.max_epochs < 0)
    throw ConfigError("max_epochs must not be negative");
}

std::string_view to_string(LrSchedule::Event e) {
  switch (e) {
  case LrSchedule::Event::Improved:
    return "improved";
  case LrSchedule::Event::Stagnant:
    return "stagnant";
  case LrSchedule::Event::Decayed:
    return "decayed";
  case LrSchedule::Event::Stopped:
    return "stopped";
  }
  return "?";
}

double LrSchedule::lr(std::uint64_t step) const {
  const double warm =
      std::min(1.0, static_cast<double>(step) / cfg_.warmup_steps);
  return cfg_.lr0 * warm * state_.scale;
}

LrSchedule::Event LrSchedule::on_eval(double val_loss) {
  if (!state_.has_best || val_loss < state_.best) {
    state_.best = val_loss;
    state_.has_best = true;
    state_.since_best = 0;
    state_.since_decay = 0;
    return Event::Improved;
  }
  ++state_.since_best;
  ++state_.since_decay;
  if (state_.since_best >= cfg_.stop_patience) {
    state_.stopped = true;
    return Event::Stopped;
  }
  if (state_.since_decay >= cfg_.decay_patience) {
    state_.since_decay = 0;
    state_.scale *= cfg_.decay_factor;
    ++state_.decays;
    return Event::Decayed;
  }
  return Event::Stagnant;
}

std::string train_state_to_text(const TrainState &s,
                                std::string_view config_hash) {
  std::ostringstream out;
  out.precision(17);
  out << "megan-train-state\t" << kTrainStateFormatVersion << '\t'
      << (config_hash.empty() ? std::string_view("-") : config_hash) << '\n'
      << "epoch " << s.epoch << '\n'
      << "next_index " << s.next_index << '\n'
      << "samples_seen " << s.samples_seen << '\n'
      << "optimizer_steps " << s.optimizer_steps << '\n'
      << "evals " << s.evals << '\n'
      << "train_nll_sum " << std::hexfloat << s.train_nll_sum
      << std::defaultfloat << '\n'
      << "train_steps " << s.train_steps << '\n'
      << "best " << std::hexfloat << s.schedule.best << std::defaultfloat
      << '\n'
      << "has_best " << s.schedule.has_best << '\n'
      << "since_best " << s.schedule.since_best << '\n'
      << "since_decay " << s.schedule.since_decay << '\n'
      << "decays " << s.schedule.decays << '\n'
      << "scale " << std::hexfloat << s.schedule.scale << std::defaultfloat
      << '\n'
      << "stopped " << s.schedule.stopped << '\n';
  return out.str();
}

TrainState train_state_from_text(std::string_view text) {
  std::istringstream in { std::string(text) };
  std::string line;
  if (!std::getline(in, line) || line.rfind("megan-train-state\t", 0) != 0)
    throw DataError("train state: missing header");
  {
    std::istringstream h(line.substr(18));
    int version = 0;
    if (!(h >> version) || version != kTrainStateFormatVersion)
      throw DataError("train state: unsupported format version");
  }
  std::map<std::string, std::string> kv;
  while (std::getline(in, line)) {
    if (line.empty())
      continue;
    std::istringstream ls(line);
    std::string k, v;
    if (!(ls >> k >> v))
      throw DataError("train state: malformed line '" + line + "'");
    kv[k] = v;
  }
  auto get = [&](const char *k) -> const std::string & {
    auto it = kv.find(k);
    if (it == kv.end())
      throw DataError(std::string("train state: missing ") + k);
    return it->second;
  };
  TrainState s;
  try {
    s.epoch = std::stoi(get("epoch"));
    s.next_index = std::stoi(get("next_index"));
    s.samples_seen = std::stoull(get("samples_seen"));
    s.optimizer_steps = std::stoull(get("optimizer_steps"));
    s.evals = std::stoi(get("evals"));
    s.train_nll_sum = std::strtod(get("train_nll_sum").c_str(), nullptr);
    s.train_steps = std::stoi(get("train_steps"));
    s.schedule.best = std::strtod(get("best").c_str(), nullptr);
    s.schedule.has_best = get("has_best") == "1";
    s.schedule.since_best = std::stoi(get("since_best"));
    s.schedule.since_decay = std::stoi(get("since_decay"));
    s.schedule.decays = std::stoi(get("decays"));
    s.schedule.scale = std::strtod(get("scale").c_str(), nullptr);
    s.schedule.stopped = get("stopped") == "1";
  }
  catch (const std::logic_error &) {
    throw DataError("train state: bad number");
  }
  return s;
}

std::vector<int> epoch_order(int n, std::uint64_t seed, int epoch) {
  return permutation(n, seed * 0x9E3779B97F4A7C15ULL
                            + static_cast<std::uint64_t>(epoch) + 1);
}

std::vector<int> validation_subset(int n, int size, std::uint64_t seed) {
  std::vector<int> p = permutation(n, seed ^ 0x5DEECE66DULL);
  if (size < n)
    p.resize(size);
  return p;
}

double mean_nll(const ModelConfig &model, ParamStore &params,
                const std::vector<TrainingSample> &samples,
                const ActionVocab &vocab, const FeatureConfig &features) {
  double total = 0.0;
  int steps = 0;
  for (const TrainingSample &s: samples) {
    Tape tape;
    tape.set_train(false);
    MeganNet net(model, params, tape);
    const SequenceLoss l = sequence_nll(net, s, vocab, features);
    total += l.nll.value()[0];
    steps += l.steps;
  }
  return steps == 0 ? 0.0 : total / steps;
}

TrainResult train(const TrainData &data, const ModelConfig &model,
                  const TrainConfig &cfg, ParamStore &params,
                  TrainState &state, const TrainHooks &hooks) {
  validate(cfg);
  validate(model);
  if (data.train == nullptr || data.vocab == nullptr
      || data.features == nullptr)
    throw ConfigError("train: missing data");
  const std::vector<TrainingSample> &train_set = *data.train;
  if (train_set.empty())
    throw DataError("train: no training samples");

  std::vector<TrainingSample> valid;
  if (data.valid != nullptr)
    for (int i: validation_subset(static_cast<int>(data.valid->size()),
                                  cfg.eval_subset, cfg.seed))
      valid.push_back((*data.valid)[i]);

  LrSchedule schedule(cfg);
  schedule.restore(state.schedule);
  TrainResult result;
  const int n = static_cast<int>(train_set.size());

  auto evaluate = [&]() {
    EvalRecord rec;
    rec.eval = ++state.evals;
    rec.optimizer_steps = state.optimizer_steps;
    rec.samples_seen = state.samples_seen;
    rec.lr = schedule.lr(state.optimizer_steps);
    rec.train_nll = state.train_steps == 0
                        ? 0.0
                        : state.train_nll_sum / state.train_steps;
    rec.val_nll = valid.empty() ? rec.train_nll
                                : mean_nll(model, params, valid, *data.vocab,
                                           *data.features);
    if (!std::isfinite(rec.val_nll))
      throw NonFiniteLossError("validation loss is not finite at eval "
                               + std::to_string(rec.eval));
    rec.event = schedule.on_eval(rec.val_nll);
    state.schedule = schedule.state();
    state.train_nll_sum = 0.0;
    state.train_steps = 0;
    if (rec.event == LrSchedule::Event::Improved) {
      result.best_val = rec.val_nll;
      result.best_params = params_to_bytes(params);
    }
    result.evals.push_back(rec);
    if (hooks.on_eval)
      hooks.on_eval(rec, state, params);
  };

  while (!state.schedule.stopped
         && (cfg.max_epochs == 0 || state.epoch < cfg.max_epochs)) {
    const std::vector<int> order = epoch_order(n, cfg.seed, state.epoch);
    while (state.next_index < n && !state.schedule.stopped) {
      const int end = std::min(n, state.next_index + cfg.batch_size);
      params.zero_grad();
      double batch_nll = 0.0;
      int batch_steps = 0;
      for (int k = state.next_index; k < end; ++k) {
        Tape tape;
        MeganNet net(model, params, tape);
        const SequenceLoss l =
            sequence_nll(net, train_set[order[k]], *data.vocab,
                         *data.features);
        const double v = l.nll.value()[0];
        if (!std::isfinite(v))
          throw NonFiniteLossError("loss is not finite for sample "
                                   + train_set[order[k]].id + " at step "
                                   + std::to_string(state.optimizer_steps));
        tape.backward(l.nll);
        batch_nll += v;
        batch_steps += l.steps;
      }
      for (int i = 0; i < params.size(); ++i)
        params.at(i).grad.mat() /= batch_steps;
      if (!params.grads_finite())
        throw NonFiniteLossError("gradient is not finite at step "
                                 + std::to_string(state.optimizer_steps));
      ++state.optimizer_steps;
      adam_step(params, schedule.lr(state.optimizer_steps));
      const int taken = end - state.next_index;
      state.next_index = end;
      state.train_nll_sum += batch_nll;
      state.train_steps += batch_steps;
      const std::uint64_t before = state.samples_seen;
      state.samples_seen += taken;
      if (before / cfg.eval_every != state.samples_seen / cfg.eval_every)
        evaluate();
      if (hooks.interrupt && hooks.interrupt(state))
        return result;
    }
    if (state.next_index >= n) {
      ++state.epoch;
      state.next_index = 0;
    }
  }
  result.finished = true;
  return result;
}

MeganDecoder::MeganDecoder(const ModelConfig &model, ParamStore &params,
                           const ActionVocab &vocab,
                           const FeatureConfig &features)
    : model_(model), params_(params), vocab_(vocab), features_(features) {
  validate(model_);
}

MeganDecoder::State MeganDecoder::initial(const MolGraph &source) const {
  State s;
  s.graph = source.has_supernode() ? source : add_supernode(source);
  return s;
}

MeganDecoder::Expansion MeganDecoder::expand(const State &s) {
  Tape tape;
  tape.set_train(false);
  MeganNet net(model_, params_, tape);
  const GraphTensors gt = featurize(s.graph, features_);
  std::optional<PreviousHidden> previous;
  if (s.hidden)
    previous = PreviousHidden { tape.constant(*s.hidden),
                                carry_rows(*s.previous, s.graph) };
  const StepOutput out = net.forward_step(
      gt, previous ? &*previous : nullptr, reaction_class_);
  return { out.log_probs.value().values(),
           std::make_shared<const Tensor>(out.hidden.value()) };
}

MeganDecoder::State MeganDecoder::advance(const State &s, const Expansion &e,
                                          int action, bool &stop) {
  const ActionLayout layout = action_space_layout(vocab_, s.graph);
  const ActionLayout::Entry entry = layout.decode(action);
  State next;
  next.hidden = e.hidden;
  next.previous = std::make_shared<const MolGraph>(s.graph);
  next.invalid_actions = s.invalid_actions;
  try {
    ApplyResult r = apply_action(s.graph, vocab_.at(entry.action),
                                 entry.target);
    next.graph = std::move(r.graph);
    stop = r.terminated;
  }
  catch (const Error &) {
    next.graph = s.graph;
    ++next.invalid_actions;
    stop = false;
  }
  return next;
}

std::string extract_answer(const MolGraph &final_graph, Direction direction) {
  MolGraph g = clear_impossible_stereo(
      clear_edit_flags(strip_maps(remove_supernode(final_graph))));
  check_valence(g);
  if (direction == Direction::Retro)
    return canonical_key(g);
  std::string best;
  for (const std::vector<int> &comp: connected_components(g)) {
    std::string key = canonical_key(induced_subgraph(g, comp));
    if (key.size() > best.size() || (key.size() == best.size() && key < best))
      best = std::move(key);
  }
  return best;
}

Prediction predict(MeganDecoder &decoder, const MolGraph &source,
                   std::optional<int> reaction_class, const BeamConfig &cfg) {
  decoder.set_reaction_class(reaction_class);
  const auto hyps = beam_search(decoder, decoder.initial(source), cfg);
  Prediction p;
  p.raw_hypotheses = static_cast<int>(hyps.size());
  std::set<std::string> seen;
  for (const auto &h: hyps) {
    std::string answer;
    try {
      answer = extract_answer(h.state.graph, decoder.model().direction);
    }
    catch (const Error &) {
      ++p.invalid_valence;
      continue;
    }
    if (!seen.insert(answer).second) {
      ++p.duplicates;
      continue;
    }
    p.candidates.push_back({ std::move(answer),
                             h.score(cfg.length_normalize), h.actions });
  }
  return p;
}

double sequence_log_prob(MeganDecoder &decoder, const MolGraph &source,
                         std::optional<int> reaction_class,
                         const std::vector<int> &actions) {
  decoder.set_reaction_class(reaction_class);
  MeganDecoder::State s = decoder.initial(source);
  double total = 0.0;
  for (int a: actions) {
    const MeganDecoder::Expansion e = decoder.expand(s);
    total += e.log_probs.at(a);
    bool stop = false;
    s = decoder.advance(s, e, a, stop);
    if (stop)
      break;
  }
  return total;
}

TopKReport top_k_accuracy(const std::vector<std::vector<std::string>> &ranked,
                          const std::vector<std::string> &truth,
                          const std::vector<int> &ks) {
  if (ranked.size() != truth.size())
    throw DataError("top_k_accuracy: " + std::to_string(ranked.size())
                    + " predictions for " + std::to_string(truth.size())
                    + " reactions");
  TopKReport r;
  r.ks = ks;
  r.hits.assign(ks.size(), 0);
  r.total = static_cast<int>(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto &c = ranked[i];
    const auto it = std::find(c.begin(), c.end(), truth[i]);
    if (it == c.end())
      continue;
    const int rank = static_cast<int>(it - c.begin()) + 1;
    for (std::size_t k = 0; k < ks.size(); ++k)
      if (rank <= ks[k])
        ++r.hits[k];
  }
  return r;
}

}  // namespace megan
