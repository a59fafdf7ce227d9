//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MEGAN_RUNTIME_H_
#define MEGAN_RUNTIME_H_

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "megan/meganet.h"

namespace megan {

struct TrainConfig {
  int batch_size = 4;
  double lr0 = 1e-4;
  int warmup_steps = 20000;
  // Counted in training samples.
  int eval_every = 20000;
  int eval_subset = 2500;
  double decay_factor = 0.1;
  int decay_patience = 4;
  int stop_patience = 8;
  // 0 means no limit; the schedule alone ends the run.
  int max_epochs = 0;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig &cfg);

// Warmup and stagnation logic. An evaluation that does not lower the best
// validation loss is stagnant. After decay_patience stagnant evaluations in a
// row (counted since the last improvement or decay) the rate is multiplied by
// decay_factor; after stop_patience since the last improvement training stops.
class LrSchedule {
public:
  enum class Event { Improved, Stagnant, Decayed, Stopped };

  struct State {
    double best = 0.0;
    bool has_best = false;
    int since_best = 0;
    int since_decay = 0;
    int decays = 0;
    double scale = 1.0;
    bool stopped = false;

    bool operator==(const State &) const = default;
  };

  explicit LrSchedule(const TrainConfig &cfg) : cfg_(cfg) { }

  // Rate of optimizer step `step` (1-based).
  double lr(std::uint64_t step) const;
  Event on_eval(double val_loss);

  const State &state() const { return state_; }
  void restore(const State &s) { state_ = s; }

private:
  TrainConfig cfg_;
  State state_;
};

// improved, stagnant, decayed, stopped.
std::string_view to_string(LrSchedule::Event e);

// Everything needed to continue a run where a checkpoint left it.
struct TrainState {
  int epoch = 0;
  int next_index = 0;
  std::uint64_t samples_seen = 0;
  std::uint64_t optimizer_steps = 0;
  int evals = 0;
  double train_nll_sum = 0.0;  // since the last evaluation
  int train_steps = 0;  // idem
  LrSchedule::State schedule;

  bool operator==(const TrainState &) const = default;
};

inline constexpr int kTrainStateFormatVersion = 1;
std::string train_state_to_text(const TrainState &s,
                                std::string_view config_hash = "");
TrainState train_state_from_text(std::string_view text);

struct EvalRecord {
  int eval = 0;
  std::uint64_t optimizer_steps = 0;
  std::uint64_t samples_seen = 0;
  double lr = 0.0;
  double train_nll = 0.0;  // per step, since the previous evaluation
  double val_nll = 0.0;  // per step
  LrSchedule::Event event = LrSchedule::Event::Improved;
};

struct TrainData {
  const std::vector<TrainingSample> *train = nullptr;
  const std::vector<TrainingSample> *valid = nullptr;
  const ActionVocab *vocab = nullptr;
  const FeatureConfig *features = nullptr;
};

struct TrainHooks {
  // After every evaluation, with the schedule already updated.
  std::function<void(const EvalRecord &, const TrainState &,
                     const ParamStore &)> on_eval;
  // Polled after every optimizer step; returning true pauses the run.
  std::function<bool(const TrainState &)> interrupt;
};

struct TrainResult {
  bool finished = false;  // schedule stop or epoch limit (not interrupted)
  std::vector<EvalRecord> evals;
  std::optional<double> best_val;
  std::string best_params;  // params_to_bytes of the best evaluation
};

// Teacher-forced training. The batch loss is the summed step NLL divided by
// the number of steps in the batch. Throws NonFiniteLossError.
TrainResult train(const TrainData &data, const ModelConfig &model,
                  const TrainConfig &cfg, ParamStore &params,
                  TrainState &state, const TrainHooks &hooks = {});

// Mean NLL per step, parameters held fixed.
double mean_nll(const ModelConfig &model, ParamStore &params,
                const std::vector<TrainingSample> &samples,
                const ActionVocab &vocab, const FeatureConfig &features);

// Sample order of an epoch: a permutation fixed by (seed, epoch).
std::vector<int> epoch_order(int n, std::uint64_t seed, int epoch);
// The fixed validation subset: the first `size` of a seeded permutation.
std::vector<int> validation_subset(int n, int size, std::uint64_t seed);

// --- beam search ------------------------------------------------------------

struct BeamConfig {
  int width = 50;
  int max_steps = 16;
  // Rank by log-prob divided by step count instead of the raw sum.
  bool length_normalize = false;
};

template <class State>
struct BeamHypothesis {
  State state;
  std::vector<int> actions;
  double log_prob = 0.0;
  bool finished = false;

  double score(bool normalize) const {
    return normalize && !actions.empty()
               ? log_prob / static_cast<double>(actions.size())
               : log_prob;
  }
};

// Generic beam search. A Problem provides
//   Expansion expand(const State &)            with a member log_probs
//   State advance(const State &, const Expansion &, int action, bool &stop)
// Finished hypotheses stay in the beam and compete with open ones. Ties are
// broken by hypothesis order, then by action index. The result is sorted by
// score, best first.
template <class Problem, class State>
std::vector<BeamHypothesis<State>> beam_search(Problem &problem, State initial,
                                               const BeamConfig &cfg) {
  using Hyp = BeamHypothesis<State>;
  std::vector<Hyp> beam;
  beam.push_back({ std::move(initial), {}, 0.0, false });
  for (int step = 0; step < cfg.max_steps; ++step) {
    if (std::all_of(beam.begin(), beam.end(),
                    [](const Hyp &h) { return h.finished; }))
      break;
    struct Cand {
      int parent;
      int action;  // -1 carries a finished hypothesis over
      double log_prob;
      double score;
    };
    std::vector<Cand> cands;
    std::vector<std::optional<decltype(problem.expand(beam[0].state))>>
        expansions(beam.size());
    for (int h = 0; h < static_cast<int>(beam.size()); ++h) {
      const Hyp &hyp = beam[h];
      if (hyp.finished) {
        cands.push_back({ h, -1, hyp.log_prob, hyp.score(cfg.length_normalize) });
        continue;
      }
      expansions[h] = problem.expand(hyp.state);
      const std::vector<double> &lp = expansions[h]->log_probs;
      std::vector<int> idx(lp.size());
      std::iota(idx.begin(), idx.end(), 0);
      const int keep = std::min<int>(cfg.width, static_cast<int>(idx.size()));
      std::partial_sort(idx.begin(), idx.begin() + keep, idx.end(),
                        [&](int a, int b) {
        return lp[a] > lp[b] || (lp[a] == lp[b] && a < b);
      });
      const double n = static_cast<double>(hyp.actions.size() + 1);
      for (int k = 0; k < keep; ++k) {
        const double total = hyp.log_prob + lp[idx[k]];
        cands.push_back({ h, idx[k], total,
                          cfg.length_normalize ? total / n : total });
      }
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [](const Cand &a, const Cand &b) {
      return a.score > b.score;
    });
    if (static_cast<int>(cands.size()) > cfg.width)
      cands.resize(cfg.width);
    std::vector<Hyp> next;
    next.reserve(cands.size());
    for (const Cand &c: cands) {
      const Hyp &parent = beam[c.parent];
      if (c.action < 0) {
        next.push_back(parent);
        continue;
      }
      bool stop = false;
      State s = problem.advance(parent.state, *expansions[c.parent], c.action,
                                stop);
      Hyp h { std::move(s), parent.actions, c.log_prob, stop };
      h.actions.push_back(c.action);
      if (static_cast<int>(h.actions.size()) >= cfg.max_steps)
        h.finished = true;
      next.push_back(std::move(h));
    }
    beam = std::move(next);
  }
  for (Hyp &h: beam)
    h.finished = true;
  std::stable_sort(beam.begin(), beam.end(), [&](const Hyp &a, const Hyp &b) {
    return a.score(cfg.length_normalize) > b.score(cfg.length_normalize);
  });
  return beam;
}

// MEGAN as a beam-search problem over graph states.
class MeganDecoder {
public:
  struct State {
    MolGraph graph;  // with supernode
    // Decoder output of the previous step (absent before the first step).
    std::shared_ptr<const Tensor> hidden;
    std::shared_ptr<const MolGraph> previous;
    int invalid_actions = 0;
  };

  struct Expansion {
    std::vector<double> log_probs;
    std::shared_ptr<const Tensor> hidden;
  };

  MeganDecoder(const ModelConfig &model, ParamStore &params,
               const ActionVocab &vocab, const FeatureConfig &features);

  State initial(const MolGraph &source) const;
  void set_reaction_class(std::optional<int> c) { reaction_class_ = c; }

  Expansion expand(const State &s);
  // Actions that cannot be applied leave the graph unchanged.
  State advance(const State &s, const Expansion &e, int action, bool &stop);

  const ActionVocab &vocab() const { return vocab_; }
  const ModelConfig &model() const { return model_; }

private:
  ModelConfig model_;
  ParamStore &params_;
  const ActionVocab &vocab_;
  const FeatureConfig &features_;
  std::optional<int> reaction_class_;
};

struct RankedCandidate {
  std::string smiles;  // canonical, map-stripped; dot-joined for retro
  double score = 0.0;
  std::vector<int> actions;
};

struct Prediction {
  std::vector<RankedCandidate> candidates;
  int raw_hypotheses = 0;
  int invalid_valence = 0;
  int duplicates = 0;
};

// A final graph's answer: the whole molecule set for retro, the component with
// the longest canonical SMILES for forward. Throws ValenceError.
std::string extract_answer(const MolGraph &final_graph, Direction direction);

// Source graph (no supernode) to ranked, deduplicated answers.
Prediction predict(MeganDecoder &decoder, const MolGraph &source,
                   std::optional<int> reaction_class, const BeamConfig &cfg);

// Sum of log-probabilities of a layout-position sequence, re-evaluated from
// scratch (used to check beam scores).
double sequence_log_prob(MeganDecoder &decoder, const MolGraph &source,
                         std::optional<int> reaction_class,
                         const std::vector<int> &actions);

// --- evaluation -------------------------------------------------------------

inline const std::vector<int> kDefaultTopK = { 1, 3, 5, 10, 20, 50 };

struct TopKReport {
  std::vector<int> ks;
  std::vector<int> hits;
  int total = 0;

  double accuracy(std::size_t i) const {
    return total == 0 ? 0.0 : static_cast<double>(hits[i]) / total;
  }
};

// ranked[r] holds the canonical candidates of reaction r, truth[r] its answer.
TopKReport top_k_accuracy(const std::vector<std::vector<std::string>> &ranked,
                          const std::vector<std::string> &truth,
                          const std::vector<int> &ks = kDefaultTopK);

}  // namespace megan

#endif  // MEGAN_RUNTIME_H_
