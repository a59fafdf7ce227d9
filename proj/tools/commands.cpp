//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "commands.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "megan/checkpoint.h"
#include "megan/config.h"
#include "megan/dataset.h"
#include "megan/error.h"
#include "megan/runtime.h"
#include "megan/smiles.h"

namespace megan::cli {

namespace fs = std::filesystem;

namespace {

const char *const kSplits[] = { "train", "valid", "test" };

RunConfig resolve(const CommonOptions &o, const std::string &base = {}) {
  RunConfig cfg = default_run_config();
  if (!base.empty())
    apply_config_text(cfg, base);
  if (!o.config_path.empty()) {
    std::string text;
    try {
      text = read_file(o.config_path);
    }
    catch (const DataError &) {
      throw ConfigError("cannot read config file " + o.config_path);
    }
    apply_config_text(cfg, text);
  }
  if (o.direction)
    set_config_value(cfg, "direction", *o.direction);
  if (o.ordering)
    set_config_value(cfg, "ordering", *o.ordering);
  if (o.seed)
    set_config_value(cfg, "seed", std::to_string(*o.seed));
  if (o.beam)
    set_config_value(cfg, "beam", std::to_string(*o.beam));
  if (o.max_steps)
    set_config_value(cfg, "max_steps", std::to_string(*o.max_steps));
  if (o.reaction_type_prior)
    cfg.reaction_type_prior = true;
  for (const std::string &kv: o.overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override '" + kv + "' is not key=value");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  validate(cfg);
  return cfg;
}

std::string header(std::string_view kind, const std::string &hash) {
  return "# megan-" + std::string(kind) + "\t1\t" + hash + "\n";
}

std::string fmt(double v, const char *spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

void append_graph(MolGraph &dst, const MolGraph &src, bool reactant) {
  const int offset = dst.size();
  for (AtomNode a: src.atoms()) {
    a.in_reactant = reactant;
    dst.add_atom(a);
  }
  for (const auto &[key, b]: src.bonds())
    dst.set_bond(key.first + offset, key.second + offset, b);
}

// Model input of a prediction line: a molecule set, or a reaction whose source
// side is taken (product for retro; reactants and reagents for forward).
MolGraph source_graph(const std::string &text, Direction direction) {
  MolGraph g;
  const std::size_t first = text.find('>');
  if (first == std::string::npos) {
    append_graph(g, parse_smiles(text), true);
  }
  else {
    const std::size_t second = text.find('>', first + 1);
    if (second == std::string::npos)
      throw SyntaxError(first, "expected 'reactants>reagents>product'");
    if (direction == Direction::Retro)
      append_graph(g, parse_smiles(text.substr(second + 1)), true);
    else {
      append_graph(g, parse_smiles(text.substr(0, first)), true);
      const std::string reagents = text.substr(first + 1, second - first - 1);
      if (!reagents.empty())
        append_graph(g, parse_smiles(reagents), false);
    }
  }
  return clear_edit_flags(strip_maps(normalize_hydrogens(g)));
}

struct PredictInput {
  std::string id;
  std::string text;
  std::optional<int> reaction_class;
};

std::vector<PredictInput> read_predict_inputs(const PredictArgs &a) {
  std::vector<PredictInput> out;
  if (!a.reactions.empty()) {
    for (const ReactionRecord &r: read_reactions(a.reactions, "test"))
      out.push_back({ r.id, r.rxn, r.reaction_class });
    return out;
  }
  std::istringstream in(read_file(a.input));
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    ++n;
    if (line.empty() || line[0] == '#')
      continue;
    const std::vector<std::string> f = split_fields(line, '\t');
    PredictInput p;
    if (f.size() == 1) {
      p.id = std::to_string(n);
      p.text = f[0];
    }
    else {
      p.id = f[0];
      p.text = f[1];
      if (f.size() > 2 && !f[2].empty()) {
        try {
          p.reaction_class = std::stoi(f[2]);
        }
        catch (const std::logic_error &) {
        }
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

struct PredictionRow {
  std::string input;
  std::vector<std::string> candidates;
  bool error = false;
};

std::map<std::string, PredictionRow> read_predictions(const std::string &path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::map<std::string, PredictionRow> out;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line[0] == '#')
      continue;
    const std::vector<std::string> f = split_fields(line, '\t');
    if (f.size() < 3)
      throw DataError(path + ":" + std::to_string(n)
                      + ": expected id, input and candidates");
    PredictionRow row;
    row.input = f[1];
    if (f[2].rfind("!error:", 0) == 0)
      row.error = true;
    else if (!f[2].empty()) {
      std::stringstream cs(f[2]);
      std::string item;
      while (std::getline(cs, item, ';')) {
        const std::size_t sp = item.rfind(' ');
        row.candidates.push_back(sp == std::string::npos ? item
                                                         : item.substr(0, sp));
      }
    }
    if (!out.emplace(f[0], std::move(row)).second)
      throw DataError(path + ":" + std::to_string(n) + ": duplicate id "
                      + f[0]);
  }
  return out;
}

std::vector<int> parse_ks(const std::string &s) {
  RunConfig tmp;
  set_config_value(tmp, "eval.ks", s);
  return tmp.ks;
}

}  // namespace

int cmd_preprocess(const CommonOptions &common, const PreprocessArgs &args,
                   std::ostream &log) {
  RunConfig cfg = resolve(common);
  if (!args.train.empty())
    cfg.train_path = args.train;
  if (!args.valid.empty())
    cfg.valid_path = args.valid;
  if (!args.test.empty())
    cfg.test_path = args.test;
  if (args.out.empty())
    throw ConfigError("preprocess needs --out");
  std::vector<ReactionRecord> records;
  if (!args.input.empty())
    records = read_reactions(args.input, "train");
  const std::pair<const std::string *, const char *> files[] = {
    { &cfg.train_path, "train" },
    { &cfg.valid_path, "valid" },
    { &cfg.test_path, "test" },
  };
  bool any_input = !args.input.empty();
  for (const auto &[path, split]: files)
    if (!path->empty()) {
      any_input = true;
      for (ReactionRecord &r: read_reactions(*path, split)) {
        r.split = split;
        records.push_back(std::move(r));
      }
    }
  if (!any_input)
    throw ConfigError("preprocess needs --input or data.train/valid/test");

  const std::string hash = config_hash(cfg);
  const PreprocessOutput out = preprocess(records, preprocess_options(cfg));
  fs::create_directories(args.out);
  DirLock lock(args.out);
  for (const char *split: kSplits) {
    auto it = out.samples.find(split);
    const std::vector<TrainingSample> none;
    write_file(fs::path(args.out) / ("samples_" + std::string(split) + ".txt"),
               samples_to_text(it == out.samples.end() ? none : it->second,
                               hash));
  }
  write_file(fs::path(args.out) / kVocabFile, vocab_to_text(out.vocab, hash));
  write_file(fs::path(args.out) / kFeaturesFile,
             feature_config_to_text(out.features, hash));
  write_file(fs::path(args.out) / "report.txt",
             report_to_text(out.report, out.vocab, out.features, hash));
  write_file(fs::path(args.out) / kRunConfigFile,
             header("run-config", hash) + config_to_text(cfg));

  const PreprocessReport &rep = out.report;
  log << "preprocess: accepted " << rep.total_accepted() << ", rejected "
      << rep.total_rejected() << ", vocab " << out.vocab.size() << " ("
      << out.vocab.count(ActionKind::EditAtom) << " EditAtom, "
      << out.vocab.count(ActionKind::EditBond) << " EditBond, "
      << out.vocab.count(ActionKind::AddAtom) << " AddAtom, "
      << out.vocab.count(ActionKind::AddBenzene) << " AddBenzene, "
      << out.vocab.count(ActionKind::Stop) << " Stop), atom features "
      << out.features.atom_width() << ", bond features "
      << out.features.bond_width() << "\n";
  for (const auto &[reason, n]: rep.reasons)
    log << "  rejected " << n << " x " << reason << "\n";
  if (rep.total_accepted() == 0) {
    log << "preprocess: no reaction accepted\n";
    return kData;
  }
  if (rep.acceptance() < cfg.min_acceptance) {
    log << "preprocess: acceptance " << fmt(rep.acceptance(), "%.4f")
        << " is below " << cfg.min_acceptance << "\n";
    return kData;
  }
  return kOk;
}

int cmd_train(const CommonOptions &common, const TrainArgs &args,
              std::ostream &log) {
  RunConfig cfg = resolve(common);
  if (args.max_epochs)
    cfg.train.max_epochs = *args.max_epochs;
  validate(cfg);
  if (args.data.empty() || args.checkpoint.empty())
    throw ConfigError("train needs --data and --checkpoint");
  const fs::path data(args.data);
  const std::vector<TrainingSample> train_set =
      samples_from_text(read_file(data / "samples_train.txt"));
  std::vector<TrainingSample> valid_set;
  if (fs::exists(data / "samples_valid.txt"))
    valid_set = samples_from_text(read_file(data / "samples_valid.txt"));
  const ActionVocab vocab = vocab_from_text(read_file(data / kVocabFile));
  const FeatureConfig features =
      feature_config_from_text(read_file(data / kFeaturesFile));
  for (const TrainingSample &s: train_set)
    if (s.direction != cfg.direction)
      throw DataError("sample " + s.id + " was prepared for direction "
                      + std::string(to_string(s.direction)));

  const ModelConfig model = bind_data(model_config(cfg), vocab, features);
  validate(model);
  const std::string hash = config_hash(cfg);
  const fs::path ckpt(args.checkpoint);
  DirLock lock(ckpt);

  Bundle bundle;
  bundle.model = model;
  bundle.vocab = vocab;
  bundle.features = features;
  bundle.run_config = config_to_text(cfg);
  bundle.hash = hash;
  TrainState state;
  if (!args.fresh && has_bundle(ckpt)
      && fs::exists(ckpt / kTrainStateFile)) {
    Bundle old = read_bundle(ckpt);
    if (!(old.model == model) || !(old.vocab == vocab)
        || !(old.features == features))
      throw ConfigError("checkpoint in " + ckpt.string()
                        + " was made with different settings; use --fresh");
    bundle.params = std::move(old.params);
    state = *old.state;
    log << "train: resuming at step " << state.optimizer_steps << " (epoch "
        << state.epoch << ")\n";
  }
  else {
    bundle.params = init_params(model, cfg.seed);
    log << "train: " << count_params(model) << " parameters, "
        << train_set.size() << " training and " << valid_set.size()
        << " validation samples\n";
  }

  std::string best = fs::exists(ckpt / kBestParamsFile) && !args.fresh
                         ? read_file(ckpt / kBestParamsFile)
                         : std::string();
  TrainHooks hooks;
  hooks.on_eval = [&](const EvalRecord &r, const TrainState &s,
                      const ParamStore &params) {
    log << "eval " << r.eval << " step " << r.optimizer_steps << " samples "
        << r.samples_seen << " lr " << fmt(r.lr, "%.3g") << " train_nll "
        << fmt(r.train_nll) << " val_nll " << fmt(r.val_nll) << " "
        << to_string(r.event) << "\n";
    if (r.event == LrSchedule::Event::Improved)
      best = params_to_bytes(params);
    bundle.state = s;
    // The store is written as is; it aliases bundle.params.
    write_bundle(ckpt, bundle, best);
  };
  if (args.stop_after_steps) {
    const std::uint64_t limit = *args.stop_after_steps;
    hooks.interrupt = [limit](const TrainState &s) {
      return s.optimizer_steps >= limit;
    };
  }
  const TrainData td { &train_set, &valid_set, &vocab, &features };
  const TrainResult result = train(td, model, cfg.train, bundle.params, state,
                                   hooks);
  bundle.state = state;
  if (best.empty())
    best = params_to_bytes(bundle.params);
  write_bundle(ckpt, bundle, best);
  log << "train: " << (result.finished ? "finished" : "paused") << " after "
      << state.optimizer_steps << " steps";
  if (state.schedule.has_best)
    log << ", best val_nll " << fmt(state.schedule.best);
  log << "\n";
  return kOk;
}

int cmd_predict(const CommonOptions &common, const PredictArgs &args,
                std::ostream &log) {
  if (args.checkpoint.empty() || args.output.empty()
      || (args.input.empty() == args.reactions.empty()))
    throw ConfigError(
        "predict needs --checkpoint, --output and one of --input/--reactions");
  const fs::path ckpt(args.checkpoint);
  Bundle bundle = read_bundle(ckpt, !args.last);
  RunConfig cfg = resolve(common, bundle.run_config);
  ModelConfig model = bundle.model;
  if (cfg.direction != model.direction)
    throw ConfigError("checkpoint was trained for direction "
                      + std::string(to_string(model.direction)));
  const std::string hash = config_hash(cfg);
  MeganDecoder decoder(model, bundle.params, bundle.vocab, bundle.features);
  const BeamConfig beam { cfg.beam, cfg.max_steps, cfg.length_normalize };

  std::ostringstream out;
  out << header("predictions", hash);
  int errors = 0;
  std::uint64_t raw = 0, unique = 0, invalid = 0;
  for (const PredictInput &in: read_predict_inputs(args)) {
    out << in.id << '\t' << in.text << '\t';
    try {
      const MolGraph source = source_graph(in.text, model.direction);
      std::optional<int> cls;
      if (model.use_reaction_type)
        cls = in.reaction_class;
      const Prediction p = predict(decoder, source, cls, beam);
      for (std::size_t k = 0; k < p.candidates.size(); ++k)
        out << (k ? ";" : "") << p.candidates[k].smiles << ' '
            << fmt(p.candidates[k].score);
      out << "\traw=" << p.raw_hypotheses << " unique=" << p.candidates.size()
          << " invalid=" << p.invalid_valence << '\n';
      raw += p.raw_hypotheses;
      unique += p.candidates.size();
      invalid += p.invalid_valence;
    }
    catch (const Error &e) {
      out << "!error:" << e.kind() << "\t-\n";
      ++errors;
    }
  }
  write_file(args.output, out.str());
  log << "predict: " << raw << " hypotheses, " << unique
      << " unique candidates, " << invalid << " failed valence, " << errors
      << " unreadable inputs\n";
  return kOk;
}

int cmd_evaluate(const CommonOptions &common, const EvaluateArgs &args,
                 std::ostream &log) {
  RunConfig cfg = resolve(common);
  if (!args.ks.empty())
    cfg.ks = parse_ks(args.ks);
  validate(cfg);
  if (args.predictions.empty() || args.truth.empty())
    throw ConfigError("evaluate needs --predictions and --truth");
  const auto predictions = read_predictions(args.predictions);
  std::vector<std::vector<std::string>> ranked;
  std::vector<std::string> truth;
  int skipped = 0, missing = 0;
  for (const ReactionRecord &r: read_reactions(args.truth, "test")) {
    std::string key;
    try {
      const Reaction rx = parse_reaction(r.rxn, cfg.direction);
      key = canonical_key(rx.target());
    }
    catch (const Error &) {
      ++skipped;
      continue;
    }
    truth.push_back(key);
    auto it = predictions.find(r.id);
    if (it == predictions.end()) {
      ++missing;
      ranked.emplace_back();
    }
    else
      ranked.push_back(it->second.candidates);
  }
  const TopKReport rep = top_k_accuracy(ranked, truth, cfg.ks);
  const std::string hash = config_hash(cfg);
  std::ostringstream table, kv;
  table << header("metrics", hash) << "k\thits\ttotal\taccuracy\n";
  kv << header("metrics-kv", hash);
  for (std::size_t i = 0; i < rep.ks.size(); ++i) {
    table << rep.ks[i] << '\t' << rep.hits[i] << '\t' << rep.total << '\t'
          << fmt(100.0 * rep.accuracy(i), "%.2f") << '\n';
    kv << "top" << rep.ks[i] << '=' << fmt(rep.accuracy(i), "%.6f") << '\n';
  }
  kv << "total=" << rep.total << "\nmissing_predictions=" << missing
     << "\nunreadable_truth=" << skipped << '\n';
  log << table.str();
  log << "evaluate: " << rep.total << " reactions, " << missing
      << " without predictions, " << skipped << " unreadable\n";
  if (!args.output.empty()) {
    write_file(args.output + ".tsv", table.str());
    write_file(args.output + ".kv", kv.str());
  }
  return kOk;
}

int run(int argc, char **argv, std::ostream &out, std::ostream &err) {
  CLI::App app { "Reaction prediction as molecular graph edit sequences",
                 "megan" };
  app.require_subcommand(1);
  CommonOptions common;
  PreprocessArgs pre;
  TrainArgs tr;
  PredictArgs pr;
  EvaluateArgs ev;
  std::uint64_t seed = 0;
  std::string direction, ordering;
  int beam = 0, max_steps = 0;

  auto add_common = [&](CLI::App *sub) {
    sub->add_option("--config", common.config_path, "Config file");
    sub->add_option("--seed", seed, "Random seed");
    sub->add_option("--direction", direction, "retro or forward")
        ->check(CLI::IsMember({ "retro", "forward" }));
    sub->add_option("--ordering", ordering, "Action ordering")
        ->check(CLI::IsMember(
            { "bfs-rand", "dfs-rand", "bfs-cano", "dfs-cano", "random" }));
    sub->add_option("--beam", beam, "Beam width")->check(CLI::PositiveNumber);
    sub->add_option("--max-steps", max_steps, "Maximum number of actions")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--reaction-type-prior", common.reaction_type_prior,
                  "Feed the reaction class to the model");
    sub->add_option("--set", common.overrides, "Config override key=value");
  };

  CLI::App *p = app.add_subcommand("preprocess", "Generate training samples");
  add_common(p);
  p->add_option("--input", pre.input, "Reaction file (optional split column)");
  p->add_option("--train", pre.train, "Training reactions");
  p->add_option("--valid", pre.valid, "Validation reactions");
  p->add_option("--test", pre.test, "Test reactions");
  p->add_option("--out", pre.out, "Output directory")->required();

  CLI::App *t = app.add_subcommand("train", "Train a model");
  add_common(t);
  t->add_option("--data", tr.data, "Preprocessed directory")->required();
  t->add_option("--checkpoint", tr.checkpoint, "Checkpoint directory")
      ->required();
  t->add_flag("--fresh", tr.fresh, "Ignore an existing checkpoint");
  t->add_option("--max-epochs", tr.max_epochs, "Epoch limit");
  t->add_option("--stop-after-steps", tr.stop_after_steps,
                "Pause after this many optimizer steps");

  CLI::App *d = app.add_subcommand("predict", "Rank candidate answers");
  add_common(d);
  d->add_option("--checkpoint", pr.checkpoint, "Checkpoint directory")
      ->required();
  d->add_option("--input", pr.input, "Lines of 'smiles' or 'id<TAB>smiles'");
  d->add_option("--reactions", pr.reactions, "Reaction file");
  d->add_option("--output", pr.output, "Predictions file")->required();
  d->add_flag("--last", pr.last, "Use the latest parameters, not the best");

  CLI::App *e = app.add_subcommand("evaluate", "Top-k accuracy");
  add_common(e);
  e->add_option("--predictions", ev.predictions, "Predictions file")
      ->required();
  e->add_option("--truth", ev.truth, "Reaction file with answers")->required();
  e->add_option("--output", ev.output, "Report prefix (.tsv and .kv)");
  e->add_option("--ks", ev.ks, "Comma-separated k values");

  try {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError &ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kOk : kUsage;
  }
  CLI::App *sub = app.get_subcommands().front();
  if (sub->count("--seed"))
    common.seed = seed;
  if (sub->count("--direction"))
    common.direction = direction;
  if (sub->count("--ordering"))
    common.ordering = ordering;
  if (sub->count("--beam"))
    common.beam = beam;
  if (sub->count("--max-steps"))
    common.max_steps = max_steps;

  try {
    if (sub == p)
      return cmd_preprocess(common, pre, err);
    if (sub == t)
      return cmd_train(common, tr, err);
    if (sub == d)
      return cmd_predict(common, pr, err);
    return cmd_evaluate(common, ev, err);
  }
  catch (const ConfigError &ex) {
    err << "megan: " << ex.what() << "\n";
    return kUsage;
  }
  catch (const NonFiniteLossError &ex) {
    err << "megan: numeric failure: " << ex.what() << "\n";
    return kNumeric;
  }
  catch (const Error &ex) {
    err << "megan: " << ex.kind() << ": " << ex.what() << "\n";
    return kData;
  }
  catch (const std::exception &ex) {
    err << "megan: " << ex.what() << "\n";
    return kData;
  }
}

}  // namespace megan::cli
