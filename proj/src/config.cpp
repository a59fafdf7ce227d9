//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "megan/config.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <functional>
#include <sstream>

#include "megan/error.h"

namespace megan {

namespace {

enum class Type { Int, Float, Bool, String };

std::string_view type_name(Type t) {
  switch (t) {
  case Type::Int:
    return "int";
  case Type::Float:
    return "float";
  case Type::Bool:
    return "bool";
  case Type::String:
    return "string";
  }
  return "?";
}

struct Key {
  const char *name;
  Type type;
  std::function<std::string(const RunConfig &)> get;
  std::function<void(RunConfig &, const std::string &)> set;
};

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
    ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
    --e;
  return std::string(s.substr(b, e - b));
}

long long parse_int(const std::string &key, const std::string &v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

int parse_int32(const std::string &key, const std::string &v) {
  const long long x = parse_int(key, v);
  if (x < -2147483647LL || x > 2147483647LL)
    throw ConfigError(key + ": value out of range");
  return static_cast<int>(x);
}

double parse_float(const std::string &key, const std::string &v) {
  char *end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size())
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string &key, const std::string &v) {
  if (v == "true" || v == "1")
    return true;
  if (v == "false" || v == "0")
    return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string fmt_float(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_bool(bool v) { return v ? "true" : "false"; }

std::string fmt_string(const std::string &s) { return '"' + s + '"'; }

std::vector<int> parse_ks(const std::string &key, const std::string &v) {
  std::vector<int> ks;
  std::stringstream in(v);
  std::string tok;
  while (std::getline(in, tok, ','))
    ks.push_back(parse_int32(key, trim(tok)));
  return ks;
}

std::string fmt_ks(const std::vector<int> &ks) {
  std::string out;
  for (std::size_t i = 0; i < ks.size(); ++i)
    out += (i ? "," : "") + std::to_string(ks[i]);
  return out;
}

#define INT_KEY(name, field)                                                   \
  Key { name, Type::Int,                                                       \
        [](const RunConfig &c) { return std::to_string(c.field); },            \
        [](RunConfig &c, const std::string &v) {                               \
          c.field = parse_int32(name, v);                                      \
        } }
#define FLOAT_KEY(name, field)                                                 \
  Key { name, Type::Float,                                                     \
        [](const RunConfig &c) { return fmt_float(c.field); },                 \
        [](RunConfig &c, const std::string &v) {                               \
          c.field = parse_float(name, v);                                      \
        } }
#define BOOL_KEY(name, field)                                                  \
  Key { name, Type::Bool,                                                      \
        [](const RunConfig &c) { return fmt_bool(c.field); },                  \
        [](RunConfig &c, const std::string &v) {                               \
          c.field = parse_bool(name, v);                                       \
        } }
#define STRING_KEY(name, field)                                                \
  Key { name, Type::String,                                                    \
        [](const RunConfig &c) { return fmt_string(c.field); },                \
        [](RunConfig &c, const std::string &v) { c.field = v; } }

const std::vector<Key> &keys() {
  static const std::vector<Key> k = [] {
    std::vector<Key> v = {
      Key { "direction", Type::String,
            [](const RunConfig &c) {
              return fmt_string(std::string(to_string(c.direction)));
            },
            [](RunConfig &c, const std::string &s) {
              const Direction d = parse_direction(s);
              // Switching direction moves untouched step and beam defaults.
              const RunConfig from = default_run_config(c.direction);
              const RunConfig to = default_run_config(d);
              if (c.max_steps == from.max_steps)
                c.max_steps = to.max_steps;
              if (c.beam == from.beam)
                c.beam = to.beam;
              c.direction = d;
            } },
      Key { "ordering", Type::String,
            [](const RunConfig &c) {
              return fmt_string(std::string(to_string(c.ordering)));
            },
            [](RunConfig &c, const std::string &s) {
              c.ordering = parse_ordering(s);
            } },
      Key { "seed", Type::Int,
            [](const RunConfig &c) { return std::to_string(c.seed); },
            [](RunConfig &c, const std::string &s) {
              const long long v = parse_int("seed", s);
              if (v < 0)
                throw ConfigError("seed: must not be negative");
              c.seed = static_cast<std::uint64_t>(v);
            } },
      INT_KEY("max_steps", max_steps),
      INT_KEY("beam", beam),
      BOOL_KEY("beam.length_normalize", length_normalize),
      BOOL_KEY("reaction_type_prior", reaction_type_prior),
      STRING_KEY("data.train", train_path),
      STRING_KEY("data.valid", valid_path),
      STRING_KEY("data.test", test_path),
      BOOL_KEY("features.chirality", use_chirality),
      BOOL_KEY("features.bond_stereo", use_bond_stereo),
      BOOL_KEY("features.reactant_flag", use_reactant_flag),
      FLOAT_KEY("preprocess.min_acceptance", min_acceptance),
      STRING_KEY("model.preset", model_preset),
      INT_KEY("model.atom_dim", model.atom_dim),
      INT_KEY("model.bond_dim", model.bond_dim),
      INT_KEY("model.heads", model.heads),
      INT_KEY("model.attention_dim", model.attention_dim),
      INT_KEY("model.head_hidden", model.head_hidden),
      INT_KEY("model.encoder_layers", model.encoder_layers),
      INT_KEY("model.decoder_layers", model.decoder_layers),
      Key { "model.recurrence", Type::String,
            [](const RunConfig &c) {
              return fmt_string(std::string(to_string(c.model.recurrence)));
            },
            [](RunConfig &c, const std::string &s) {
              c.model.recurrence = parse_recurrence(s);
            } },
      INT_KEY("train.batch_size", train.batch_size),
      FLOAT_KEY("train.lr0", train.lr0),
      INT_KEY("train.warmup_steps", train.warmup_steps),
      INT_KEY("train.eval_every", train.eval_every),
      INT_KEY("train.eval_subset", train.eval_subset),
      FLOAT_KEY("train.decay_factor", train.decay_factor),
      INT_KEY("train.decay_patience", train.decay_patience),
      INT_KEY("train.stop_patience", train.stop_patience),
      INT_KEY("train.max_epochs", train.max_epochs),
      Key { "eval.ks", Type::String,
            [](const RunConfig &c) { return fmt_string(fmt_ks(c.ks)); },
            [](RunConfig &c, const std::string &s) {
              c.ks = parse_ks("eval.ks", s);
            } },
    };
    std::sort(v.begin(), v.end(), [](const Key &a, const Key &b) {
      return std::string_view(a.name) < std::string_view(b.name);
    });
    return v;
  }();
  return k;
}

#undef INT_KEY
#undef FLOAT_KEY
#undef BOOL_KEY
#undef STRING_KEY

const Key &find_key(std::string_view name) {
  for (const Key &k: keys())
    if (name == k.name)
      return k;
  throw ConfigError("unknown config key '" + std::string(name) + "'");
}

std::string unquote(const std::string &v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"')
    return v.substr(1, v.size() - 2);
  return v;
}

}  // namespace

RunConfig default_run_config(Direction direction) {
  RunConfig c;
  c.direction = direction;
  c.model.direction = direction;
  if (direction == Direction::Forward) {
    c.max_steps = 8;
    c.beam = 20;
  }
  return c;
}

void set_config_value(RunConfig &cfg, std::string_view key,
                      std::string_view value) {
  const Key &k = find_key(key);
  try {
    k.set(cfg, unquote(trim(value)));
  }
  catch (const ConfigError &e) {
    const std::string msg = e.what();
    if (msg.rfind(k.name, 0) == 0)
      throw;
    throw ConfigError(std::string(k.name) + ": " + msg);
  }
}

void apply_config_text(RunConfig &cfg, std::string_view text) {
  std::istringstream in { std::string(text) };
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string body = line;
    bool quoted = false;
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (body[i] == '"')
        quoted = !quoted;
      else if (body[i] == '#' && !quoted) {
        body.resize(i);
        break;
      }
    }
    body = trim(body);
    if (body.empty())
      continue;
    const std::size_t colon = body.find(':');
    const std::size_t eq = body.find('=');
    if (colon == std::string::npos || eq == std::string::npos || eq < colon)
      throw ConfigError("config line " + std::to_string(line_no)
                        + ": expected 'key: type = value'");
    const std::string key = trim(body.substr(0, colon));
    const std::string type = trim(body.substr(colon + 1, eq - colon - 1));
    const std::string value = trim(body.substr(eq + 1));
    const Key &k = find_key(key);
    if (type != type_name(k.type))
      throw ConfigError("config key '" + key + "' has type "
                        + std::string(type_name(k.type)) + ", not '" + type
                        + "'");
    set_config_value(cfg, key, value);
  }
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const Key &k: keys())
    out.emplace_back(k.name);
  return out;
}

std::string config_to_text(const RunConfig &cfg) {
  std::string out;
  for (const Key &k: keys())
    out += std::string(k.name) + ": " + std::string(type_name(k.type)) + " = "
           + k.get(cfg) + "\n";
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c: bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string config_hash(const RunConfig &cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(config_to_text(cfg))));
  return buf;
}

void validate(const RunConfig &c) {
  if (c.max_steps < 1)
    throw ConfigError("max_steps: must be at least 1");
  if (c.beam < 1)
    throw ConfigError("beam: must be at least 1");
  if (c.min_acceptance < 0.0 || c.min_acceptance > 1.0)
    throw ConfigError("preprocess.min_acceptance: must lie in [0, 1]");
  if (c.model_preset != "default" && c.model_preset != "wide")
    throw ConfigError("model.preset: expected default or wide, got '"
                      + c.model_preset + "'");
  if (c.ks.empty())
    throw ConfigError("eval.ks: empty list");
  for (std::size_t i = 0; i < c.ks.size(); ++i)
    if (c.ks[i] < 1 || (i > 0 && c.ks[i] <= c.ks[i - 1]))
      throw ConfigError("eval.ks: values must be positive and increasing");
  const ModelConfig m = model_config(c);
  if (m.atom_dim <= 0 || m.bond_dim <= 0 || m.heads <= 0
      || m.attention_dim <= 0 || m.head_hidden <= 0 || m.encoder_layers <= 0
      || m.decoder_layers < 0)
    throw ConfigError("model: dimensions and depths must be positive");
  if (m.atom_dim % m.heads != 0)
    throw ConfigError("model.atom_dim: not divisible by model.heads");
  validate(c.train);
}

PreprocessOptions preprocess_options(const RunConfig &c) {
  PreprocessOptions o;
  o.direction = c.direction;
  o.ordering = { c.ordering, c.seed };
  o.max_steps = c.max_steps;
  o.features.use_chirality = c.use_chirality;
  o.features.use_bond_stereo = c.use_bond_stereo;
  o.features.use_reactant_flag = c.use_reactant_flag;
  o.features.num_reaction_types = c.reaction_type_prior ? 10 : 0;
  return o;
}

ModelConfig model_config(const RunConfig &c) {
  ModelConfig m = c.model;
  if (c.model_preset == "wide")
    m = wide_preset(m);
  m.direction = c.direction;
  m.max_steps = c.max_steps;
  m.use_reaction_type = c.reaction_type_prior;
  return m;
}

}  // namespace megan
