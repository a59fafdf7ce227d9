//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MEGAN_PARAMS_H_
#define MEGAN_PARAMS_H_

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "megan/numcore.h"

namespace megan {

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
  // Adam moments.
  Tensor m;
  Tensor v;
};

// Named parameters in insertion order. Addresses are stable.
class ParamStore {
public:
  // Throws ConfigError on a duplicate name.
  Param &add(const std::string &name, Tensor value);
  Param &get(const std::string &name);
  const Param &get(const std::string &name) const;
  bool contains(const std::string &name) const { return index_.count(name); }
  // Insertion index of a parameter; throws ConfigError if unknown.
  int index_of(const std::string &name) const;

  int size() const { return static_cast<int>(params_.size()); }
  Param &at(int i) { return *params_[i]; }
  const Param &at(int i) const { return *params_[i]; }
  std::int64_t num_values() const;

  void zero_grad();
  // Sum of squared gradient entries.
  double grad_norm_sq() const;
  bool grads_finite() const;

  std::uint64_t adam_step_count = 0;

private:
  std::vector<std::unique_ptr<Param>> params_;
  std::map<std::string, int> index_;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update with the gradients held in the store.
void adam_step(ParamStore &store, double lr, const AdamConfig &cfg = {});

// Little-endian binary bundle: magic, version, step count, then per parameter
// its name, shape, values and Adam moments. Load is bit-exact.
inline constexpr std::uint32_t kParamFormatVersion = 1;
std::string params_to_bytes(const ParamStore &store);
// Throws DataError on a truncated or malformed bundle.
ParamStore params_from_bytes(std::string_view bytes);
// Copies values and moments into `dst`, which must hold the same names and
// shapes (ShapeMismatchError / DataError otherwise).
void load_into(ParamStore &dst, const ParamStore &src);

}  // namespace megan

#endif  // MEGAN_PARAMS_H_
