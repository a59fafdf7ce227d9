//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "megan/params.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "megan/error.h"

namespace megan {

namespace {

constexpr char kMagic[8] = { 'M', 'E', 'G', 'A', 'N', 'P', 'R', 'M' };

template <class T>
void put(std::string &out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big)
    std::reverse(b, b + sizeof(T));
  out.append(reinterpret_cast<const char *>(b), sizeof(T));
}

class Reader {
public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) { }

  template <class T>
  T get() {
    need(sizeof(T));
    unsigned char b[sizeof(T)];
    std::memcpy(b, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
      std::reverse(b, b + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
  }

  std::string_view take(std::size_t n) {
    need(n);
    std::string_view s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n)
      throw DataError("parameter bundle is truncated");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

void put_tensor(std::string &out, const Tensor &t, int rows, int cols) {
  if (t.shape() != std::array<int, 2> { rows, cols }) {
    for (int k = 0; k < rows * cols; ++k)
      put<double>(out, 0.0);
    return;
  }
  for (int k = 0; k < t.size(); ++k)
    put<double>(out, t[k]);
}

Tensor get_tensor(Reader &in, int rows, int cols) {
  Tensor t(rows, cols);
  for (int k = 0; k < t.size(); ++k)
    t[k] = in.get<double>();
  return t;
}

}  // namespace

Param &ParamStore::add(const std::string &name, Tensor value) {
  if (index_.count(name))
    throw ConfigError("duplicate parameter " + name);
  auto p = std::make_unique<Param>();
  p->name = name;
  p->grad = Tensor(value.rows(), value.cols());
  p->m = Tensor(value.rows(), value.cols());
  p->v = Tensor(value.rows(), value.cols());
  p->value = std::move(value);
  index_.emplace(name, size());
  params_.push_back(std::move(p));
  return *params_.back();
}

Param &ParamStore::get(const std::string &name) {
  auto it = index_.find(name);
  if (it == index_.end())
    throw ConfigError("unknown parameter " + name);
  return *params_[it->second];
}

const Param &ParamStore::get(const std::string &name) const {
  auto it = index_.find(name);
  if (it == index_.end())
    throw ConfigError("unknown parameter " + name);
  return *params_[it->second];
}

int ParamStore::index_of(const std::string &name) const {
  auto it = index_.find(name);
  if (it == index_.end())
    throw ConfigError("unknown parameter " + name);
  return it->second;
}

std::int64_t ParamStore::num_values() const {
  std::int64_t n = 0;
  for (const auto &p: params_)
    n += p->value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto &p: params_)
    p->grad = Tensor(p->value.rows(), p->value.cols());
}

double ParamStore::grad_norm_sq() const {
  double s = 0.0;
  for (const auto &p: params_)
    if (p->grad.size() != 0)
      s += p->grad.mat().squaredNorm();
  return s;
}

bool ParamStore::grads_finite() const {
  for (const auto &p: params_)
    if (p->grad.size() != 0 && !p->grad.mat().allFinite())
      return false;
  return true;
}

void adam_step(ParamStore &store, double lr, const AdamConfig &cfg) {
  ++store.adam_step_count;
  const double t = static_cast<double>(store.adam_step_count);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (int i = 0; i < store.size(); ++i) {
    Param &p = store.at(i);
    if (p.grad.shape() != p.value.shape())
      continue;
    for (int k = 0; k < p.value.size(); ++k) {
      const double g = p.grad[k];
      p.m[k] = cfg.beta1 * p.m[k] + (1.0 - cfg.beta1) * g;
      p.v[k] = cfg.beta2 * p.v[k] + (1.0 - cfg.beta2) * g * g;
      const double mhat = p.m[k] / c1;
      const double vhat = p.v[k] / c2;
      p.value[k] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

std::string params_to_bytes(const ParamStore &store) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kParamFormatVersion);
  put<std::uint64_t>(out, store.adam_step_count);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(store.size()));
  for (int i = 0; i < store.size(); ++i) {
    const Param &p = store.at(i);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.name.size()));
    out += p.name;
    const int r = p.value.rows();
    const int c = p.value.cols();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(r));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(c));
    put_tensor(out, p.value, r, c);
    put_tensor(out, p.m, r, c);
    put_tensor(out, p.v, r, c);
  }
  return out;
}

ParamStore params_from_bytes(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(sizeof(kMagic)) != std::string_view(kMagic, sizeof(kMagic)))
    throw DataError("not a parameter bundle");
  const auto version = in.get<std::uint32_t>();
  if (version != kParamFormatVersion)
    throw DataError("unsupported parameter bundle version "
                    + std::to_string(version));
  ParamStore store;
  store.adam_step_count = in.get<std::uint64_t>();
  const auto count = in.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = in.get<std::uint32_t>();
    std::string name(in.take(len));
    const auto r = static_cast<int>(in.get<std::uint32_t>());
    const auto c = static_cast<int>(in.get<std::uint32_t>());
    if (r < 0 || c < 0)
      throw DataError("bad shape for parameter " + name);
    Param &p = store.add(name, get_tensor(in, r, c));
    p.m = get_tensor(in, r, c);
    p.v = get_tensor(in, r, c);
  }
  if (!in.done())
    throw DataError("trailing bytes after parameter bundle");
  return store;
}

void load_into(ParamStore &dst, const ParamStore &src) {
  if (dst.size() != src.size())
    throw DataError("parameter count differs: " + std::to_string(dst.size())
                    + " vs " + std::to_string(src.size()));
  for (int i = 0; i < dst.size(); ++i) {
    Param &d = dst.at(i);
    const Param &s = src.get(d.name);
    if (d.value.shape() != s.value.shape())
      throw ShapeMismatchError("parameter " + d.name + ": "
                               + shape_string(d.value) + " vs "
                               + shape_string(s.value));
    d.value = s.value;
    d.m = s.m;
    d.v = s.v;
    d.grad = Tensor(d.value.rows(), d.value.cols());
  }
  dst.adam_step_count = src.adam_step_count;
}

}  // namespace megan
