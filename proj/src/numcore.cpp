//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "megan/numcore.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "megan/error.h"
#include "megan/params.h"

namespace megan {

Tensor::Tensor(int rows, int cols, double fill)
    : rows_(rows), cols_(cols),
      data_(static_cast<std::size_t>(rows) * cols, fill) {
  if (rows < 0 || cols < 0)
    throw ShapeMismatchError("negative tensor shape");
}

Tensor::Tensor(int rows, int cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (rows < 0 || cols < 0
      || data_.size() != static_cast<std::size_t>(rows) * cols)
    throw ShapeMismatchError("tensor data does not match shape "
                             + std::to_string(rows) + "x"
                             + std::to_string(cols));
}

std::string shape_string(const Tensor &t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

const Tensor &Var::value() const {
  if (tape == nullptr)
    throw GraphDetachedError("empty variable");
  return tape->value(id);
}

Var Tape::constant(Tensor value) {
  nodes_.push_back({ std::move(value), {}, false, nullptr, {} });
  return { this, size() - 1 };
}

Var Tape::leaf(Tensor value) {
  nodes_.push_back({ std::move(value), {}, true, nullptr, {} });
  return { this, size() - 1 };
}

Var Tape::param(Param &p) {
  nodes_.push_back({ p.value, {}, train_, train_ ? &p : nullptr, {} });
  return { this, size() - 1 };
}

Var Tape::record(Tensor value, std::span<const Var> parents,
                 Backward backward) {
  bool needs = false;
  for (const Var &p: parents) {
    if (p.tape != this)
      throw GraphDetachedError("operand belongs to another tape");
    needs = needs || nodes_[p.id].needs_grad;
  }
  nodes_.push_back({ std::move(value), {}, needs, nullptr,
                     needs ? std::move(backward) : Backward {} });
  return { this, size() - 1 };
}

Tensor &Tape::grad_buffer(int id) {
  Node &n = nodes_[id];
  if (n.grad.shape() != n.value.shape())
    n.grad = Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this)
    throw GraphDetachedError("loss belongs to another tape");
  Node &root = nodes_[loss.id];
  if (root.value.size() != 1)
    throw ShapeMismatchError("backward needs a 1x1 loss, got "
                             + shape_string(root.value));
  if (!root.needs_grad)
    throw GraphDetachedError("loss does not depend on any input");
  for (Node &n: nodes_)
    n.grad = Tensor();
  grad_buffer(loss.id)[0] = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node &n = nodes_[id];
    if (!n.needs_grad || n.grad.shape() != n.value.shape())
      continue;
    if (n.backward) {
      // The closure may grow other nodes' buffers but never this one's.
      const Tensor g = n.grad;
      n.backward(*this, g);
    }
    if (n.param != nullptr) {
      Param &p = *n.param;
      if (p.grad.shape() != p.value.shape())
        p.grad = Tensor(p.value.rows(), p.value.cols());
      p.grad.mat() += n.grad.mat();
    }
  }
  // Parameters the loss does not reach get a zero gradient.
  for (Node &n: nodes_)
    if (n.param != nullptr && n.param->grad.shape() != n.param->value.shape())
      n.param->grad = Tensor(n.param->value.rows(), n.param->value.cols());
}

Tensor Tape::grad(Var v) const {
  if (v.tape != this)
    throw GraphDetachedError("variable belongs to another tape");
  const Node &n = nodes_[v.id];
  if (!n.needs_grad)
    throw GraphDetachedError("variable is not differentiable");
  if (n.grad.shape() != n.value.shape())
    return Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

namespace ops {

namespace {

[[noreturn]] void mismatch(const char *op, const Tensor &a, const Tensor &b) {
  throw ShapeMismatchError(std::string(op) + ": " + shape_string(a) + " vs "
                           + shape_string(b));
}

void same_shape(const char *op, const Tensor &a, const Tensor &b) {
  if (a.shape() != b.shape())
    mismatch(op, a, b);
}

Tape *tape_of(Var a) {
  if (a.tape == nullptr)
    throw GraphDetachedError("empty variable");
  return a.tape;
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor &x = a.value();
  const Tensor &y = b.value();
  if (x.cols() != y.rows())
    mismatch("matmul", x, y);
  Tensor out(x.rows(), y.cols());
  out.mat().noalias() = x.mat() * y.mat();
  const Var parents[] = { a, b };
  return tape_of(a)->record(std::move(out), parents,
                            [a, b](Tape &t, const Tensor &g) {
    if (t.needs_grad(a))
      t.grad_buffer(a.id).mat().noalias() +=
          g.mat() * t.value(b.id).mat().transpose();
    if (t.needs_grad(b))
      t.grad_buffer(b.id).mat().noalias() +=
          t.value(a.id).mat().transpose() * g.mat();
  });
}

Var add(Var a, Var b) {
  const Tensor &x = a.value();
  const Tensor &y = b.value();
  same_shape("add", x, y);
  Tensor out = x;
  out.mat() += y.mat();
  const Var parents[] = { a, b };
  return tape_of(a)->record(std::move(out), parents,
                            [a, b](Tape &t, const Tensor &g) {
    if (t.needs_grad(a))
      t.grad_buffer(a.id).mat() += g.mat();
    if (t.needs_grad(b))
      t.grad_buffer(b.id).mat() += g.mat();
  });
}

Var add_row(Var a, Var b) {
  const Tensor &x = a.value();
  const Tensor &y = b.value();
  if (y.rows() != 1 || y.cols() != x.cols())
    mismatch("add_row", x, y);
  Tensor out = x;
  out.mat().rowwise() += y.mat().row(0);
  const Var parents[] = { a, b };
  return tape_of(a)->record(std::move(out), parents,
                            [a, b](Tape &t, const Tensor &g) {
    if (t.needs_grad(a))
      t.grad_buffer(a.id).mat() += g.mat();
    if (t.needs_grad(b))
      t.grad_buffer(b.id).mat() += g.mat().colwise().sum();
  });
}

Var mul(Var a, Var b) {
  const Tensor &x = a.value();
  const Tensor &y = b.value();
  same_shape("mul", x, y);
  Tensor out = x;
  out.mat().array() *= y.mat().array();
  const Var parents[] = { a, b };
  return tape_of(a)->record(std::move(out), parents,
                            [a, b](Tape &t, const Tensor &g) {
    if (t.needs_grad(a))
      t.grad_buffer(a.id).mat().array() +=
          g.mat().array() * t.value(b.id).mat().array();
    if (t.needs_grad(b))
      t.grad_buffer(b.id).mat().array() +=
          g.mat().array() * t.value(a.id).mat().array();
  });
}

Var scale(Var a, double s) {
  Tensor out = a.value();
  out.mat() *= s;
  const Var parents[] = { a };
  return tape_of(a)->record(std::move(out), parents,
                            [a, s](Tape &t, const Tensor &g) {
    t.grad_buffer(a.id).mat() += s * g.mat();
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty())
    throw ShapeMismatchError("concat_cols: no operands");
  const int rows = parts[0].rows();
  int cols = 0;
  for (const Var &p: parts) {
    if (p.rows() != rows)
      mismatch("concat_cols", parts[0].value(), p.value());
    cols += p.cols();
  }
  Tensor out(rows, cols);
  int offset = 0;
  for (const Var &p: parts) {
    out.mat().middleCols(offset, p.cols()) = p.value().mat();
    offset += p.cols();
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  return tape_of(parts[0])->record(std::move(out), parts,
                                   [saved](Tape &t, const Tensor &g) {
    int offset = 0;
    for (const Var &p: saved) {
      const int c = t.value(p.id).cols();
      if (t.needs_grad(p))
        t.grad_buffer(p.id).mat() += g.mat().middleCols(offset, c);
      offset += c;
    }
  });
}

Var slice_cols(Var a, int begin, int end) {
  const Tensor &x = a.value();
  if (begin < 0 || end < begin || end > x.cols())
    throw ShapeMismatchError("slice_cols: [" + std::to_string(begin) + ", "
                             + std::to_string(end) + ") of "
                             + shape_string(x));
  Tensor out(x.rows(), end - begin);
  out.mat() = x.mat().middleCols(begin, end - begin);
  const Var parents[] = { a };
  return tape_of(a)->record(std::move(out), parents,
                            [a, begin](Tape &t, const Tensor &g) {
    t.grad_buffer(a.id).mat().middleCols(begin, g.cols()) += g.mat();
  });
}

Var relu(Var a) {
  Tensor out = a.value();
  out.mat() = out.mat().cwiseMax(0.0);
  const Var parents[] = { a };
  return tape_of(a)->record(std::move(out), parents,
                            [a](Tape &t, const Tensor &g) {
    const Tensor &x = t.value(a.id);
    Tensor &ga = t.grad_buffer(a.id);
    for (int k = 0; k < x.size(); ++k)
      if (x[k] > 0.0)
        ga[k] += g[k];
  });
}

Var maximum(Var a, Var b) {
  const Tensor &x = a.value();
  const Tensor &y = b.value();
  same_shape("maximum", x, y);
  Tensor out = x;
  out.mat() = x.mat().cwiseMax(y.mat());
  const Var parents[] = { a, b };
  // Ties send the gradient to the first operand.
  return tape_of(a)->record(std::move(out), parents,
                            [a, b](Tape &t, const Tensor &g) {
    const Tensor &x = t.value(a.id);
    const Tensor &y = t.value(b.id);
    const bool ga = t.needs_grad(a);
    const bool gb = t.needs_grad(b);
    for (int k = 0; k < x.size(); ++k) {
      if (x[k] >= y[k]) {
        if (ga)
          t.grad_buffer(a.id)[k] += g[k];
      }
      else if (gb)
        t.grad_buffer(b.id)[k] += g[k];
    }
  });
}

Var exp(Var a) {
  Tensor out = a.value();
  out.mat() = out.mat().array().exp().matrix();
  const Var parents[] = { a };
  Tape *tape = tape_of(a);
  const int self = tape->size();
  return tape->record(std::move(out), parents,
                      [a, self](Tape &t, const Tensor &g) {
    t.grad_buffer(a.id).mat().array() +=
        g.mat().array() * t.value(self).mat().array();
  });
}

Var log(Var a) {
  Tensor out = a.value();
  out.mat() = out.mat().array().log().matrix();
  const Var parents[] = { a };
  return tape_of(a)->record(std::move(out), parents,
                            [a](Tape &t, const Tensor &g) {
    t.grad_buffer(a.id).mat().array() +=
        g.mat().array() / t.value(a.id).mat().array();
  });
}

Var gather_rows(Var a, std::span<const int> rows) {
  const Tensor &x = a.value();
  Tensor out(static_cast<int>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < -1 || rows[r] >= x.rows())
      throw ShapeMismatchError("gather_rows: row " + std::to_string(rows[r])
                               + " of " + shape_string(x));
    if (rows[r] >= 0)
      out.mat().row(r) = x.mat().row(rows[r]);
  }
  std::vector<int> idx(rows.begin(), rows.end());
  const Var parents[] = { a };
  return tape_of(a)->record(std::move(out), parents,
                            [a, idx](Tape &t, const Tensor &g) {
    Tensor &ga = t.grad_buffer(a.id);
    for (std::size_t r = 0; r < idx.size(); ++r)
      if (idx[r] >= 0)
        ga.mat().row(idx[r]) += g.mat().row(r);
  });
}

Var gather_flat(Var a, std::span<const int> index) {
  const Tensor &x = a.value();
  Tensor out(1, static_cast<int>(index.size()));
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] < 0 || index[k] >= x.size())
      throw ShapeMismatchError("gather_flat: entry " + std::to_string(index[k])
                               + " of " + shape_string(x));
    out[static_cast<int>(k)] = x[index[k]];
  }
  std::vector<int> idx(index.begin(), index.end());
  const Var parents[] = { a };
  return tape_of(a)->record(std::move(out), parents,
                            [a, idx](Tape &t, const Tensor &g) {
    Tensor &ga = t.grad_buffer(a.id);
    for (std::size_t k = 0; k < idx.size(); ++k)
      ga[idx[k]] += g[static_cast<int>(k)];
  });
}

Var reduce_sum(Var a) {
  Tensor out(1, 1, a.value().mat().sum());
  const Var parents[] = { a };
  return tape_of(a)->record(std::move(out), parents,
                            [a](Tape &t, const Tensor &g) {
    t.grad_buffer(a.id).mat().array() += g[0];
  });
}

Var log_softmax(Var a) {
  const Tensor &x = a.value();
  if (x.size() == 0)
    throw ShapeMismatchError("log_softmax of an empty tensor");
  const double m = x.mat().maxCoeff();
  const double lse = m + std::log((x.mat().array() - m).exp().sum());
  Tensor out = x;
  out.mat().array() -= lse;
  const Var parents[] = { a };
  Tape *tape = tape_of(a);
  const int self = tape->size();
  return tape->record(std::move(out), parents,
                      [a, self](Tape &t, const Tensor &g) {
    const Tensor &y = t.value(self);
    const double gs = g.mat().sum();
    t.grad_buffer(a.id).mat().array() +=
        g.mat().array() - y.mat().array().exp() * gs;
  });
}

namespace {

void check_segments(const char *op, std::span<const int> begin, int rows) {
  if (begin.empty() || begin.front() != 0 || begin.back() != rows)
    throw ShapeMismatchError(std::string(op) + ": segments do not cover "
                             + std::to_string(rows) + " rows");
  for (std::size_t s = 1; s < begin.size(); ++s)
    if (begin[s] < begin[s - 1])
      throw ShapeMismatchError(std::string(op) + ": unsorted segments");
}

}  // namespace

Var segment_softmax(Var scores, std::span<const int> begin,
                    std::span<const double> mask) {
  const Tensor &x = scores.value();
  check_segments("segment_softmax", begin, x.rows());
  if (!mask.empty() && static_cast<int>(mask.size()) != x.rows())
    throw ShapeMismatchError("segment_softmax: mask length");
  auto keep = [&](int r) { return mask.empty() || mask[r] != 0.0; };
  Tensor out(x.rows(), x.cols());
  const int segments = static_cast<int>(begin.size()) - 1;
  for (int s = 0; s < segments; ++s)
    for (int c = 0; c < x.cols(); ++c) {
      double m = -std::numeric_limits<double>::infinity();
      for (int r = begin[s]; r < begin[s + 1]; ++r)
        if (keep(r))
          m = std::max(m, x(r, c));
      if (!std::isfinite(m))
        continue;
      double z = 0.0;
      for (int r = begin[s]; r < begin[s + 1]; ++r)
        if (keep(r))
          z += out(r, c) = std::exp(x(r, c) - m);
      for (int r = begin[s]; r < begin[s + 1]; ++r)
        out(r, c) /= z;
    }
  std::vector<int> seg(begin.begin(), begin.end());
  const Var parents[] = { scores };
  Tape *tape = tape_of(scores);
  const int self = tape->size();
  return tape->record(std::move(out), parents,
                      [scores, self, seg](Tape &t, const Tensor &g) {
    const Tensor &y = t.value(self);
    Tensor &gx = t.grad_buffer(scores.id);
    for (std::size_t s = 0; s + 1 < seg.size(); ++s)
      for (int c = 0; c < y.cols(); ++c) {
        double dot = 0.0;
        for (int r = seg[s]; r < seg[s + 1]; ++r)
          dot += y(r, c) * g(r, c);
        for (int r = seg[s]; r < seg[s + 1]; ++r)
          gx(r, c) += y(r, c) * (g(r, c) - dot);
      }
  });
}

Var segment_weighted_sum(Var weights, Var values,
                         std::span<const int> begin) {
  const Tensor &w = weights.value();
  const Tensor &v = values.value();
  if (w.rows() != v.rows())
    mismatch("segment_weighted_sum", w, v);
  check_segments("segment_weighted_sum", begin, w.rows());
  const int segments = static_cast<int>(begin.size()) - 1;
  const int heads = w.cols();
  const int h = v.cols();
  Tensor out(segments, heads * h);
  for (int s = 0; s < segments; ++s)
    for (int r = begin[s]; r < begin[s + 1]; ++r)
      for (int k = 0; k < heads; ++k)
        out.mat().row(s).segment(k * h, h) += w(r, k) * v.mat().row(r);
  std::vector<int> seg(begin.begin(), begin.end());
  const Var parents[] = { weights, values };
  return tape_of(weights)->record(std::move(out), parents,
                                  [weights, values, seg](Tape &t,
                                                         const Tensor &g) {
    const Tensor &w = t.value(weights.id);
    const Tensor &v = t.value(values.id);
    const int heads = w.cols();
    const int h = v.cols();
    const bool gw = t.needs_grad(weights);
    const bool gv = t.needs_grad(values);
    for (std::size_t s = 0; s + 1 < seg.size(); ++s)
      for (int r = seg[s]; r < seg[s + 1]; ++r)
        for (int k = 0; k < heads; ++k) {
          auto gblock = g.mat().row(s).segment(k * h, h);
          if (gw)
            t.grad_buffer(weights.id)(r, k) += gblock.dot(v.mat().row(r));
          if (gv)
            t.grad_buffer(values.id).mat().row(r) += w(r, k) * gblock;
        }
  });
}

}  // namespace ops

}  // namespace megan
