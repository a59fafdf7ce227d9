//
// Project megan - Copyright 2026 The megan authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef MEGAN_NUMCORE_H_
#define MEGAN_NUMCORE_H_

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace megan {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense row-major matrix of doubles. Vectors are 1 x n.
class Tensor {
public:
  Tensor() = default;
  Tensor(int rows, int cols, double fill = 0.0);
  Tensor(int rows, int cols, std::vector<double> values);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int size() const { return rows_ * cols_; }
  std::array<int, 2> shape() const { return { rows_, cols_ }; }

  double &operator()(int r, int c) { return data_[index(r, c)]; }
  double operator()(int r, int c) const { return data_[index(r, c)]; }
  double &operator[](int k) { return data_[k]; }
  double operator[](int k) const { return data_[k]; }
  double *data() { return data_.data(); }
  const double *data() const { return data_.data(); }
  const std::vector<double> &values() const { return data_; }

  Eigen::Map<RowMatrix> mat() { return { data_.data(), rows_, cols_ }; }
  Eigen::Map<const RowMatrix> mat() const {
    return { data_.data(), rows_, cols_ };
  }

  bool operator==(const Tensor &) const = default;

private:
  std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * cols_ + c;
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

std::string shape_string(const Tensor &t);

class Tape;
struct Param;

// Handle to a value recorded on a tape.
struct Var {
  Tape *tape = nullptr;
  int id = -1;

  const Tensor &value() const;
  int rows() const { return value().rows(); }
  int cols() const { return value().cols(); }
  bool valid() const { return tape != nullptr; }
};

// Records operations for reverse-mode differentiation. A tape is meant for one
// forward/backward pass; clear() it (or make a new one) afterwards.
class Tape {
public:
  using Backward = std::function<void(Tape &, const Tensor &grad_out)>;

  Var constant(Tensor value);
  // Differentiable input; its gradient is read with grad().
  Var leaf(Tensor value);
  // Parameter input. With train mode on, backward() adds the gradient into
  // p.grad; in inference mode the value is treated as a constant.
  Var param(Param &p);

  // Used by operations: records a result whose parents are `parents`. The
  // backward closure is dropped when no parent needs a gradient.
  Var record(Tensor value, std::span<const Var> parents, Backward backward);

  // Adds the gradient of a loss value (1 x 1) to every input.
  void backward(Var loss);
  // Zero for differentiable inputs the loss does not reach; throws
  // GraphDetachedError for constants.
  Tensor grad(Var v) const;
  // Accumulates into the gradient buffer of node v (for backward closures).
  Tensor &grad_buffer(int id);
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }
  const Tensor &value(int id) const { return nodes_[id].value; }

  void set_train(bool on) { train_ = on; }
  bool train() const { return train_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  void clear() { nodes_.clear(); }

private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool needs_grad = false;
    Param *param = nullptr;
    Backward backward;
  };

  std::vector<Node> nodes_;
  bool train_ = true;
};

namespace ops {

// Every operation throws ShapeMismatchError on incompatible inputs.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
// a (r x c) plus a row vector b (1 x c) on every row.
Var add_row(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var a, int begin, int end);
Var relu(Var a);
Var maximum(Var a, Var b);
Var exp(Var a);
Var log(Var a);
// Rows picked by index; -1 gives a zero row.
Var gather_rows(Var a, std::span<const int> rows);
// 1 x k vector of the flat (row-major) entries at `index`.
Var gather_flat(Var a, std::span<const int> index);
Var reduce_sum(Var a);
// Log-softmax over all entries of a.
Var log_softmax(Var a);
// Softmax of each column within each row segment [begin[s], begin[s+1]).
// Rows with mask 0 get probability zero; an empty mask keeps all rows.
Var segment_softmax(Var scores, std::span<const int> begin,
                    std::span<const double> mask = {});
// weights: E x K, values: E x h. Output row s holds, for each k, the sum over
// the rows e of segment s of weights(e, k) * values(e, :), giving S x (K*h).
Var segment_weighted_sum(Var weights, Var values, std::span<const int> begin);

}  // namespace ops

}  // namespace megan

#endif  // MEGAN_NUMCORE_H_
