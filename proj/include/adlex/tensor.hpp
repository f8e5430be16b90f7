#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "adlex/rng.hpp"
#include "json.hpp"

namespace adlex::tensor {

// Dense row-major float64 matrix. Every quantity in the models is at most 2-D,
// so vectors are 1xn or nx1 matrices and scalars are 1x1.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  static Matrix from(std::size_t r, std::size_t c, std::vector<double> values);
  static Matrix identity(std::size_t n);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::size_t size() const { return data.size(); }
  std::string shape() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

Matrix glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng);

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool trainable = true;

  Parameter(std::string n, Matrix v);
  void zero_grad();
};

class Tape;

class Var {
 public:
  Var() = default;
  const Matrix& value() const;
  std::size_t rows() const { return value().rows; }
  std::size_t cols() const { return value().cols; }
  double scalar() const;
  Tape* tape() const { return tape_; }
  std::size_t index() const { return index_; }

 private:
  friend class Tape;
  Var(Tape* t, std::size_t i) : tape_(t), index_(i) {}
  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

class Tape {
 public:
  // Receives the gradient flowing into the node and pushes contributions to
  // its parents through grad_buffer().
  using Backward = std::function<void(Tape&, std::size_t self, const Matrix& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix m);
  // Leaf bound to p; gradients land in p.grad when p.trainable.
  Var param(Parameter& p);
  Var record(Matrix value, std::initializer_list<Var> parents, Backward backward);

  const Matrix& value(std::size_t index) const { return *nodes_[index].value; }
  bool requires_grad(std::size_t index) const { return nodes_[index].requires_grad; }
  bool requires_grad(Var v) const { return requires_grad(v.index()); }
  // Zero-initialized on first use. Only valid for nodes that require grad.
  Matrix& grad_buffer(std::size_t index);

  // Throws NonScalarLoss for a non-1x1 loss, TapeConsumed on a second call.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  bool consumed() const { return consumed_; }

  // Hash of every ReLU activation pattern seen so far; finite-difference
  // checks use it to detect steps that cross a kink.
  std::uint64_t kink_signature() const { return kinks_; }
  void note_kinks(const Matrix& pre_activation);

 private:
  struct Node {
    Matrix owned;
    const Matrix* value = nullptr;
    bool requires_grad = false;
    Backward backward;
    Parameter* param = nullptr;
    Matrix grad;
    bool has_grad = false;
  };
  std::deque<Node> nodes_;
  bool consumed_ = false;
  std::uint64_t kinks_ = 0x9e3779b97f4a7c15ULL;
};

// Ops. All operands must come from the same tape; shapes are checked before
// any arithmetic and mismatches throw ShapeMismatch naming both shapes.
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double c);
Var tanh(Var a);
Var relu(Var a);
Var sigmoid(Var a);
Var row_softmax(Var a);
Var concat_rows(Var a, Var b);  // stack vertically
Var concat_cols(Var a, Var b);  // side by side
Var mean_over_columns(Var a);   // r x n -> r x 1
Var repeat_cols(Var a, std::size_t n);  // r x 1 -> r x n
Var pick_row(Var a, std::size_t i);
Var pick_col(Var a, std::size_t j);
Var sum(Var a);
// Inverted dropout: kept units scaled by 1 / (1 - rate) while training,
// identity otherwise. rate in [0, 1).
Var dropout(Var a, double rate, bool training, Rng& rng);
// Columns of `table` (d x V) selected by ids -> d x N.
Var embedding(Var table, std::span<const std::size_t> ids);

// Binary cross entropy of a 1x1 probability, clamped away from 0 and 1.
Var bce(Var p, double y);
// -log p[cls] for a 1xK probability row.
Var nll(Var probs, std::size_t cls);

struct FdReport {
  double max_rel_error = 0.0;
  std::string worst;  // "name[index]" of the worst coordinate
  std::size_t coordinates = 0;
  std::size_t kink_retries = 0;
  std::size_t one_sided = 0;
  std::size_t skipped = 0;
};

// Central differences on every coordinate of every trainable parameter,
// compared with the tape gradient via |a - n| / max(1e-8, |a| + |n|).
// Steps that change the ReLU pattern are retried at epsilon / 10, then
// replaced by the one-sided difference on the unchanged side.
FdReport fd_check(const std::function<Var(Tape&)>& loss_fn, const std::vector<Parameter*>& params,
                  double epsilon = 1e-5);

// {"format": "adlex-params", "version": 1, "params": [{"name", "shape", "data"}]}
nlohmann::json params_to_json(const std::vector<const Parameter*>& params);
// Names and shapes must match exactly.
void params_from_json(const nlohmann::json& j, const std::vector<Parameter*>& params);

}  // namespace adlex::tensor
