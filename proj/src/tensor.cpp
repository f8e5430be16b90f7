#include "adlex/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "adlex/error.hpp"

namespace adlex::tensor {

Matrix Matrix::from(std::size_t r, std::size_t c, std::vector<double> values) {
  if (values.size() != r * c) {
    throw Error(Errc::ShapeMismatch, "matrix " + std::to_string(r) + "x" + std::to_string(c) + " given " +
                                         std::to_string(values.size()) + " values");
  }
  Matrix m;
  m.rows = r;
  m.cols = c;
  m.data = std::move(values);
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::string Matrix::shape() const { return std::to_string(rows) + "x" + std::to_string(cols); }

Matrix glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  for (auto& v : m.data) v = rng.uniform(-limit, limit);
  return m;
}

Parameter::Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)), grad(value.rows, value.cols) {}

void Parameter::zero_grad() {
  if (grad.rows != value.rows || grad.cols != value.cols) grad = Matrix(value.rows, value.cols);
  std::fill(grad.data.begin(), grad.data.end(), 0.0);
}

const Matrix& Var::value() const {
  if (!tape_) throw Error(Errc::DomainError, "unbound variable");
  return tape_->value(index_);
}

double Var::scalar() const {
  const auto& v = value();
  if (v.rows != 1 || v.cols != 1) throw Error(Errc::ShapeMismatch, "expected 1x1, got " + v.shape());
  return v.data[0];
}

Var Tape::constant(Matrix m) {
  Node& n = nodes_.emplace_back();
  n.owned = std::move(m);
  n.value = &n.owned;
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
  Node& n = nodes_.emplace_back();
  n.value = &p.value;
  n.param = &p;
  n.requires_grad = p.trainable;
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents, Backward backward) {
  bool rg = false;
  for (const Var& v : parents) {
    if (v.tape() != this) throw Error(Errc::DomainError, "operands recorded on different tapes");
    rg = rg || nodes_[v.index()].requires_grad;
  }
  Node& n = nodes_.emplace_back();
  n.owned = std::move(value);
  n.value = &n.owned;
  n.requires_grad = rg;
  if (rg) n.backward = std::move(backward);
  return Var(this, nodes_.size() - 1);
}

Matrix& Tape::grad_buffer(std::size_t index) {
  Node& n = nodes_[index];
  if (!n.has_grad) {
    n.grad = Matrix(n.value->rows, n.value->cols);
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw Error(Errc::DomainError, "loss belongs to another tape");
  if (consumed_) throw Error(Errc::TapeConsumed, "backward already ran on this tape");
  const Matrix& lv = value(loss.index());
  if (lv.rows != 1 || lv.cols != 1) throw Error(Errc::NonScalarLoss, "loss has shape " + lv.shape());
  consumed_ = true;
  if (!nodes_[loss.index()].requires_grad) return;
  grad_buffer(loss.index()).data[0] = 1.0;
  for (std::size_t i = loss.index() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.has_grad) continue;
    if (n.param) {
      Parameter& p = *n.param;
      if (p.grad.rows != p.value.rows || p.grad.cols != p.value.cols) p.zero_grad();
      for (std::size_t k = 0; k < n.grad.size(); ++k) p.grad.data[k] += n.grad.data[k];
    } else if (n.backward) {
      n.backward(*this, i, n.grad);
    }
  }
}

void Tape::note_kinks(const Matrix& x) {
  std::uint64_t bits = 0;
  int filled = 0;
  auto flush = [&] {
    kinks_ = Rng::mix(kinks_ ^ bits ^ (static_cast<std::uint64_t>(filled) << 58));
    bits = 0;
    filled = 0;
  };
  for (double v : x.data) {
    bits |= static_cast<std::uint64_t>(v > 0.0) << filled;
    if (++filled == 56) flush();
  }
  flush();
}

namespace {

[[noreturn]] void mismatch(const char* op, const Matrix& a, const Matrix& b) {
  throw Error(Errc::ShapeMismatch, std::string(op) + ": " + a.shape() + " vs " + b.shape());
}

Tape& tape_of(Var a) {
  if (!a.tape()) throw Error(Errc::DomainError, "unbound variable");
  return *a.tape();
}

template <typename F>
Var unary_elementwise(Var a, F f, Tape::Backward bw) {
  Tape& t = tape_of(a);
  Matrix out = a.value();
  for (auto& v : out.data) v = f(v);
  return t.record(std::move(out), {a}, std::move(bw));
}

}  // namespace

Var matmul(Var a, Var b) {
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  if (A.cols != B.rows) mismatch("matmul", A, B);
  Matrix C(A.rows, B.cols);
  for (std::size_t i = 0; i < A.rows; ++i) {
    double* crow = &C.data[i * C.cols];
    for (std::size_t k = 0; k < A.cols; ++k) {
      const double aik = A(i, k);
      const double* brow = &B.data[k * B.cols];
      for (std::size_t j = 0; j < B.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  const std::size_t ia = a.index(), ib = b.index();
  return tape_of(a).record(std::move(C), {a, b}, [ia, ib](Tape& t, std::size_t, const Matrix& G) {
    const Matrix& A = t.value(ia);
    const Matrix& B = t.value(ib);
    if (t.requires_grad(ia)) {
      Matrix& dA = t.grad_buffer(ia);  // G B^T
      for (std::size_t i = 0; i < A.rows; ++i) {
        const double* grow = &G.data[i * G.cols];
        for (std::size_t k = 0; k < A.cols; ++k) {
          const double* brow = &B.data[k * B.cols];
          double s = 0.0;
          for (std::size_t j = 0; j < B.cols; ++j) s += grow[j] * brow[j];
          dA(i, k) += s;
        }
      }
    }
    if (t.requires_grad(ib)) {
      Matrix& dB = t.grad_buffer(ib);  // A^T G
      for (std::size_t i = 0; i < A.rows; ++i) {
        const double* grow = &G.data[i * G.cols];
        for (std::size_t k = 0; k < A.cols; ++k) {
          const double aik = A(i, k);
          double* drow = &dB.data[k * dB.cols];
          for (std::size_t j = 0; j < B.cols; ++j) drow[j] += aik * grow[j];
        }
      }
    }
  });
}

Var transpose(Var a) {
  const Matrix& A = a.value();
  Matrix out(A.cols, A.rows);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = 0; j < A.cols; ++j) out(j, i) = A(i, j);
  const std::size_t ia = a.index();
  return tape_of(a).record(std::move(out), {a}, [ia](Tape& t, std::size_t, const Matrix& G) {
    Matrix& d = t.grad_buffer(ia);
    for (std::size_t i = 0; i < d.rows; ++i)
      for (std::size_t j = 0; j < d.cols; ++j) d(i, j) += G(j, i);
  });
}

namespace {

Var binary_same_shape(const char* op, Var a, Var b, double sign_b, bool product) {
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  if (A.rows != B.rows || A.cols != B.cols) mismatch(op, A, B);
  Matrix out(A.rows, A.cols);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out.data[k] = product ? A.data[k] * B.data[k] : A.data[k] + sign_b * B.data[k];
  }
  const std::size_t ia = a.index(), ib = b.index();
  return tape_of(a).record(std::move(out), {a, b}, [ia, ib, sign_b, product](Tape& t, std::size_t, const Matrix& G) {
    if (t.requires_grad(ia)) {
      Matrix& d = t.grad_buffer(ia);
      const Matrix& B = t.value(ib);
      for (std::size_t k = 0; k < d.size(); ++k) d.data[k] += product ? G.data[k] * B.data[k] : G.data[k];
    }
    if (t.requires_grad(ib)) {
      Matrix& d = t.grad_buffer(ib);
      const Matrix& A = t.value(ia);
      for (std::size_t k = 0; k < d.size(); ++k) d.data[k] += product ? G.data[k] * A.data[k] : sign_b * G.data[k];
    }
  });
}

}  // namespace

Var add(Var a, Var b) { return binary_same_shape("add", a, b, 1.0, false); }
Var sub(Var a, Var b) { return binary_same_shape("sub", a, b, -1.0, false); }
Var hadamard(Var a, Var b) { return binary_same_shape("hadamard", a, b, 0.0, true); }

Var scale(Var a, double c) {
  const std::size_t ia = a.index();
  return unary_elementwise(a, [c](double v) { return c * v; }, [ia, c](Tape& t, std::size_t, const Matrix& G) {
    Matrix& d = t.grad_buffer(ia);
    for (std::size_t k = 0; k < d.size(); ++k) d.data[k] += c * G.data[k];
  });
}

Var tanh(Var a) {
  const std::size_t ia = a.index();
  return unary_elementwise(a, [](double v) { return std::tanh(v); }, [ia](Tape& t, std::size_t self, const Matrix& G) {
    Matrix& d = t.grad_buffer(ia);
    const Matrix& Y = t.value(self);
    for (std::size_t k = 0; k < d.size(); ++k) d.data[k] += G.data[k] * (1.0 - Y.data[k] * Y.data[k]);
  });
}

Var relu(Var a) {
  tape_of(a).note_kinks(a.value());
  const std::size_t ia = a.index();
  return unary_elementwise(a, [](double v) { return v > 0.0 ? v : 0.0; }, [ia](Tape& t, std::size_t, const Matrix& G) {
    Matrix& d = t.grad_buffer(ia);
    const Matrix& X = t.value(ia);
    for (std::size_t k = 0; k < d.size(); ++k) {
      if (X.data[k] > 0.0) d.data[k] += G.data[k];
    }
  });
}

Var sigmoid(Var a) {
  const std::size_t ia = a.index();
  auto f = [](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  };
  return unary_elementwise(a, f, [ia](Tape& t, std::size_t self, const Matrix& G) {
    Matrix& d = t.grad_buffer(ia);
    const Matrix& Y = t.value(self);
    for (std::size_t k = 0; k < d.size(); ++k) d.data[k] += G.data[k] * Y.data[k] * (1.0 - Y.data[k]);
  });
}

Var row_softmax(Var a) {
  const Matrix& A = a.value();
  if (A.cols == 0) throw Error(Errc::ShapeMismatch, "row_softmax of " + A.shape());
  Matrix out(A.rows, A.cols);
  for (std::size_t i = 0; i < A.rows; ++i) {
    double mx = A(i, 0);
    for (std::size_t j = 1; j < A.cols; ++j) mx = std::max(mx, A(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < A.cols; ++j) z += out(i, j) = std::exp(A(i, j) - mx);
    for (std::size_t j = 0; j < A.cols; ++j) out(i, j) /= z;
  }
  const std::size_t ia = a.index();
  return tape_of(a).record(std::move(out), {a}, [ia](Tape& t, std::size_t self, const Matrix& G) {
    Matrix& d = t.grad_buffer(ia);
    const Matrix& Y = t.value(self);
    for (std::size_t i = 0; i < Y.rows; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < Y.cols; ++j) dot += G(i, j) * Y(i, j);
      for (std::size_t j = 0; j < Y.cols; ++j) d(i, j) += Y(i, j) * (G(i, j) - dot);
    }
  });
}

Var concat_rows(Var a, Var b) {
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  if (A.cols != B.cols) mismatch("concat_rows", A, B);
  Matrix out(A.rows + B.rows, A.cols);
  std::copy(A.data.begin(), A.data.end(), out.data.begin());
  std::copy(B.data.begin(), B.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(A.size()));
  const std::size_t ia = a.index(), ib = b.index();
  return tape_of(a).record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t, const Matrix& G) {
    const std::size_t na = t.value(ia).size();
    if (t.requires_grad(ia)) {
      Matrix& d = t.grad_buffer(ia);
      for (std::size_t k = 0; k < na; ++k) d.data[k] += G.data[k];
    }
    if (t.requires_grad(ib)) {
      Matrix& d = t.grad_buffer(ib);
      for (std::size_t k = 0; k < d.size(); ++k) d.data[k] += G.data[na + k];
    }
  });
}

Var concat_cols(Var a, Var b) {
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  if (A.rows != B.rows) mismatch("concat_cols", A, B);
  Matrix out(A.rows, A.cols + B.cols);
  for (std::size_t i = 0; i < A.rows; ++i) {
    for (std::size_t j = 0; j < A.cols; ++j) out(i, j) = A(i, j);
    for (std::size_t j = 0; j < B.cols; ++j) out(i, A.cols + j) = B(i, j);
  }
  const std::size_t ia = a.index(), ib = b.index();
  return tape_of(a).record(std::move(out), {a, b}, [ia, ib](Tape& t, std::size_t, const Matrix& G) {
    const std::size_t ca = t.value(ia).cols;
    if (t.requires_grad(ia)) {
      Matrix& d = t.grad_buffer(ia);
      for (std::size_t i = 0; i < d.rows; ++i)
        for (std::size_t j = 0; j < d.cols; ++j) d(i, j) += G(i, j);
    }
    if (t.requires_grad(ib)) {
      Matrix& d = t.grad_buffer(ib);
      for (std::size_t i = 0; i < d.rows; ++i)
        for (std::size_t j = 0; j < d.cols; ++j) d(i, j) += G(i, ca + j);
    }
  });
}

Var mean_over_columns(Var a) {
  const Matrix& A = a.value();
  if (A.cols == 0) throw Error(Errc::ShapeMismatch, "mean_over_columns of " + A.shape());
  Matrix out(A.rows, 1);
  for (std::size_t i = 0; i < A.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < A.cols; ++j) s += A(i, j);
    out(i, 0) = s / static_cast<double>(A.cols);
  }
  const std::size_t ia = a.index();
  return tape_of(a).record(std::move(out), {a}, [ia](Tape& t, std::size_t, const Matrix& G) {
    Matrix& d = t.grad_buffer(ia);
    const double inv = 1.0 / static_cast<double>(d.cols);
    for (std::size_t i = 0; i < d.rows; ++i)
      for (std::size_t j = 0; j < d.cols; ++j) d(i, j) += G(i, 0) * inv;
  });
}

Var repeat_cols(Var a, std::size_t n) {
  const Matrix& A = a.value();
  if (A.cols != 1 || n == 0) throw Error(Errc::ShapeMismatch, "repeat_cols needs rx1 and n >= 1, got " + A.shape());
  Matrix out(A.rows, n);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = A(i, 0);
  const std::size_t ia = a.index();
  return tape_of(a).record(std::move(out), {a}, [ia](Tape& t, std::size_t, const Matrix& G) {
    Matrix& d = t.grad_buffer(ia);
    for (std::size_t i = 0; i < G.rows; ++i)
      for (std::size_t j = 0; j < G.cols; ++j) d(i, 0) += G(i, j);
  });
}

Var pick_row(Var a, std::size_t r) {
  const Matrix& A = a.value();
  if (r >= A.rows) throw Error(Errc::ShapeMismatch, "pick_row " + std::to_string(r) + " of " + A.shape());
  Matrix out(1, A.cols);
  for (std::size_t j = 0; j < A.cols; ++j) out(0, j) = A(r, j);
  const std::size_t ia = a.index();
  return tape_of(a).record(std::move(out), {a}, [ia, r](Tape& t, std::size_t, const Matrix& G) {
    Matrix& d = t.grad_buffer(ia);
    for (std::size_t j = 0; j < d.cols; ++j) d(r, j) += G(0, j);
  });
}

Var pick_col(Var a, std::size_t c) {
  const Matrix& A = a.value();
  if (c >= A.cols) throw Error(Errc::ShapeMismatch, "pick_col " + std::to_string(c) + " of " + A.shape());
  Matrix out(A.rows, 1);
  for (std::size_t i = 0; i < A.rows; ++i) out(i, 0) = A(i, c);
  const std::size_t ia = a.index();
  return tape_of(a).record(std::move(out), {a}, [ia, c](Tape& t, std::size_t, const Matrix& G) {
    Matrix& d = t.grad_buffer(ia);
    for (std::size_t i = 0; i < d.rows; ++i) d(i, c) += G(i, 0);
  });
}

Var sum(Var a) {
  const Matrix& A = a.value();
  double s = 0.0;
  for (double v : A.data) s += v;
  const std::size_t ia = a.index();
  return tape_of(a).record(Matrix(1, 1, s), {a}, [ia](Tape& t, std::size_t, const Matrix& G) {
    Matrix& d = t.grad_buffer(ia);
    for (auto& v : d.data) v += G.data[0];
  });
}

Var dropout(Var a, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw Error(Errc::DomainError, "dropout rate must be in [0, 1)");
  if (!training || rate == 0.0) return a;
  const Matrix& A = a.value();
  Matrix mask(A.rows, A.cols);
  const double keep = 1.0 / (1.0 - rate);
  for (auto& m : mask.data) m = rng.uniform() < rate ? 0.0 : keep;
  Matrix out(A.rows, A.cols);
  for (std::size_t k = 0; k < out.size(); ++k) out.data[k] = A.data[k] * mask.data[k];
  const std::size_t ia = a.index();
  return tape_of(a).record(std::move(out), {a}, [ia, mask = std::move(mask)](Tape& t, std::size_t, const Matrix& G) {
    Matrix& d = t.grad_buffer(ia);
    for (std::size_t k = 0; k < d.size(); ++k) d.data[k] += G.data[k] * mask.data[k];
  });
}

Var embedding(Var table, std::span<const std::size_t> ids) {
  const Matrix& E = table.value();
  if (ids.empty()) throw Error(Errc::ShapeMismatch, "embedding of zero ids");
  Matrix out(E.rows, ids.size());
  for (std::size_t n = 0; n < ids.size(); ++n) {
    if (ids[n] >= E.cols) {
      throw Error(Errc::OutOfRange, "embedding id " + std::to_string(ids[n]) + " outside table " + E.shape());
    }
    for (std::size_t i = 0; i < E.rows; ++i) out(i, n) = E(i, ids[n]);
  }
  const std::size_t ie = table.index();
  std::vector<std::size_t> copy(ids.begin(), ids.end());
  return tape_of(table).record(std::move(out), {table}, [ie, copy = std::move(copy)](Tape& t, std::size_t, const Matrix& G) {
    Matrix& d = t.grad_buffer(ie);
    for (std::size_t n = 0; n < copy.size(); ++n)
      for (std::size_t i = 0; i < d.rows; ++i) d(i, copy[n]) += G(i, n);
  });
}

namespace {
constexpr double kProbFloor = 1e-12;
}

Var bce(Var p, double y) {
  const Matrix& P = p.value();
  if (P.rows != 1 || P.cols != 1) throw Error(Errc::ShapeMismatch, "bce needs 1x1, got " + P.shape());
  if (!(y == 0.0 || y == 1.0)) throw Error(Errc::DomainError, "bce label must be 0 or 1");
  const double raw = P.data[0];
  const double q = std::clamp(raw, kProbFloor, 1.0 - kProbFloor);
  const double loss = -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
  const std::size_t ip = p.index();
  return tape_of(p).record(Matrix(1, 1, loss), {p}, [ip, y, q, raw](Tape& t, std::size_t, const Matrix& G) {
    if (raw != q) return;  // clamped: flat
    t.grad_buffer(ip).data[0] += G.data[0] * (-y / q + (1.0 - y) / (1.0 - q));
  });
}

Var nll(Var probs, std::size_t cls) {
  const Matrix& P = probs.value();
  if (P.rows != 1 || cls >= P.cols) {
    throw Error(Errc::ShapeMismatch, "nll class " + std::to_string(cls) + " of " + P.shape());
  }
  const double raw = P.data[cls];
  const double q = std::max(raw, kProbFloor);
  const std::size_t ip = probs.index();
  return tape_of(probs).record(Matrix(1, 1, -std::log(q)), {probs}, [ip, cls, q, raw](Tape& t, std::size_t, const Matrix& G) {
    if (raw != q) return;
    t.grad_buffer(ip).data[cls] += -G.data[0] / q;
  });
}

FdReport fd_check(const std::function<Var(Tape&)>& loss_fn, const std::vector<Parameter*>& params, double epsilon) {
  for (auto* p : params) p->zero_grad();
  double f0 = 0.0;
  std::uint64_t base_sig = 0;
  {
    Tape t;
    Var loss = loss_fn(t);
    f0 = loss.scalar();
    base_sig = t.kink_signature();
    t.backward(loss);
  }
  std::vector<Matrix> analytic;
  for (auto* p : params) analytic.push_back(p->grad);

  auto eval = [&](double& slot, double h) {
    const double orig = slot;
    slot = orig + h;
    Tape t;
    Var loss = loss_fn(t);
    std::pair<double, std::uint64_t> r{loss.scalar(), t.kink_signature()};
    slot = orig;
    return r;
  };

  FdReport rep;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    if (!p.trainable) continue;
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      double& slot = p.value.data[k];
      double h = epsilon;
      auto plus = eval(slot, h);
      auto minus = eval(slot, -h);
      double numeric = 0.0;
      if (plus.second != base_sig || minus.second != base_sig) {
        ++rep.kink_retries;
        h = epsilon / 10.0;
        plus = eval(slot, h);
        minus = eval(slot, -h);
      }
      const bool pok = plus.second == base_sig, mok = minus.second == base_sig;
      if (pok && mok) {
        numeric = (plus.first - minus.first) / (2.0 * h);
      } else if (pok) {
        ++rep.one_sided;
        numeric = (plus.first - f0) / h;
      } else if (mok) {
        ++rep.one_sided;
        numeric = (f0 - minus.first) / h;
      } else {
        ++rep.skipped;
        continue;
      }
      const double a = analytic[pi].data[k];
      const double err = std::fabs(a - numeric) / std::max(1e-8, std::fabs(a) + std::fabs(numeric));
      ++rep.coordinates;
      if (err > rep.max_rel_error || rep.worst.empty()) {
        rep.max_rel_error = std::max(rep.max_rel_error, err);
        rep.worst = p.name + "[" + std::to_string(k) + "]";
      }
    }
  }
  for (auto* p : params) p->zero_grad();
  return rep;
}

nlohmann::json params_to_json(const std::vector<const Parameter*>& params) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto* p : params) {
    arr.push_back({{"name", p->name}, {"shape", {p->value.rows, p->value.cols}}, {"data", p->value.data}});
  }
  return {{"format", "adlex-params"}, {"version", 1}, {"params", std::move(arr)}};
}

void params_from_json(const nlohmann::json& j, const std::vector<Parameter*>& params) {
  try {
    if (j.at("format").get<std::string>() != "adlex-params" || j.at("version").get<int>() != 1) {
      throw Error(Errc::ParseError, "not an adlex-params v1 document");
    }
    std::map<std::string, const nlohmann::json*> by_name;
    for (const auto& e : j.at("params")) by_name[e.at("name").get<std::string>()] = &e;
    if (by_name.size() != params.size()) {
      throw Error(Errc::ShapeMismatch, "checkpoint has " + std::to_string(by_name.size()) + " parameters, model has " +
                                           std::to_string(params.size()));
    }
    for (auto* p : params) {
      auto it = by_name.find(p->name);
      if (it == by_name.end()) throw Error(Errc::ShapeMismatch, "checkpoint lacks parameter " + p->name);
      const auto& e = *it->second;
      const auto shape = e.at("shape").get<std::vector<std::size_t>>();
      auto data = e.at("data").get<std::vector<double>>();
      if (shape.size() != 2 || shape[0] != p->value.rows || shape[1] != p->value.cols) {
        throw Error(Errc::ShapeMismatch, "parameter " + p->name + " expected " + p->value.shape());
      }
      p->value = Matrix::from(shape[0], shape[1], std::move(data));
      p->zero_grad();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("checkpoint: ") + e.what());
  }
}

}  // namespace adlex::tensor
