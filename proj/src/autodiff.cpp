// Copyright 2026 The clipfilter Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "clipfilter/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace clipfilter {

// ---- Var / Tape ----

const Tensor& Var::value() const { return tape_->value(id_); }
Tensor Var::grad() const { return tape_->grad(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::leaf(Tensor value, bool requires_grad) {
  nodes_.push_back(Node{std::move(value), std::nullopt, requires_grad, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  bool needs = false;
  for (const auto& in : inputs) {
    if (&in.tape() != this) throw ContractError("operands recorded on different tapes");
    needs = needs || nodes_[in.id()].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), std::nullopt, needs, needs ? std::move(backward) : nullptr});
  return Var(this, nodes_.size() - 1);
}

Tensor Tape::grad(std::size_t id) const {
  const auto& node = nodes_.at(id);
  if (node.grad) return *node.grad;
  return Tensor(node.value.shape());
}

void Tape::accumulate(const Var& target, const Tensor& contribution) {
  auto& node = nodes_.at(target.id());
  if (!node.requires_grad) return;
  if (contribution.size() != node.value.size()) {
    throw DimensionError("gradient shape " + shape_string(contribution.shape()) +
                         " does not match value " + shape_string(node.value.shape()));
  }
  if (!node.grad) {
    node.grad = Tensor(node.value.shape(), std::vector<double>(contribution.values()));
    return;
  }
  auto dst = node.grad->data();
  auto src = contribution.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

void Tape::backward(const Var& loss) {
  if (&loss.tape() != this) throw ContractError("loss belongs to another tape");
  if (loss.value().size() != 1) {
    throw ContractError("backward() needs a scalar loss, got " + shape_string(loss.shape()));
  }
  if (backward_done_) throw ContractError("backward() already ran on this tape");
  backward_done_ = true;
  for (auto& n : nodes_) n.grad.reset();
  nodes_[loss.id()].grad = Tensor(loss.shape(), 1.0);
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    auto& node = nodes_[id];
    if (!node.backward || !node.grad) continue;
    // Copy: the callback may touch other nodes but never this one.
    const Tensor g = *node.grad;
    node.backward(*this, g);
  }
}

std::size_t count_valid(const Mask& mask) {
  return static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto m) { return m != 0; }));
}

// ---- plain kernels shared by forward and backward passes ----

namespace {

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + " expects a matrix, got " + shape_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

// op(A) * op(B) for row-major matrices with optional transposes.
Tensor gemm(const Tensor& a, bool ta, const Tensor& b, bool tb) {
  const auto m = ta ? a.dim(1) : a.dim(0);
  const auto k = ta ? a.dim(0) : a.dim(1);
  const auto kb = tb ? b.dim(1) : b.dim(0);
  const auto n = tb ? b.dim(0) : b.dim(1);
  if (k != kb) {
    throw DimensionError("matmul inner extents differ: " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  Tensor c({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ta ? a(p, i) : a(i, p);
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) c(i, j) += av * (tb ? b(j, p) : b(p, j));
    }
  }
  return c;
}

template <class F>
Tensor map(const Tensor& a, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

template <class F>
Tensor zip(const Tensor& a, const Tensor& b, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

// Strides for reducing `axis`: value index = (o * extent + a) * inner + i.
struct AxisLayout {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisLayout layout(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_string(shape));
  }
  AxisLayout l;
  for (std::size_t d = 0; d < axis; ++d) l.outer *= shape[d];
  l.extent = shape[axis];
  for (std::size_t d = axis + 1; d < shape.size(); ++d) l.inner *= shape[d];
  return l;
}

Shape drop_axis(const Shape& shape, std::size_t axis) {
  Shape out;
  for (std::size_t d = 0; d < shape.size(); ++d) {
    if (d != axis) out.push_back(shape[d]);
  }
  if (out.empty()) out.push_back(1);
  return out;
}

}  // namespace

// ---- elementwise ----

Var add(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "add");
  return a.tape().record(zip(a.value(), b.value(), std::plus<>{}), {a, b},
                         [a, b](Tape& t, const Tensor& g) {
                           t.accumulate(a, g);
                           t.accumulate(b, g);
                         });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "sub");
  return a.tape().record(zip(a.value(), b.value(), std::minus<>{}), {a, b},
                         [a, b](Tape& t, const Tensor& g) {
                           t.accumulate(a, g);
                           t.accumulate(b, map(g, [](double v) { return -v; }));
                         });
}

Var hadamard(const Var& a, const Var& b) {
  require_same_shape(a.value(), b.value(), "hadamard");
  return a.tape().record(zip(a.value(), b.value(), std::multiplies<>{}), {a, b},
                         [a, b](Tape& t, const Tensor& g) {
                           t.accumulate(a, zip(g, b.value(), std::multiplies<>{}));
                           t.accumulate(b, zip(g, a.value(), std::multiplies<>{}));
                         });
}

Var lerp(const Var& a, const Var& b, const Var& t) {
  require_same_shape(a.value(), b.value(), "lerp");
  require_same_shape(a.value(), t.value(), "lerp");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::lerp(a.value()[i], b.value()[i], t.value()[i]);
  return a.tape().record(std::move(out), {a, b, t}, [a, b, t](Tape& tape, const Tensor& g) {
    Tensor ga(g.shape()), gb(g.shape()), gt(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double w = t.value()[i];
      ga[i] = g[i] * (1.0 - w);
      gb[i] = g[i] * w;
      gt[i] = g[i] * (b.value()[i] - a.value()[i]);
    }
    tape.accumulate(a, ga);
    tape.accumulate(b, gb);
    tape.accumulate(t, gt);
  });
}

Var scale(const Var& a, double s) {
  return a.tape().record(map(a.value(), [s](double v) { return v * s; }), {a},
                         [a, s](Tape& t, const Tensor& g) {
                           t.accumulate(a, map(g, [s](double v) { return v * s; }));
                         });
}

Var add_scalar(const Var& a, double s) {
  return a.tape().record(map(a.value(), [s](double v) { return v + s; }), {a},
                         [a](Tape& t, const Tensor& g) { t.accumulate(a, g); });
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var relu(const Var& a) {
  return a.tape().record(map(a.value(), [](double v) { return v > 0.0 ? v : 0.0; }), {a},
                         [a](Tape& t, const Tensor& g) {
                           t.accumulate(a, zip(g, a.value(), [](double gv, double x) {
                                          return x > 0.0 ? gv : 0.0;
                                        }));
                         });
}

Var sigmoid(const Var& a) {
  Tensor y = map(a.value(), [](double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
  return a.tape().record(y, {a}, [a, y](Tape& t, const Tensor& g) {
    t.accumulate(a, zip(g, y, [](double gv, double s) { return gv * s * (1.0 - s); }));
  });
}

Var log(const Var& a) {
  return a.tape().record(map(a.value(), [](double v) { return std::log(v); }), {a},
                         [a](Tape& t, const Tensor& g) {
                           t.accumulate(a, zip(g, a.value(), [](double gv, double x) { return gv / x; }));
                         });
}

Var exp(const Var& a) {
  Tensor y = map(a.value(), [](double v) { return std::exp(v); });
  return a.tape().record(y, {a}, [a, y](Tape& t, const Tensor& g) {
    t.accumulate(a, zip(g, y, std::multiplies<>{}));
  });
}

Var clamp_min(const Var& a, double lo) {
  return a.tape().record(map(a.value(), [lo](double v) { return std::max(v, lo); }), {a},
                         [a, lo](Tape& t, const Tensor& g) {
                           t.accumulate(a, zip(g, a.value(), [lo](double gv, double x) {
                                          return x > lo ? gv : 0.0;
                                        }));
                         });
}

Var clamp_max(const Var& a, double hi) {
  return a.tape().record(map(a.value(), [hi](double v) { return std::min(v, hi); }), {a},
                         [a, hi](Tape& t, const Tensor& g) {
                           t.accumulate(a, zip(g, a.value(), [hi](double gv, double x) {
                                          return x < hi ? gv : 0.0;
                                        }));
                         });
}

// ---- linear algebra / layout ----

Var matmul(const Var& a, const Var& b) {
  require_rank2(a.value(), "matmul");
  require_rank2(b.value(), "matmul");
  return a.tape().record(gemm(a.value(), false, b.value(), false), {a, b},
                         [a, b](Tape& t, const Tensor& g) {
                           if (a.requires_grad()) t.accumulate(a, gemm(g, false, b.value(), true));
                           if (b.requires_grad()) t.accumulate(b, gemm(a.value(), true, g, false));
                         });
}

namespace {

Tensor transposed(const Tensor& a) {
  Tensor out({a.dim(1), a.dim(0)});
  for (std::size_t i = 0; i < a.dim(0); ++i) {
    for (std::size_t j = 0; j < a.dim(1); ++j) out(j, i) = a(i, j);
  }
  return out;
}

}  // namespace

Var transpose(const Var& a) {
  require_rank2(a.value(), "transpose");
  return a.tape().record(transposed(a.value()), {a},
                         [a](Tape& t, const Tensor& g) { t.accumulate(a, transposed(g)); });
}

Var add_row(const Var& a, const Var& row) {
  const auto& av = a.value();
  require_rank2(av, "add_row");
  if (row.value().size() != av.dim(1)) {
    throw DimensionError("add_row: row " + shape_string(row.shape()) + " vs matrix " +
                         shape_string(av.shape()));
  }
  Tensor out = av;
  for (std::size_t i = 0; i < av.dim(0); ++i) {
    for (std::size_t j = 0; j < av.dim(1); ++j) out(i, j) += row.value()[j];
  }
  return a.tape().record(std::move(out), {a, row}, [a, row](Tape& t, const Tensor& g) {
    t.accumulate(a, g);
    Tensor gr(row.shape());
    for (std::size_t i = 0; i < g.dim(0); ++i) {
      for (std::size_t j = 0; j < g.dim(1); ++j) gr[j] += g(i, j);
    }
    t.accumulate(row, gr);
  });
}

Var mul_col(const Var& a, const Var& col) {
  const auto& av = a.value();
  require_rank2(av, "mul_col");
  if (col.value().size() != av.dim(0)) {
    throw DimensionError("mul_col: column " + shape_string(col.shape()) + " vs matrix " +
                         shape_string(av.shape()));
  }
  Tensor out = av;
  for (std::size_t i = 0; i < av.dim(0); ++i) {
    for (std::size_t j = 0; j < av.dim(1); ++j) out(i, j) *= col.value()[i];
  }
  return a.tape().record(std::move(out), {a, col}, [a, col](Tape& t, const Tensor& g) {
    const auto& av = a.value();
    Tensor ga(av.shape());
    Tensor gc(col.shape());
    for (std::size_t i = 0; i < av.dim(0); ++i) {
      for (std::size_t j = 0; j < av.dim(1); ++j) {
        ga(i, j) = g(i, j) * col.value()[i];
        gc[i] += g(i, j) * av(i, j);
      }
    }
    t.accumulate(a, ga);
    t.accumulate(col, gc);
  });
}

Var broadcast_row(const Var& row, std::size_t m) {
  const auto n = row.value().size();
  Tensor out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out(i, j) = row.value()[j];
  }
  return row.tape().record(std::move(out), {row}, [row, m, n](Tape& t, const Tensor& g) {
    Tensor gr(row.shape());
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) gr[j] += g(i, j);
    }
    t.accumulate(row, gr);
  });
}

Var concat(const std::vector<Var>& parts, std::size_t axis) {
  if (parts.empty()) throw ContractError("concat of zero operands");
  if (axis > 1) throw DimensionError("concat supports axis 0 or 1");
  for (const auto& p : parts) require_rank2(p.value(), "concat");
  const auto& first = parts.front().value();
  std::size_t rows = 0, cols = 0;
  for (const auto& p : parts) {
    const auto& v = p.value();
    if (axis == 0) {
      if (v.dim(1) != first.dim(1)) throw DimensionError("concat rows: column extents differ");
      rows += v.dim(0);
    } else {
      if (v.dim(0) != first.dim(0)) throw DimensionError("concat columns: row extents differ");
      cols += v.dim(1);
    }
  }
  if (axis == 0) cols = first.dim(1);
  else rows = first.dim(0);

  Tensor out({rows, cols});
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const auto& v = p.value();
    for (std::size_t i = 0; i < v.dim(0); ++i) {
      for (std::size_t j = 0; j < v.dim(1); ++j) {
        if (axis == 0) out(offset + i, j) = v(i, j);
        else out(i, offset + j) = v(i, j);
      }
    }
    offset += v.dim(axis);
  }
  return parts.front().tape().record(std::move(out), parts, [parts, axis](Tape& t, const Tensor& g) {
    std::size_t offset = 0;
    for (const auto& p : parts) {
      const auto& shape = p.shape();
      Tensor gp(shape);
      for (std::size_t i = 0; i < shape[0]; ++i) {
        for (std::size_t j = 0; j < shape[1]; ++j) {
          gp(i, j) = axis == 0 ? g(offset + i, j) : g(i, offset + j);
        }
      }
      t.accumulate(p, gp);
      offset += shape[axis];
    }
  });
}

Var slice_rows(const Var& a, std::size_t begin, std::size_t count) {
  const auto& av = a.value();
  require_rank2(av, "slice_rows");
  if (count == 0 || begin + count > av.dim(0)) {
    throw DimensionError("slice_rows out of range for " + shape_string(av.shape()));
  }
  const auto n = av.dim(1);
  std::vector<double> data(av.data().begin() + static_cast<std::ptrdiff_t>(begin * n),
                           av.data().begin() + static_cast<std::ptrdiff_t>((begin + count) * n));
  return a.tape().record(Tensor({count, n}, std::move(data)), {a},
                         [a, begin, count, n](Tape& t, const Tensor& g) {
                           Tensor ga(a.shape());
                           for (std::size_t i = 0; i < count * n; ++i) ga[begin * n + i] = g[i];
                           t.accumulate(a, ga);
                         });
}

Var gather_column(const Var& a, std::size_t column) {
  const auto& av = a.value();
  require_rank2(av, "gather_column");
  if (column >= av.dim(1)) throw DimensionError("gather_column index out of range");
  Tensor out({av.dim(0)});
  for (std::size_t i = 0; i < av.dim(0); ++i) out[i] = av(i, column);
  return a.tape().record(std::move(out), {a}, [a, column](Tape& t, const Tensor& g) {
    Tensor ga(a.shape());
    for (std::size_t i = 0; i < g.size(); ++i) ga(i, column) = g[i];
    t.accumulate(a, ga);
  });
}

Var gather_row(const Var& a, std::size_t row) {
  const auto& av = a.value();
  require_rank2(av, "gather_row");
  if (row >= av.dim(0)) throw DimensionError("gather_row index out of range");
  return reshape(slice_rows(a, row, 1), {av.dim(1)});
}

Var reshape(const Var& a, Shape shape) {
  auto out = a.value().reshaped(std::move(shape));
  return a.tape().record(std::move(out), {a}, [a](Tape& t, const Tensor& g) {
    t.accumulate(a, g.reshaped(a.shape()));
  });
}

// ---- reductions ----

Var softmax(const Var& x, std::size_t axis, const Tensor* mask) {
  const auto& xv = x.value();
  if (xv.rank() > 2) throw DimensionError("softmax supports rank 1 or 2");
  if (mask && mask->shape() != xv.shape()) {
    throw DimensionError("softmax mask " + shape_string(mask->shape()) + " vs input " +
                         shape_string(xv.shape()));
  }
  const auto l = layout(xv.shape(), axis);
  Tensor y(xv.shape());
  auto at = [&l](std::size_t o, std::size_t a, std::size_t i) { return (o * l.extent + a) * l.inner + i; };
  auto live = [mask](std::size_t idx) { return mask == nullptr || (*mask)[idx] != 0.0; };
  for (std::size_t o = 0; o < l.outer; ++o) {
    for (std::size_t i = 0; i < l.inner; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < l.extent; ++a) {
        if (live(at(o, a, i))) mx = std::max(mx, xv[at(o, a, i)]);
      }
      if (!std::isfinite(mx)) throw ContractError("softmax over a fully masked slice");
      double z = 0.0;
      for (std::size_t a = 0; a < l.extent; ++a) {
        const auto idx = at(o, a, i);
        y[idx] = live(idx) ? std::exp(xv[idx] - mx) : 0.0;
        z += y[idx];
      }
      for (std::size_t a = 0; a < l.extent; ++a) y[at(o, a, i)] /= z;
    }
  }
  return x.tape().record(y, {x}, [x, yv = y, l](Tape& t, const Tensor& g) {
    Tensor gx(yv.shape());
    for (std::size_t o = 0; o < l.outer; ++o) {
      for (std::size_t i = 0; i < l.inner; ++i) {
        double dot = 0.0;
        for (std::size_t a = 0; a < l.extent; ++a) {
          const auto idx = (o * l.extent + a) * l.inner + i;
          dot += yv[idx] * g[idx];
        }
        for (std::size_t a = 0; a < l.extent; ++a) {
          const auto idx = (o * l.extent + a) * l.inner + i;
          gx[idx] = yv[idx] * (g[idx] - dot);
        }
      }
    }
    t.accumulate(x, gx);
  });
}

Var sum(const Var& a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return a.tape().record(Tensor::scalar(s), {a}, [a](Tape& t, const Tensor& g) {
    t.accumulate(a, Tensor(a.shape(), g[0]));
  });
}

Var sum(const Var& a, std::size_t axis) {
  const auto& av = a.value();
  const auto l = layout(av.shape(), axis);
  Tensor out(drop_axis(av.shape(), axis));
  for (std::size_t o = 0; o < l.outer; ++o) {
    for (std::size_t e = 0; e < l.extent; ++e) {
      for (std::size_t i = 0; i < l.inner; ++i) out[o * l.inner + i] += av[(o * l.extent + e) * l.inner + i];
    }
  }
  return a.tape().record(std::move(out), {a}, [a, l](Tape& t, const Tensor& g) {
    Tensor ga(a.shape());
    for (std::size_t o = 0; o < l.outer; ++o) {
      for (std::size_t e = 0; e < l.extent; ++e) {
        for (std::size_t i = 0; i < l.inner; ++i) ga[(o * l.extent + e) * l.inner + i] = g[o * l.inner + i];
      }
    }
    t.accumulate(a, ga);
  });
}

Var mean(const Var& a, std::size_t axis, const Mask* mask) {
  const auto& av = a.value();
  require_rank2(av, "mean");
  if (axis > 1) throw DimensionError("mean axis must be 0 or 1");
  const auto extent = av.dim(axis);
  const auto other = av.dim(1 - axis);
  if (mask && mask->size() != extent) {
    throw DimensionError("mean mask length " + std::to_string(mask->size()) + " vs extent " +
                         std::to_string(extent));
  }
  std::vector<double> w(extent, 1.0);
  if (mask) {
    for (std::size_t e = 0; e < extent; ++e) w[e] = (*mask)[e] ? 1.0 : 0.0;
  }
  const double count = std::accumulate(w.begin(), w.end(), 0.0);
  if (count == 0.0) throw ContractError("mean over a fully masked axis");
  for (auto& v : w) v /= count;

  // Running mean: repeated identical entries reproduce the entry exactly.
  Tensor out({other});
  double seen = 0.0;
  for (std::size_t e = 0; e < extent; ++e) {
    if (w[e] == 0.0) continue;
    seen += 1.0;
    for (std::size_t k = 0; k < other; ++k) out[k] += ((axis == 0 ? av(e, k) : av(k, e)) - out[k]) / seen;
  }
  return a.tape().record(std::move(out), {a}, [a, axis, w, other](Tape& t, const Tensor& g) {
    Tensor ga(a.shape());
    for (std::size_t e = 0; e < w.size(); ++e) {
      for (std::size_t k = 0; k < other; ++k) {
        (axis == 0 ? ga(e, k) : ga(k, e)) = w[e] * g[k];
      }
    }
    t.accumulate(a, ga);
  });
}

Var gap(const Var& a, const Mask* row_mask) { return mean(a, 0, row_mask); }

// ---- similarity ----

Var normalize_rows(const Var& a, double eps) {
  const auto& av = a.value();
  if (av.rank() > 2) throw DimensionError("normalize_rows supports rank 1 or 2");
  const auto m = av.rows();
  const auto n = av.cols();
  Tensor out(av.shape());
  std::vector<double> denom(m);
  for (std::size_t i = 0; i < m; ++i) {
    double ss = 0.0;
    for (std::size_t j = 0; j < n; ++j) ss += av[i * n + j] * av[i * n + j];
    denom[i] = std::max(std::sqrt(ss), eps);
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = av[i * n + j] / denom[i];
  }
  return a.tape().record(out, {a}, [a, y = out, denom, eps, m, n](Tape& t, const Tensor& g) {
    Tensor ga(a.shape());
    for (std::size_t i = 0; i < m; ++i) {
      if (denom[i] > eps) {
        // d(x/|x|) = (I - y y^T) / |x|
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += y[i * n + j] * g[i * n + j];
        for (std::size_t j = 0; j < n; ++j) ga[i * n + j] = (g[i * n + j] - y[i * n + j] * dot) / denom[i];
      } else {
        for (std::size_t j = 0; j < n; ++j) ga[i * n + j] = g[i * n + j] / eps;
      }
    }
    t.accumulate(a, ga);
  });
}

Var cosine_matrix(const Var& x, const Var& y) {
  require_rank2(x.value(), "cosine_matrix");
  require_rank2(y.value(), "cosine_matrix");
  if (x.value().dim(1) != y.value().dim(1)) {
    throw DimensionError("cosine_matrix feature extents differ: " + shape_string(x.shape()) + " vs " +
                         shape_string(y.shape()));
  }
  return matmul(normalize_rows(x), transpose(normalize_rows(y)));
}

Var cosine_sim(const Var& x, const Var& y) {
  const auto d = y.value().size();
  auto yr = y.value().rank() == 2 ? y : reshape(y, {1, d});
  auto xr = x.value().rank() == 2 ? x : reshape(x, {1, x.value().size()});
  auto c = cosine_matrix(xr, yr);
  return reshape(c, {c.value().dim(0)});
}

Var cosine_rows(const Var& x, const Var& y) {
  require_same_shape(x.value(), y.value(), "cosine_rows");
  require_rank2(x.value(), "cosine_rows");
  return sum(hadamard(normalize_rows(x), normalize_rows(y)), 1);
}

Var linear(const Var& x, const Var& weight, const Var* bias) {
  auto out = matmul(x, weight);
  return bias ? add_row(out, *bias) : out;
}

Tensor column_mask(const Mask& mask, std::size_t rows) {
  Tensor out({rows, mask.size()});
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < mask.size(); ++j) out(i, j) = mask[j] ? 1.0 : 0.0;
  }
  return out;
}

}  // namespace clipfilter
