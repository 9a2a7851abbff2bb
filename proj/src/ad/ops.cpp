#include "ad/ops.hpp"

#include <cblas.h>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "common/errors.hpp"

namespace cd::ad {

namespace {

[[noreturn]] void shape_fail(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " +
                   shape_string(b));
}

void require_same_graph(const char* op, Var a, Var b) {
  if (&a.graph() != &b.graph()) throw Error(std::string(op) + ": operands on different graphs");
}

void require_rank(const char* op, const Tensor& t, std::size_t rank) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(t.shape()));
  }
}

// Splits a shape around `axis` into (outer, n, inner) for strided loops.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t n = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(const char* op, const Shape& shape, std::size_t axis) {
  if (axis >= shape.size()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for " +
                     shape_string(shape));
  }
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.n = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

Shape drop_axis(const Shape& shape, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != axis) out.push_back(shape[i]);
  }
  return out;
}

void check_indices(const char* op, std::span<const Index> idx, std::size_t limit) {
  for (Index i : idx) {
    if (i >= limit) {
      throw ShapeError(std::string(op) + ": index " + std::to_string(i) + " out of range for " +
                       std::to_string(limit) + " rows");
    }
  }
}

}  // namespace

Var add(Var a, Var b) {
  require_same_graph("add", a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.shape() != y.shape()) shape_fail("add", x.shape(), y.shape());
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  const auto ia = a.id(), ib = b.id();
  return a.graph().record(std::move(out), {ia, ib}, [ia, ib](Graph& g, const Tensor& go, const Tensor&) {
    if (Tensor* ga = g.grad_of(ia)) *ga += go;
    if (Tensor* gb = g.grad_of(ib)) *gb += go;
  });
}

Var sub(Var a, Var b) {
  require_same_graph("sub", a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.shape() != y.shape()) shape_fail("sub", x.shape(), y.shape());
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  const auto ia = a.id(), ib = b.id();
  return a.graph().record(std::move(out), {ia, ib}, [ia, ib](Graph& g, const Tensor& go, const Tensor&) {
    if (Tensor* ga = g.grad_of(ia)) *ga += go;
    if (Tensor* gb = g.grad_of(ib)) {
      for (std::size_t i = 0; i < go.size(); ++i) (*gb)[i] -= go[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_graph("mul", a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  if (x.shape() != y.shape()) shape_fail("mul", x.shape(), y.shape());
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  const auto ia = a.id(), ib = b.id();
  return a.graph().record(std::move(out), {ia, ib}, [ia, ib](Graph& g, const Tensor& go, const Tensor&) {
    const Tensor& x = g.value(ia);
    const Tensor& y = g.value(ib);
    if (Tensor* ga = g.grad_of(ia)) {
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += go[i] * y[i];
    }
    if (Tensor* gb = g.grad_of(ib)) {
      for (std::size_t i = 0; i < go.size(); ++i) (*gb)[i] += go[i] * x[i];
    }
  });
}

Var scale(Var a, double s) {
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * x[i];
  const auto ia = a.id();
  return a.graph().record(std::move(out), {ia}, [ia, s](Graph& g, const Tensor& go, const Tensor&) {
    if (Tensor* ga = g.grad_of(ia)) {
      for (std::size_t i = 0; i < go.size(); ++i) (*ga)[i] += s * go[i];
    }
  });
}

Var relu(Var a) {
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  const auto ia = a.id();
  return a.graph().record(std::move(out), {ia}, [ia](Graph& g, const Tensor& go, const Tensor&) {
    const Tensor& x = g.value(ia);
    if (Tensor* ga = g.grad_of(ia)) {
      for (std::size_t i = 0; i < go.size(); ++i) {
        if (x[i] > 0.0) (*ga)[i] += go[i];
      }
    }
  });
}

namespace {

// c[M x N] += a[M x K] * b[K x N], all row-major.
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  if (m == 0 || k == 0 || n == 0) return;
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(m), static_cast<int>(n),
              static_cast<int>(k), 1.0, a, static_cast<int>(k), b, static_cast<int>(n), 1.0, c,
              static_cast<int>(n));
}

// c[K x N] += a[M x K]^T * b[M x N].
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n) {
  if (m == 0 || k == 0 || n == 0) return;
  cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, static_cast<int>(k), static_cast<int>(n),
              static_cast<int>(m), 1.0, a, static_cast<int>(k), b, static_cast<int>(n), 1.0, c,
              static_cast<int>(n));
}

Tensor transpose2d(const Tensor& t) {
  const std::size_t r = t.dim(0), c = t.dim(1);
  Tensor out({c, r});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = t[i * c + j];
  }
  return out;
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_graph("matmul", a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_rank("matmul", x, 2);
  require_rank("matmul", y, 2);
  if (x.dim(1) != y.dim(0)) shape_fail("matmul", x.shape(), y.shape());
  const std::size_t m = x.dim(0), k = x.dim(1), n = y.dim(1);
  Tensor out({m, n});
  gemm_nn(x.data(), y.data(), out.data(), m, k, n);
  const auto ia = a.id(), ib = b.id();
  return a.graph().record(std::move(out), {ia, ib}, [ia, ib, m, k, n](Graph& g, const Tensor& go, const Tensor&) {
    if (Tensor* ga = g.grad_of(ia)) {
      const Tensor yt = transpose2d(g.value(ib));
      gemm_nn(go.data(), yt.data(), ga->data(), m, n, k);
    }
    if (Tensor* gb = g.grad_of(ib)) gemm_tn(g.value(ia).data(), go.data(), gb->data(), m, k, n);
  });
}

Var add_bias(Var x, Var b) {
  require_same_graph("add_bias", x, b);
  const Tensor& xv = x.value();
  const Tensor& bv = b.value();
  require_rank("add_bias", xv, 2);
  require_rank("add_bias", bv, 1);
  if (xv.dim(1) != bv.dim(0)) shape_fail("add_bias", xv.shape(), bv.shape());
  const std::size_t r = xv.dim(0), c = xv.dim(1);
  Tensor out = xv;
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += bv[j];
  }
  const auto ix = x.id(), ibias = b.id();
  return x.graph().record(std::move(out), {ix, ibias}, [ix, ibias, r, c](Graph& g, const Tensor& go, const Tensor&) {
    if (Tensor* gx = g.grad_of(ix)) *gx += go;
    if (Tensor* gb = g.grad_of(ibias)) {
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) (*gb)[j] += go[i * c + j];
      }
    }
  });
}

Var linear(Var x, Var weight, Var bias) {
  require_same_graph("linear", x, weight);
  require_same_graph("linear", x, bias);
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  const Tensor& bv = bias.value();
  require_rank("linear", xv, 2);
  require_rank("linear", wv, 2);
  require_rank("linear", bv, 1);
  const std::size_t rows = xv.dim(0), in = xv.dim(1), out_dim = wv.dim(0);
  if (wv.dim(1) != in) shape_fail("linear", xv.shape(), wv.shape());
  if (bv.dim(0) != out_dim) shape_fail("linear", wv.shape(), bv.shape());
  Tensor out({rows, out_dim});
  for (std::size_t i = 0; i < rows; ++i) {
    std::copy(bv.data(), bv.data() + out_dim, out.data() + i * out_dim);
  }
  const Tensor wt = transpose2d(wv);
  gemm_nn(xv.data(), wt.data(), out.data(), rows, in, out_dim);
  const auto ix = x.id(), iw = weight.id(), ib = bias.id();
  return x.graph().record(
      std::move(out), {ix, iw, ib}, [ix, iw, ib, rows, in, out_dim](Graph& g, const Tensor& go, const Tensor&) {
        if (Tensor* gx = g.grad_of(ix)) {
          gemm_nn(go.data(), g.value(iw).data(), gx->data(), rows, out_dim, in);
        }
        if (Tensor* gw = g.grad_of(iw)) {
          gemm_tn(go.data(), g.value(ix).data(), gw->data(), rows, out_dim, in);
        }
        if (Tensor* gb = g.grad_of(ib)) {
          for (std::size_t i = 0; i < rows; ++i) {
            const double* grow = go.data() + i * out_dim;
            for (std::size_t j = 0; j < out_dim; ++j) (*gb)[j] += grow[j];
          }
        }
      });
}

Tensor softmax_values(const Tensor& x, std::size_t axis) {
  const AxisSplit s = split_axis("softmax", x.shape(), axis);
  Tensor out(x.shape());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.n * s.inner + in;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < s.n; ++j) mx = std::max(mx, x[base + j * s.inner]);
      double total = 0.0;
      for (std::size_t j = 0; j < s.n; ++j) {
        const double e = std::exp(x[base + j * s.inner] - mx);
        out[base + j * s.inner] = e;
        total += e;
      }
      for (std::size_t j = 0; j < s.n; ++j) out[base + j * s.inner] /= total;
    }
  }
  return out;
}

Var softmax(Var x, std::size_t axis) {
  Tensor out = softmax_values(x.value(), axis);
  const AxisSplit s = split_axis("softmax", x.shape(), axis);
  const auto ix = x.id();
  return x.graph().record(std::move(out), {ix}, [ix, s](Graph& g, const Tensor& go,
                                                        const Tensor& y) {
    Tensor* gx = g.grad_of(ix);
    if (!gx) return;
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t in = 0; in < s.inner; ++in) {
        const std::size_t base = o * s.n * s.inner + in;
        double dot = 0.0;
        for (std::size_t j = 0; j < s.n; ++j) {
          dot += go[base + j * s.inner] * y[base + j * s.inner];
        }
        for (std::size_t j = 0; j < s.n; ++j) {
          const std::size_t p = base + j * s.inner;
          (*gx)[p] += y[p] * (go[p] - dot);
        }
      }
    }
  });
}

Tensor l1_normalize_values(const Tensor& x, std::size_t axis) {
  const AxisSplit s = split_axis("l1_normalize", x.shape(), axis);
  Tensor out(x.shape());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.n * s.inner + in;
      double norm = 0.0;
      for (std::size_t j = 0; j < s.n; ++j) norm += std::abs(x[base + j * s.inner]);
      for (std::size_t j = 0; j < s.n; ++j) {
        const std::size_t p = base + j * s.inner;
        out[p] = norm > 0.0 ? x[p] / norm : 1.0 / static_cast<double>(s.n);
      }
    }
  }
  return out;
}

Var l1_normalize(Var x, std::size_t axis) {
  Tensor out = l1_normalize_values(x.value(), axis);
  const AxisSplit s = split_axis("l1_normalize", x.shape(), axis);
  const auto ix = x.id();
  return x.graph().record(std::move(out), {ix}, [ix, s](Graph& g, const Tensor& go, const Tensor&) {
    Tensor* gx = g.grad_of(ix);
    if (!gx) return;
    const Tensor& x = g.value(ix);
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t in = 0; in < s.inner; ++in) {
        const std::size_t base = o * s.n * s.inner + in;
        double norm = 0.0;
        double dot = 0.0;
        for (std::size_t j = 0; j < s.n; ++j) {
          const std::size_t p = base + j * s.inner;
          norm += std::abs(x[p]);
          dot += go[p] * x[p];
        }
        // The uniform fallback is constant: zero gradient.
        if (norm <= 0.0) continue;
        const double inv = 1.0 / norm;
        const double inv2 = inv * inv;
        for (std::size_t j = 0; j < s.n; ++j) {
          const std::size_t p = base + j * s.inner;
          const double sign = x[p] > 0.0 ? 1.0 : (x[p] < 0.0 ? -1.0 : 0.0);
          (*gx)[p] += go[p] * inv - sign * dot * inv2;
        }
      }
    }
  });
}

Var gather_rows(Var x, std::vector<Index> indices) {
  const Tensor& xv = x.value();
  if (xv.rank() == 0) throw ShapeError("gather_rows: scalar input");
  const std::size_t rows = xv.dim(0), cols = xv.cols();
  check_indices("gather_rows", indices, rows);
  Shape shape = xv.shape();
  shape[0] = indices.size();
  Tensor out(shape);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const double* src = xv.data() + static_cast<std::size_t>(indices[r]) * cols;
    std::copy(src, src + cols, out.data() + r * cols);
  }
  const auto ix = x.id();
  return x.graph().record(std::move(out), {ix},
                          [ix, cols, idx = std::move(indices)](Graph& g, const Tensor& go, const Tensor&) {
                            Tensor* gx = g.grad_of(ix);
                            if (!gx) return;
                            for (std::size_t r = 0; r < idx.size(); ++r) {
                              double* dst = gx->data() + static_cast<std::size_t>(idx[r]) * cols;
                              const double* src = go.data() + r * cols;
                              for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
                            }
                          });
}

Var scatter_add_rows(Var x, std::vector<Index> indices, std::size_t num_rows) {
  const Tensor& xv = x.value();
  if (xv.rank() == 0) throw ShapeError("scatter_add_rows: scalar input");
  if (xv.dim(0) != indices.size()) {
    throw ShapeError("scatter_add_rows: " + std::to_string(indices.size()) +
                     " indices for input " + shape_string(xv.shape()));
  }
  check_indices("scatter_add_rows", indices, num_rows);
  const std::size_t cols = xv.cols();
  Shape shape = xv.shape();
  shape[0] = num_rows;
  Tensor out(shape);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    double* dst = out.data() + static_cast<std::size_t>(indices[r]) * cols;
    const double* src = xv.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
  }
  const auto ix = x.id();
  return x.graph().record(std::move(out), {ix},
                          [ix, cols, idx = std::move(indices)](Graph& g, const Tensor& go, const Tensor&) {
                            Tensor* gx = g.grad_of(ix);
                            if (!gx) return;
                            for (std::size_t r = 0; r < idx.size(); ++r) {
                              const double* src =
                                  go.data() + static_cast<std::size_t>(idx[r]) * cols;
                              double* dst = gx->data() + r * cols;
                              for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
                            }
                          });
}

Var weighted_gather(Var src, std::vector<Index> indices, std::vector<double> weights,
                    std::size_t k) {
  const Tensor& sv = src.value();
  require_rank("weighted_gather", sv, 2);
  if (k == 0 || indices.size() % k != 0 || weights.size() != indices.size()) {
    throw ShapeError("weighted_gather: " + std::to_string(indices.size()) + " indices, " +
                     std::to_string(weights.size()) + " weights, k=" + std::to_string(k));
  }
  check_indices("weighted_gather", indices, sv.dim(0));
  const std::size_t m = indices.size() / k, cols = sv.dim(1);
  Tensor out({m, cols});
  for (std::size_t i = 0; i < m; ++i) {
    double* dst = out.data() + i * cols;
    for (std::size_t j = 0; j < k; ++j) {
      const double w = weights[i * k + j];
      const double* row = sv.data() + static_cast<std::size_t>(indices[i * k + j]) * cols;
      for (std::size_t c = 0; c < cols; ++c) dst[c] += w * row[c];
    }
  }
  const auto is = src.id();
  return src.graph().record(
      std::move(out), {is},
      [is, m, k, cols, idx = std::move(indices), w = std::move(weights)](Graph& g,
                                                                         const Tensor& go, const Tensor&) {
        Tensor* gs = g.grad_of(is);
        if (!gs) return;
        for (std::size_t i = 0; i < m; ++i) {
          const double* grow = go.data() + i * cols;
          for (std::size_t j = 0; j < k; ++j) {
            const double wij = w[i * k + j];
            double* dst = gs->data() + static_cast<std::size_t>(idx[i * k + j]) * cols;
            for (std::size_t c = 0; c < cols; ++c) dst[c] += wij * grow[c];
          }
        }
      });
}

Var reduce_sum(Var x, std::size_t axis) {
  const Tensor& xv = x.value();
  const AxisSplit s = split_axis("reduce_sum", xv.shape(), axis);
  Tensor out(drop_axis(xv.shape(), axis));
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t j = 0; j < s.n; ++j) {
      const double* src = xv.data() + (o * s.n + j) * s.inner;
      double* dst = out.data() + o * s.inner;
      for (std::size_t in = 0; in < s.inner; ++in) dst[in] += src[in];
    }
  }
  const auto ix = x.id();
  return x.graph().record(std::move(out), {ix}, [ix, s](Graph& g, const Tensor& go, const Tensor&) {
    Tensor* gx = g.grad_of(ix);
    if (!gx) return;
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t j = 0; j < s.n; ++j) {
        double* dst = gx->data() + (o * s.n + j) * s.inner;
        const double* src = go.data() + o * s.inner;
        for (std::size_t in = 0; in < s.inner; ++in) dst[in] += src[in];
      }
    }
  });
}

Var reduce_mean(Var x, std::size_t axis) {
  const std::size_t n = x.value().dim(axis);
  if (n == 0) throw ShapeError("reduce_mean: empty axis");
  return scale(reduce_sum(x, axis), 1.0 / static_cast<double>(n));
}

Var reduce_max(Var x, std::size_t axis) {
  const Tensor& xv = x.value();
  const AxisSplit s = split_axis("reduce_max", xv.shape(), axis);
  if (s.n == 0) throw ShapeError("reduce_max: empty axis");
  Tensor out(drop_axis(xv.shape(), axis));
  std::vector<std::uint32_t> arg(s.outer * s.inner, 0);
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.n * s.inner + in;
      double best = xv[base];
      std::uint32_t best_j = 0;
      for (std::size_t j = 1; j < s.n; ++j) {
        const double v = xv[base + j * s.inner];
        if (v > best) {
          best = v;
          best_j = static_cast<std::uint32_t>(j);
        }
      }
      out[o * s.inner + in] = best;
      arg[o * s.inner + in] = best_j;
    }
  }
  const auto ix = x.id();
  return x.graph().record(std::move(out), {ix},
                          [ix, s, arg = std::move(arg)](Graph& g, const Tensor& go, const Tensor&) {
                            Tensor* gx = g.grad_of(ix);
                            if (!gx) return;
                            for (std::size_t o = 0; o < s.outer; ++o) {
                              for (std::size_t in = 0; in < s.inner; ++in) {
                                const std::size_t q = o * s.inner + in;
                                (*gx)[o * s.n * s.inner + arg[q] * s.inner + in] += go[q];
                              }
                            }
                          });
}

Var sum_all(Var x) {
  const Tensor& xv = x.value();
  double total = 0.0;
  for (double v : xv.values()) total += v;
  const auto ix = x.id();
  return x.graph().record(Tensor::scalar(total), {ix}, [ix](Graph& g, const Tensor& go, const Tensor&) {
    Tensor* gx = g.grad_of(ix);
    if (!gx) return;
    const double d = go[0];
    for (double& v : gx->values()) v += d;
  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) throw ShapeError("concat: axis out of range for " + shape_string(first));
  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<std::size_t> widths;
  std::vector<std::uint32_t> ids;
  for (const Var& p : parts) {
    require_same_graph("concat", parts[0], p);
    const Shape& sh = p.shape();
    if (sh.size() != first.size()) shape_fail("concat", first, sh);
    for (std::size_t d = 0; d < sh.size(); ++d) {
      if (d != axis && sh[d] != first[d]) shape_fail("concat", first, sh);
    }
    out_shape[axis] += sh[axis];
    ids.push_back(p.id());
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= first[d];
  for (std::size_t d = axis + 1; d < first.size(); ++d) inner *= first[d];
  for (const Var& p : parts) widths.push_back(p.shape()[axis] * inner);
  const std::size_t out_width = out_shape[axis] * inner;

  Tensor out(out_shape);
  std::size_t offset = 0;
  for (std::size_t t = 0; t < parts.size(); ++t) {
    const Tensor& v = parts[t].value();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy(v.data() + o * widths[t], v.data() + (o + 1) * widths[t],
                out.data() + o * out_width + offset);
    }
    offset += widths[t];
  }
  Graph& graph = parts[0].graph();
  std::vector<std::uint32_t> inputs = ids;
  return graph.record(std::move(out), std::move(inputs),
                      [ids, widths, outer, out_width](Graph& g, const Tensor& go, const Tensor&) {
                        std::size_t off = 0;
                        for (std::size_t t = 0; t < ids.size(); ++t) {
                          if (Tensor* gp = g.grad_of(ids[t])) {
                            for (std::size_t o = 0; o < outer; ++o) {
                              const double* src = go.data() + o * out_width + off;
                              double* dst = gp->data() + o * widths[t];
                              for (std::size_t c = 0; c < widths[t]; ++c) dst[c] += src[c];
                            }
                          }
                          off += widths[t];
                        }
                      });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  const auto ix = x.id();
  return x.graph().record(std::move(out), {ix}, [ix](Graph& g, const Tensor& go, const Tensor&) {
    Tensor* gx = g.grad_of(ix);
    if (!gx) return;
    for (std::size_t i = 0; i < go.size(); ++i) (*gx)[i] += go[i];
  });
}

Var softmax_cross_entropy(Var logits, std::span<const std::uint8_t> labels,
                          std::span<const double> class_weights) {
  const Tensor& z = logits.value();
  require_rank("softmax_cross_entropy", z, 2);
  const std::size_t n = z.dim(0), c = z.dim(1);
  if (labels.size() != n) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                     " labels for logits " + shape_string(z.shape()));
  }
  if (class_weights.size() != c) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(class_weights.size()) +
                     " class weights for " + std::to_string(c) + " classes");
  }
  if (n == 0) throw ShapeError("softmax_cross_entropy: no rows");
  const Tensor prob = softmax_values(z, 1);
  double weight_total = 0.0;
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] >= c) throw ValidationError("softmax_cross_entropy: label out of range");
    const double w = class_weights[labels[i]];
    // log p = z_y - logsumexp(z), evaluated with the max shift.
    double mx = z[i * c];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, z[i * c + j]);
    double total = 0.0;
    for (std::size_t j = 0; j < c; ++j) total += std::exp(z[i * c + j] - mx);
    const double log_p = z[i * c + labels[i]] - mx - std::log(total);
    loss -= w * log_p;
    weight_total += w;
  }
  if (!(weight_total > 0.0)) throw ValidationError("softmax_cross_entropy: zero total weight");
  loss /= weight_total;
  std::vector<std::uint8_t> y(labels.begin(), labels.end());
  std::vector<double> cw(class_weights.begin(), class_weights.end());
  const auto iz = logits.id();
  return logits.graph().record(
      Tensor::scalar(loss), {iz},
      [iz, n, c, prob, y = std::move(y), cw = std::move(cw), weight_total](Graph& g,
                                                                         const Tensor& go, const Tensor&) {
        Tensor* gz = g.grad_of(iz);
        if (!gz) return;
        const double d = go[0] / weight_total;
        for (std::size_t i = 0; i < n; ++i) {
          const double w = cw[y[i]] * d;
          for (std::size_t j = 0; j < c; ++j) {
            const double target = j == y[i] ? 1.0 : 0.0;
            (*gz)[i * c + j] += w * (prob[i * c + j] - target);
          }
        }
      });
}

}  // namespace cd::ad
