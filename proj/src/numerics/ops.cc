#include "ecg/numerics/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ecg/common/error.h"

namespace ecg {
namespace {

Graph& graph_of(Var a) {
  if (!a.valid()) throw ContractError("op on an unbound Var");
  return *a.graph();
}

Graph& graph_of(Var a, Var b) {
  if (a.graph() != b.graph() || !a.valid()) throw ContractError("op mixes Vars from different graphs");
  return *a.graph();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

// out[p x r] += a[p x q] * b[q x r]
void gemm_nn(const double* a, const double* b, double* out, std::size_t p, std::size_t q,
             std::size_t r) {
  for (std::size_t i = 0; i < p; ++i) {
    double* out_row = out + i * r;
    const double* a_row = a + i * q;
    for (std::size_t k = 0; k < q; ++k) {
      const double aik = a_row[k];
      const double* b_row = b + k * r;
      for (std::size_t j = 0; j < r; ++j) out_row[j] += aik * b_row[j];
    }
  }
}

// out[p x r] += a[p x q] * b[r x q]^T
void gemm_nt(const double* a, const double* b, double* out, std::size_t p, std::size_t q,
             std::size_t r) {
  for (std::size_t i = 0; i < p; ++i) {
    const double* a_row = a + i * q;
    for (std::size_t j = 0; j < r; ++j) {
      const double* b_row = b + j * q;
      double acc = 0.0;
      for (std::size_t k = 0; k < q; ++k) acc += a_row[k] * b_row[k];
      out[i * r + j] += acc;
    }
  }
}

// out[m x n] += x[k x m]^T * y[k x n]
void gemm_tn(const double* x, const double* y, double* out, std::size_t k, std::size_t m,
             std::size_t n) {
  for (std::size_t t = 0; t < k; ++t) {
    const double* x_row = x + t * m;
    const double* y_row = y + t * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double xi = x_row[i];
      double* out_row = out + i * n;
      for (std::size_t j = 0; j < n; ++j) out_row[j] += xi * y_row[j];
    }
  }
}

template <typename Fwd, typename Deriv>
Var unary(Var a, Fwd fwd, Deriv deriv) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = fwd(x[i]);
  return g.record(std::move(out), {a}, [a, deriv](Graph& g, std::size_t self) {
    Tensor* ga = g.grad_buffer(a);
    if (!ga) return;
    const Tensor& x = g.value(a);
    const Tensor& dy = g.out_grad(self);
    for (std::size_t i = 0; i < x.numel(); ++i) (*ga)[i] += dy[i] * deriv(x[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_rank2(x, "matmul");
  require_rank2(y, "matmul");
  if (x.cols() != y.rows()) {
    throw DimensionError("matmul: inner extents differ for " + shape_string(x.shape()) + " and " +
                         shape_string(y.shape()));
  }
  const std::size_t p = x.rows(), q = x.cols(), r = y.cols();
  Tensor out(Shape{p, r});
  gemm_nn(x.data().data(), y.data().data(), out.data().data(), p, q, r);
  return g.record(std::move(out), {a, b}, [a, b, p, q, r](Graph& g, std::size_t self) {
    const Tensor& dc = g.out_grad(self);
    if (Tensor* ga = g.grad_buffer(a)) {
      gemm_nt(dc.data().data(), g.value(b).data().data(), ga->data().data(), p, r, q);
    }
    if (Tensor* gb = g.grad_buffer(b)) {
      gemm_tn(g.value(a).data().data(), dc.data().data(), gb->data().data(), p, q, r);
    }
  });
}

Var matmul_nt(Var a, Var b) {
  Graph& g = graph_of(a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_rank2(x, "matmul_nt");
  require_rank2(y, "matmul_nt");
  if (x.cols() != y.cols()) {
    throw DimensionError("matmul_nt: inner extents differ for " + shape_string(x.shape()) +
                         " and transposed " + shape_string(y.shape()));
  }
  const std::size_t p = x.rows(), q = x.cols(), r = y.rows();
  Tensor out(Shape{p, r});
  gemm_nt(x.data().data(), y.data().data(), out.data().data(), p, q, r);
  return g.record(std::move(out), {a, b}, [a, b, p, q, r](Graph& g, std::size_t self) {
    const Tensor& dc = g.out_grad(self);
    if (Tensor* ga = g.grad_buffer(a)) {
      gemm_nn(dc.data().data(), g.value(b).data().data(), ga->data().data(), p, r, q);
    }
    if (Tensor* gb = g.grad_buffer(b)) {
      gemm_tn(dc.data().data(), g.value(a).data().data(), gb->data().data(), p, r, q);
    }
  });
}

Var transpose(Var a) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  require_rank2(x, "transpose");
  const std::size_t n = x.rows(), m = x.cols();
  Tensor out(Shape{m, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out.at(j, i) = x.at(i, j);
  return g.record(std::move(out), {a}, [a, n, m](Graph& g, std::size_t self) {
    Tensor* ga = g.grad_buffer(a);
    if (!ga) return;
    const Tensor& dy = g.out_grad(self);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) (*ga)[i * m + j] += dy[j * n + i];
  });
}

Var add(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  out += b.value();
  return g.record(std::move(out), {a, b}, [a, b](Graph& g, std::size_t self) {
    const Tensor& dy = g.out_grad(self);
    if (Tensor* ga = g.grad_buffer(a)) *ga += dy;
    if (Tensor* gb = g.grad_buffer(b)) *gb += dy;
  });
}

Var sub(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = x[i] - y[i];
  return g.record(std::move(out), {a, b}, [a, b](Graph& g, std::size_t self) {
    const Tensor& dy = g.out_grad(self);
    if (Tensor* ga = g.grad_buffer(a)) *ga += dy;
    if (Tensor* gb = g.grad_buffer(b)) {
      for (std::size_t i = 0; i < dy.numel(); ++i) (*gb)[i] -= dy[i];
    }
  });
}

Var mul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = x[i] * y[i];
  return g.record(std::move(out), {a, b}, [a, b](Graph& g, std::size_t self) {
    const Tensor& dy = g.out_grad(self);
    const Tensor& x = g.value(a);
    const Tensor& y = g.value(b);
    if (Tensor* ga = g.grad_buffer(a)) {
      for (std::size_t i = 0; i < dy.numel(); ++i) (*ga)[i] += dy[i] * y[i];
    }
    if (Tensor* gb = g.grad_buffer(b)) {
      for (std::size_t i = 0; i < dy.numel(); ++i) (*gb)[i] += dy[i] * x[i];
    }
  });
}

Var scale(Var a, double factor) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = x[i] * factor;
  return g.record(std::move(out), {a}, [a, factor](Graph& g, std::size_t self) {
    Tensor* ga = g.grad_buffer(a);
    if (!ga) return;
    const Tensor& dy = g.out_grad(self);
    for (std::size_t i = 0; i < dy.numel(); ++i) (*ga)[i] += dy[i] * factor;
  });
}

Var relu(Var a) {
  // The derivative at exactly zero is taken as 0.
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Var gelu(Var a) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double kA = 0.044715;
  return unary(
      a,
      [](double x) { return 0.5 * x * (1.0 + std::tanh(kC * (x + kA * x * x * x))); },
      [](double x) {
        const double u = kC * (x + kA * x * x * x);
        const double t = std::tanh(u);
        const double du = kC * (1.0 + 3.0 * kA * x * x);
        return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
      });
}

Var sigmoid(Var a) {
  auto sig = [](double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  };
  return unary(a, sig, [sig](double x) {
    const double s = sig(x);
    return s * (1.0 - s);
  });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Var log(Var a) {
  return unary(a, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
}

Var mul_scalar(Var a, Var s) {
  Graph& g = graph_of(a, s);
  if (s.value().numel() != 1) {
    throw DimensionError("mul_scalar: factor must hold one value, got " +
                         shape_string(s.value().shape()));
  }
  const Tensor& x = a.value();
  const double factor = s.value()[0];
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out[i] = x[i] * factor;
  return g.record(std::move(out), {a, s}, [a, s](Graph& g, std::size_t self) {
    const Tensor& dy = g.out_grad(self);
    const Tensor& x = g.value(a);
    const double factor = g.value(s)[0];
    if (Tensor* ga = g.grad_buffer(a)) {
      for (std::size_t i = 0; i < dy.numel(); ++i) (*ga)[i] += dy[i] * factor;
    }
    if (Tensor* gs = g.grad_buffer(s)) {
      double acc = 0.0;
      for (std::size_t i = 0; i < dy.numel(); ++i) acc += dy[i] * x[i];
      (*gs)[0] += acc;
    }
  });
}

Var add_row(Var a, Var row) {
  Graph& g = graph_of(a, row);
  const Tensor& x = a.value();
  const Tensor& b = row.value();
  require_rank2(x, "add_row");
  const std::size_t n = x.rows(), d = x.cols();
  if (b.numel() != d) {
    throw DimensionError("add_row: " + shape_string(b.shape()) + " does not broadcast over " +
                         shape_string(x.shape()));
  }
  Tensor out = x;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] += b[j];
  return g.record(std::move(out), {a, row}, [a, row, n, d](Graph& g, std::size_t self) {
    const Tensor& dy = g.out_grad(self);
    if (Tensor* ga = g.grad_buffer(a)) *ga += dy;
    if (Tensor* gb = g.grad_buffer(row)) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) (*gb)[j] += dy[i * d + j];
    }
  });
}

Var mul_row(Var a, Var row) {
  Graph& g = graph_of(a, row);
  const Tensor& x = a.value();
  const Tensor& w = row.value();
  require_rank2(x, "mul_row");
  const std::size_t n = x.rows(), d = x.cols();
  if (w.numel() != d) {
    throw DimensionError("mul_row: " + shape_string(w.shape()) + " does not broadcast over " +
                         shape_string(x.shape()));
  }
  Tensor out(x.shape());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = x[i * d + j] * w[j];
  return g.record(std::move(out), {a, row}, [a, row, n, d](Graph& g, std::size_t self) {
    const Tensor& dy = g.out_grad(self);
    const Tensor& x = g.value(a);
    const Tensor& w = g.value(row);
    if (Tensor* ga = g.grad_buffer(a)) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) (*ga)[i * d + j] += dy[i * d + j] * w[j];
    }
    if (Tensor* gw = g.grad_buffer(row)) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) (*gw)[j] += dy[i * d + j] * x[i * d + j];
    }
  });
}

Var mul_col(Var a, Var col) {
  Graph& g = graph_of(a, col);
  const Tensor& x = a.value();
  const Tensor& c = col.value();
  require_rank2(x, "mul_col");
  const std::size_t n = x.rows(), d = x.cols();
  if (c.numel() != n) {
    throw DimensionError("mul_col: " + shape_string(c.shape()) + " does not broadcast over " +
                         shape_string(x.shape()));
  }
  Tensor out(x.shape());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = x[i * d + j] * c[i];
  return g.record(std::move(out), {a, col}, [a, col, n, d](Graph& g, std::size_t self) {
    const Tensor& dy = g.out_grad(self);
    const Tensor& x = g.value(a);
    const Tensor& c = g.value(col);
    if (Tensor* ga = g.grad_buffer(a)) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) (*ga)[i * d + j] += dy[i * d + j] * c[i];
    }
    if (Tensor* gc = g.grad_buffer(col)) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += dy[i * d + j] * x[i * d + j];
        (*gc)[i] += acc;
      }
    }
  });
}

Var layer_norm(Var a, double eps) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  if (x.rank() == 0 || x.cols() == 0) throw ContractError("layer_norm: empty last dimension");
  const std::size_t d = x.cols();
  const std::size_t n = x.numel() / d;
  Tensor out(x.shape());
  std::vector<double> inv_std(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x.data().data() + i * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(d);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = (row[j] - mu) * inv_std[i];
  }
  return g.record(std::move(out), {a},
                  [a, n, d, inv_std = std::move(inv_std)](Graph& g, std::size_t self) {
                    Tensor* ga = g.grad_buffer(a);
                    if (!ga) return;
                    const Tensor& dy = g.out_grad(self);
                    const Tensor& x = g.value(a);
                    std::vector<double> y(d);
                    for (std::size_t i = 0; i < n; ++i) {
                      const double* xr = x.data().data() + i * d;
                      const double* dyr = dy.data().data() + i * d;
                      double mu = 0.0;
                      for (std::size_t j = 0; j < d; ++j) mu += xr[j];
                      mu /= static_cast<double>(d);
                      double mean_dy = 0.0, mean_dy_y = 0.0;
                      for (std::size_t j = 0; j < d; ++j) {
                        y[j] = (xr[j] - mu) * inv_std[i];
                        mean_dy += dyr[j];
                        mean_dy_y += dyr[j] * y[j];
                      }
                      mean_dy /= static_cast<double>(d);
                      mean_dy_y /= static_cast<double>(d);
                      for (std::size_t j = 0; j < d; ++j) {
                        (*ga)[i * d + j] += inv_std[i] * (dyr[j] - mean_dy - y[j] * mean_dy_y);
                      }
                    }
                  });
}


Var causal_softmax(Var scores) {
  Graph& g = graph_of(scores);
  const Tensor& x = scores.value();
  require_rank2(x, "causal_softmax");
  const std::size_t n = x.rows(), m = x.cols();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t width = std::min(i + 1, m);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < width; ++j) mx = std::max(mx, x.at(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
      out.at(i, j) = std::exp(x.at(i, j) - mx);
      z += out.at(i, j);
    }
    for (std::size_t j = 0; j < width; ++j) out.at(i, j) /= z;
  }
  return g.record(std::move(out), {scores}, [scores, n, m](Graph& g, std::size_t self) {
    Tensor* gx = g.grad_buffer(scores);
    if (!gx) return;
    const Tensor& y = g.node_value(self);
    const Tensor& dy = g.out_grad(self);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t width = std::min(i + 1, m);
      double dot = 0.0;
      for (std::size_t j = 0; j < width; ++j) dot += y.at(i, j) * dy.at(i, j);
      for (std::size_t j = 0; j < width; ++j) gx->at(i, j) += y.at(i, j) * (dy.at(i, j) - dot);
    }
  });
}

Var log_softmax(Var a) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  if (x.rank() == 0 || x.cols() == 0) throw ContractError("log_softmax: empty last dimension");
  const std::size_t m = x.cols();
  const std::size_t n = x.numel() / m;
  Tensor out(x.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = x.data().data() + i * m;
    double mx = row[0];
    for (std::size_t j = 1; j < m; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < m; ++j) z += std::exp(row[j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = row[j] - lse;
  }
  return g.record(std::move(out), {a}, [a, n, m](Graph& g, std::size_t self) {
    Tensor* ga = g.grad_buffer(a);
    if (!ga) return;
    const Tensor& y = g.node_value(self);
    const Tensor& dy = g.out_grad(self);
    for (std::size_t i = 0; i < n; ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < m; ++j) total += dy[i * m + j];
      for (std::size_t j = 0; j < m; ++j) {
        (*ga)[i * m + j] += dy[i * m + j] - std::exp(y[i * m + j]) * total;
      }
    }
  });
}

Var row_max(Var a) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  require_rank2(x, "row_max");
  const std::size_t n = x.rows(), m = x.cols();
  if (m == 0) throw ContractError("row_max: no columns");
  Tensor out(Shape{n, 1});
  std::vector<std::size_t> arg(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 1; j < m; ++j) {
      if (x.at(i, j) > x.at(i, arg[i])) arg[i] = j;
    }
    out[i] = x.at(i, arg[i]);
  }
  return g.record(std::move(out), {a}, [a, m, arg = std::move(arg)](Graph& g, std::size_t self) {
    Tensor* ga = g.grad_buffer(a);
    if (!ga) return;
    const Tensor& dy = g.out_grad(self);
    for (std::size_t i = 0; i < arg.size(); ++i) (*ga)[i * m + arg[i]] += dy[i];
  });
}

Var select_rows(Var a, std::span<const std::size_t> rows) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  require_rank2(x, "select_rows");
  const std::size_t d = x.cols();
  Tensor out(Shape{rows.size(), d});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= x.rows()) {
      throw DimensionError("select_rows: row " + std::to_string(rows[i]) + " out of range for " +
                           shape_string(x.shape()));
    }
    std::copy_n(x.data().data() + rows[i] * d, d, out.data().data() + i * d);
  }
  std::vector<std::size_t> index(rows.begin(), rows.end());
  return g.record(std::move(out), {a}, [a, d, index = std::move(index)](Graph& g, std::size_t self) {
    Tensor* ga = g.grad_buffer(a);
    if (!ga) return;
    const Tensor& dy = g.out_grad(self);
    for (std::size_t i = 0; i < index.size(); ++i) {
      double* dst = ga->data().data() + index[i] * d;
      const double* src = dy.data().data() + i * d;
      for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
    }
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t end) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  require_rank2(x, "slice_rows");
  if (begin > end || end > x.rows()) {
    throw DimensionError("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of range for " + shape_string(x.shape()));
  }
  const std::size_t d = x.cols();
  Tensor out(Shape{end - begin, d});
  std::copy(x.data().begin() + begin * d, x.data().begin() + end * d, out.data().begin());
  return g.record(std::move(out), {a}, [a, begin, end, d](Graph& g, std::size_t self) {
    Tensor* ga = g.grad_buffer(a);
    if (!ga) return;
    const Tensor& dy = g.out_grad(self);
    for (std::size_t i = 0; i < (end - begin) * d; ++i) (*ga)[begin * d + i] += dy[i];
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  require_rank2(x, "slice_cols");
  if (begin > end || end > x.cols()) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(end) +
                         ") out of range for " + shape_string(x.shape()));
  }
  const std::size_t n = x.rows(), m = x.cols(), w = end - begin;
  Tensor out(Shape{n, w});
  for (std::size_t i = 0; i < n; ++i)
    std::copy_n(x.data().data() + i * m + begin, w, out.data().data() + i * w);
  return g.record(std::move(out), {a}, [a, begin, n, m, w](Graph& g, std::size_t self) {
    Tensor* ga = g.grad_buffer(a);
    if (!ga) return;
    const Tensor& dy = g.out_grad(self);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < w; ++j) (*ga)[i * m + begin + j] += dy[i * w + j];
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_rows: nothing to concatenate");
  Graph& g = graph_of(parts[0]);
  const std::size_t d = parts[0].value().cols();
  std::size_t total = 0;
  for (Var p : parts) {
    if (p.graph() != &g) throw ContractError("concat_rows: Vars from different graphs");
    require_rank2(p.value(), "concat_rows");
    if (p.value().cols() != d) {
      throw DimensionError("concat_rows: column mismatch " + shape_string(p.value().shape()) +
                           " vs width " + std::to_string(d));
    }
    total += p.value().rows();
  }
  Tensor out(Shape{total, d});
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& x = p.value();
    std::copy(x.data().begin(), x.data().end(), out.data().begin() + offset);
    offset += x.numel();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return g.record(std::move(out), parts, [inputs](Graph& g, std::size_t self) {
    const Tensor& dy = g.out_grad(self);
    std::size_t offset = 0;
    for (Var p : inputs) {
      const std::size_t count = g.value(p).numel();
      if (Tensor* gp = g.grad_buffer(p)) {
        for (std::size_t i = 0; i < count; ++i) (*gp)[i] += dy[offset + i];
      }
      offset += count;
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_cols: nothing to concatenate");
  Graph& g = graph_of(parts[0]);
  const std::size_t n = parts[0].value().rows();
  std::size_t total = 0;
  for (Var p : parts) {
    if (p.graph() != &g) throw ContractError("concat_cols: Vars from different graphs");
    require_rank2(p.value(), "concat_cols");
    if (p.value().rows() != n) {
      throw DimensionError("concat_cols: row mismatch " + shape_string(p.value().shape()));
    }
    total += p.value().cols();
  }
  Tensor out(Shape{n, total});
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& x = p.value();
    const std::size_t w = x.cols();
    for (std::size_t i = 0; i < n; ++i)
      std::copy_n(x.data().data() + i * w, w, out.data().data() + i * total + offset);
    offset += w;
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return g.record(std::move(out), parts, [inputs, n, total](Graph& g, std::size_t self) {
    const Tensor& dy = g.out_grad(self);
    std::size_t offset = 0;
    for (Var p : inputs) {
      const std::size_t w = g.value(p).cols();
      if (Tensor* gp = g.grad_buffer(p)) {
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < w; ++j) (*gp)[i * w + j] += dy[i * total + offset + j];
      }
      offset += w;
    }
  });
}

Var reshape(Var a, Shape shape) {
  Graph& g = graph_of(a);
  Tensor out = a.value().reshaped(std::move(shape));
  return g.record(std::move(out), {a}, [a](Graph& g, std::size_t self) {
    Tensor* ga = g.grad_buffer(a);
    if (!ga) return;
    const Tensor& dy = g.out_grad(self);
    for (std::size_t i = 0; i < dy.numel(); ++i) (*ga)[i] += dy[i];
  });
}

Var pick(Var a, std::span<const std::size_t> cols) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  require_rank2(x, "pick");
  const std::size_t n = x.rows(), m = x.cols();
  if (cols.size() != n) {
    throw DimensionError("pick: " + std::to_string(cols.size()) + " indices for " +
                         shape_string(x.shape()));
  }
  Tensor out(Shape{n, 1});
  for (std::size_t i = 0; i < n; ++i) {
    if (cols[i] >= m) throw DimensionError("pick: column index out of range");
    out[i] = x.at(i, cols[i]);
  }
  std::vector<std::size_t> index(cols.begin(), cols.end());
  return g.record(std::move(out), {a}, [a, m, index = std::move(index)](Graph& g, std::size_t self) {
    Tensor* ga = g.grad_buffer(a);
    if (!ga) return;
    const Tensor& dy = g.out_grad(self);
    for (std::size_t i = 0; i < index.size(); ++i) (*ga)[i * m + index[i]] += dy[i];
  });
}

Var element(Var a, std::size_t index) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  if (index >= x.numel()) throw DimensionError("element: index out of range");
  return g.record(Tensor::scalar(x[index]), {a}, [a, index](Graph& g, std::size_t self) {
    if (Tensor* ga = g.grad_buffer(a)) (*ga)[index] += g.out_grad(self)[0];
  });
}

Var sum(Var a) {
  Graph& g = graph_of(a);
  const Tensor& x = a.value();
  double total = 0.0;
  for (double v : x.data()) total += v;
  return g.record(Tensor::scalar(total), {a}, [a](Graph& g, std::size_t self) {
    Tensor* ga = g.grad_buffer(a);
    if (!ga) return;
    const double dy = g.out_grad(self)[0];
    for (double& v : ga->data()) v += dy;
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().numel();
  if (n == 0) throw ContractError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

}  // namespace ecg
