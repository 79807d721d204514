#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "vqel/error.hpp"
#include "vqel/numcore/tensor.hpp"

namespace vqel::num {

namespace detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

inline MapC as_mat(const std::vector<double>& v, std::size_t r, std::size_t c) {
  return MapC(v.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}
inline Map as_mat(std::vector<double>& v, std::size_t r, std::size_t c) {
  return Map(v.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}


// Shared shape logic for binary elementwise ops: equal shapes, or one side scalar.
inline Shape broadcast_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return a.shape();
  if (b.is_scalar()) return a.shape();
  if (a.is_scalar()) return b.shape();
  throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                       shape_str(b.shape()));
}

template <class Fwd, class DA, class DB>
Tensor binary(const Tensor& a, const Tensor& b, const char* name, Fwd fwd, DA da, DB db) {
  Shape shape = broadcast_shape(a, b, name);
  const std::size_t n = numel(shape);
  const bool sa = a.size() == 1 && n != 1, sb = b.size() == 1 && n != 1;
  std::vector<double> out(n);
  const auto av = a.values(), bv = b.values();
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[sa ? 0 : i], bv[sb ? 0 : i]);
  return make_result(std::move(shape), std::move(out), {a, b}, [n, sa, sb, da, db](Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    const auto& g = self.grad;
    if (pa.requires_grad) {
      auto& ga = pa.grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        ga[sa ? 0 : i] += g[i] * da(pa.value[sa ? 0 : i], pb.value[sb ? 0 : i]);
      }
    }
    if (pb.requires_grad) {
      auto& gb = pb.grad_buffer();
      for (std::size_t i = 0; i < n; ++i) {
        gb[sb ? 0 : i] += g[i] * db(pa.value[sa ? 0 : i], pb.value[sb ? 0 : i]);
      }
    }
  });
}

// Elementwise unary op whose derivative is expressed through input x and output y.
template <class Fwd, class Deriv>
Tensor unary(const Tensor& a, Fwd fwd, Deriv deriv) {
  const std::size_t n = a.size();
  std::vector<double> out(n);
  const auto av = a.values();
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[i]);
  return make_result(a.shape(), std::move(out), {a}, [n, deriv](Node& self) {
    auto& p = *self.parents[0];
    auto& gp = p.grad_buffer();
    for (std::size_t i = 0; i < n; ++i) gp[i] += self.grad[i] * deriv(p.value[i], self.value[i]);
  });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.dim() != 2 || b.dim() != 2 || a.shape()[1] != b.shape()[0]) {
    throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
  }
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  std::vector<double> out(m * n);
  detail::as_mat(out, m, n).noalias() =
      detail::as_mat(a.node()->value, m, k) * detail::as_mat(b.node()->value, k, n);
  return make_result(Shape{m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    const auto g = detail::as_mat(self.grad, m, n);
    if (pa.requires_grad) {
      detail::as_mat(pa.grad_buffer(), m, k).noalias() +=
          g * detail::as_mat(pb.value, k, n).transpose();
    }
    if (pb.requires_grad) {
      detail::as_mat(pb.grad_buffer(), k, n).noalias() +=
          detail::as_mat(pa.value, m, k).transpose() * g;
    }
  });
}

// a · bᵀ without materializing the transpose.
inline Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.dim() != 2 || b.dim() != 2 || a.shape()[1] != b.shape()[1]) {
    throw DimensionError("matmul_nt: incompatible shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
  }
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[0];
  std::vector<double> out(m * n);
  detail::as_mat(out, m, n).noalias() =
      detail::as_mat(a.node()->value, m, k) * detail::as_mat(b.node()->value, n, k).transpose();
  return make_result(Shape{m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    const auto g = detail::as_mat(self.grad, m, n);
    if (pa.requires_grad) {
      detail::as_mat(pa.grad_buffer(), m, k).noalias() += g * detail::as_mat(pb.value, n, k);
    }
    if (pb.requires_grad) {
      detail::as_mat(pb.grad_buffer(), n, k).noalias() +=
          g.transpose() * detail::as_mat(pa.value, m, k);
    }
  });
}

// Adds a length-n bias to every row of an m×n matrix.
inline Tensor add_row(const Tensor& a, const Tensor& bias) {
  const std::size_t n = a.cols(), m = a.rows();
  if (bias.size() != n) {
    throw DimensionError("add_row: bias " + shape_str(bias.shape()) + " vs rows of " +
                         shape_str(a.shape()));
  }
  std::vector<double> out(a.values().begin(), a.values().end());
  const auto bv = bias.values();
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] += bv[c];
  return make_result(a.shape(), std::move(out), {a, bias}, [m, n](Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      auto& ga = pa.grad_buffer();
      for (std::size_t i = 0; i < m * n; ++i) ga[i] += self.grad[i];
    }
    if (pb.requires_grad) {
      auto& gb = pb.grad_buffer();
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) gb[c] += self.grad[r * n + c];
    }
  });
}

// Multiplies row r of an m×n matrix by s[r].
inline Tensor scale_rows(const Tensor& a, const Tensor& s) {
  const std::size_t m = a.rows(), n = a.cols();
  if (s.size() != m) {
    throw DimensionError("scale_rows: " + std::to_string(s.size()) + " factors for " +
                         std::to_string(m) + " rows");
  }
  std::vector<double> out(m * n);
  const auto av = a.values(), sv = s.values();
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] = av[r * n + c] * sv[r];
  return make_result(a.shape(), std::move(out), {a, s}, [m, n](Node& self) {
    auto& pa = *self.parents[0];
    auto& ps = *self.parents[1];
    if (pa.requires_grad) {
      auto& g = pa.grad_buffer();
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) g[r * n + c] += self.grad[r * n + c] * ps.value[r];
    }
    if (ps.requires_grad) {
      auto& g = ps.grad_buffer();
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) g[r] += self.grad[r * n + c] * pa.value[r * n + c];
    }
  });
}

// Stacks `rows` copies of a vector into a rows×n matrix.
inline Tensor repeat_row(const Tensor& v, std::size_t rows) {
  const std::size_t n = v.size();
  std::vector<double> out(rows * n);
  for (std::size_t r = 0; r < rows; ++r)
    std::copy(v.values().begin(), v.values().end(), out.begin() + static_cast<long>(r * n));
  return make_result(Shape{rows, n}, std::move(out), {v}, [rows, n](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < n; ++c) g[c] += self.grad[r * n + c];
  });
}

// Row lookup: out[i] = table[indices[i]]. Gradients scatter-add into the table.
inline Tensor gather_rows(const Tensor& table, std::span<const int> indices) {
  const std::size_t k = table.rows(), d = table.cols(), m = indices.size();
  std::vector<double> out(m * d);
  for (std::size_t i = 0; i < m; ++i) {
    if (indices[i] < 0 || static_cast<std::size_t>(indices[i]) >= k) {
      throw InputError("gather_rows: index " + std::to_string(indices[i]) + " outside [0," +
                       std::to_string(k) + ")");
    }
    const auto row = table.values().subspan(static_cast<std::size_t>(indices[i]) * d, d);
    std::copy(row.begin(), row.end(), out.begin() + static_cast<long>(i * d));
  }
  std::vector<int> idx(indices.begin(), indices.end());
  return make_result(Shape{m, d}, std::move(out), {table}, [idx = std::move(idx), d](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t c = 0; c < d; ++c)
        g[static_cast<std::size_t>(idx[i]) * d + c] += self.grad[i * d + c];
  });
}

// out[i] = x[i, indices[i]] for an m×n matrix.
inline Tensor pick(const Tensor& x, std::span<const int> indices) {
  const std::size_t m = x.rows(), n = x.cols();
  if (indices.size() != m) {
    throw DimensionError("pick: " + std::to_string(indices.size()) + " indices for " +
                         std::to_string(m) + " rows");
  }
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (indices[i] < 0 || static_cast<std::size_t>(indices[i]) >= n) {
      throw InputError("pick: index " + std::to_string(indices[i]) + " out of range");
    }
    out[i] = x.values()[i * n + static_cast<std::size_t>(indices[i])];
  }
  std::vector<int> idx(indices.begin(), indices.end());
  return make_result(Shape{m}, std::move(out), {x}, [idx = std::move(idx), n](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i)
      g[i * n + static_cast<std::size_t>(idx[i])] += self.grad[i];
  });
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

inline Tensor add(const Tensor& a, const Tensor& b) {
  return detail::binary(
      a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  return detail::binary(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  return detail::binary(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

inline Tensor scale(const Tensor& a, double s) {
  return detail::unary(
      a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

inline Tensor add_scalar(const Tensor& a, double c) {
  return detail::unary(
      a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

inline Tensor tanh(const Tensor& a) {
  return detail::unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

inline double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Tensor sigmoid(const Tensor& a) {
  return detail::unary(a, sigmoid_scalar, [](double, double y) { return y * (1.0 - y); });
}

inline Tensor exp(const Tensor& a) {
  return detail::unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

inline Tensor log(const Tensor& a) {
  for (double v : a.values()) {
    if (!(v > 0.0)) throw DomainError("log: non-positive input " + std::to_string(v));
  }
  return detail::unary(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

// log(1 + e^x), computed without overflow.
inline double softplus_scalar(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline Tensor softplus(const Tensor& a) {
  return detail::unary(a, softplus_scalar, [](double x, double) { return sigmoid_scalar(x); });
}

// Identity forward; blocks gradients.
inline Tensor stop_gradient(const Tensor& a) { return a.detach_copy(false); }

// Forward value of `discrete`, gradient copied to `continuous` only.
inline Tensor straight_through(const Tensor& discrete, const Tensor& continuous) {
  detail::require_same_shape(discrete, continuous, "straight_through");
  std::vector<double> out(discrete.values().begin(), discrete.values().end());
  return make_result(discrete.shape(), std::move(out), {continuous}, [](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

inline Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return make_result(Shape{1}, {s}, {a}, [](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (double& x : g) x += self.grad[0];
  });
}

inline Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

// Sum of squares of all entries.
inline Tensor sum_squares(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return make_result(Shape{1}, {s}, {a}, [](Node& self) {
    auto& p = *self.parents[0];
    auto& g = p.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += 2.0 * p.value[i] * self.grad[0];
  });
}

// ---------------------------------------------------------------------------
// Row-wise normalizers (over the last dimension)
// ---------------------------------------------------------------------------

inline void require_temperature(double temperature, const char* op) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ParameterError(std::string(op) + ": temperature must be positive, got " +
                         std::to_string(temperature));
  }
}

inline Tensor log_softmax(const Tensor& x, double temperature = 1.0) {
  require_temperature(temperature, "log_softmax");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(m * n);
  const auto xv = x.values();
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = xv.data() + r * n;
    const double mx = *std::max_element(row, row + n) / temperature;
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) s += std::exp(row[c] / temperature - mx);
    const double lse = mx + std::log(s);
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] = row[c] / temperature - lse;
  }
  return make_result(x.shape(), std::move(out), {x}, [m, n, temperature](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < m; ++r) {
      double gs = 0.0;
      for (std::size_t c = 0; c < n; ++c) gs += self.grad[r * n + c];
      for (std::size_t c = 0; c < n; ++c) {
        const double p = std::exp(self.value[r * n + c]);
        g[r * n + c] += (self.grad[r * n + c] - p * gs) / temperature;
      }
    }
  });
}

inline Tensor softmax(const Tensor& x, double temperature = 1.0) {
  require_temperature(temperature, "softmax");
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(m * n);
  const auto xv = x.values();
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = xv.data() + r * n;
    const double mx = *std::max_element(row, row + n);
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) s += (out[r * n + c] = std::exp((row[c] - mx) / temperature));
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] /= s;
  }
  return make_result(x.shape(), std::move(out), {x}, [m, n, temperature](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < m; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < n; ++c) dot += self.grad[r * n + c] * self.value[r * n + c];
      for (std::size_t c = 0; c < n; ++c) {
        g[r * n + c] += self.value[r * n + c] * (self.grad[r * n + c] - dot) / temperature;
      }
    }
  });
}

inline constexpr double kNormEpsilon = 1e-12;

inline Tensor l2_normalize(const Tensor& x) {
  const std::size_t m = x.rows(), n = x.cols();
  std::vector<double> out(m * n), norms(m);
  const auto xv = x.values();
  for (std::size_t r = 0; r < m; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < n; ++c) s += xv[r * n + c] * xv[r * n + c];
    norms[r] = std::sqrt(s);
    if (!(norms[r] > kNormEpsilon)) {
      throw DegenerateInputError("l2_normalize: row " + std::to_string(r) + " has near-zero norm");
    }
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] = xv[r * n + c] / norms[r];
  }
  // d(x/|x|) = (I - y yᵀ) / |x|
  return make_result(x.shape(), std::move(out), {x}, [m, n, norms = std::move(norms)](Node& self) {
    auto& g = self.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < m; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < n; ++c) dot += self.grad[r * n + c] * self.value[r * n + c];
      for (std::size_t c = 0; c < n; ++c) {
        g[r * n + c] += (self.grad[r * n + c] - self.value[r * n + c] * dot) / norms[r];
      }
    }
  });
}

// Squared Euclidean distance of every row of z (m×d) to every row of codes (K×d).
inline Tensor sq_distances(const Tensor& z, const Tensor& codes) {
  if (z.cols() != codes.cols()) {
    throw DimensionError("sq_distances: dimension mismatch " + shape_str(z.shape()) + " vs " +
                         shape_str(codes.shape()));
  }
  const std::size_t m = z.rows(), k = codes.rows(), d = z.cols();
  std::vector<double> out(m * k);
  const auto zv = z.values(), ev = codes.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = zv[i * d + c] - ev[j * d + c];
        s += diff * diff;
      }
      out[i * k + j] = s;
    }
  return make_result(Shape{m, k}, std::move(out), {z, codes}, [m, k, d](Node& self) {
    auto& pz = *self.parents[0];
    auto& pe = *self.parents[1];
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        const double g = 2.0 * self.grad[i * k + j];
        if (g == 0.0) continue;
        for (std::size_t c = 0; c < d; ++c) {
          const double diff = pz.value[i * d + c] - pe.value[j * d + c];
          if (pz.requires_grad) pz.grad_buffer()[i * d + c] += g * diff;
          if (pe.requires_grad) pe.grad_buffer()[j * d + c] -= g * diff;
        }
      }
  });
}

}  // namespace vqel::num
