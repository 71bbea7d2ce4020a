#include "rforge/nn/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rforge/error.hpp"

namespace rforge::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

std::string shape_of(const Tensor& t) {
  return "[" + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) + "]";
}

[[noreturn]] void shape_mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_of(a) + " and " +
                   shape_of(b));
}

ConstMap view(const Node& n) { return ConstMap(n.value.data(), n.rows, n.cols); }

enum class Broadcast { kSame, kRow, kScalar };

Broadcast broadcast_kind(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::kSame;
  if (b.rows() == 1 && b.cols() == 1) return Broadcast::kScalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::kRow;
  shape_mismatch(op, a, b);
}

// Calls body(i, j) for every element i of a and its broadcast partner j in b.
template <typename Body>
void broadcast_loop(Broadcast k, std::size_t size, std::size_t cols, Body body) {
  switch (k) {
    case Broadcast::kSame:
      for (std::size_t i = 0; i < size; ++i) body(i, i);
      break;
    case Broadcast::kRow:
      for (std::size_t r = 0; r * cols < size; ++r) {
        for (std::size_t c = 0; c < cols; ++c) body(r * cols + c, c);
      }
      break;
    case Broadcast::kScalar:
      for (std::size_t i = 0; i < size; ++i) body(i, 0);
      break;
  }
}

template <typename F, typename D>
Tensor unary(const Tensor& a, F f, D dfdx) {
  std::vector<double> out(a.size());
  const auto in = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return make_result(a.rows(), a.cols(), std::move(out), {a.node()}, [dfdx](Node& self) {
    Node& p = *self.parents[0];
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.grad[i] * dfdx(p.value[i], self.value[i]);
    }
  });
}

constexpr double kSeluScale = 1.0507009873554804934193349852946;
constexpr double kSeluAlpha = 1.6732632423543772848170429916717;

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) shape_mismatch("matmul", a, b);
  std::vector<double> out(a.rows() * b.cols());
  MutMap(out.data(), a.rows(), b.cols()).noalias() = view(*a.node()) * view(*b.node());
  return make_result(a.rows(), b.cols(), std::move(out), {a.node(), b.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    const ConstMap dc(self.grad.data(), self.rows, self.cols);
    if (pa.requires_grad) {
      MutMap(pa.ensure_grad().data(), pa.rows, pa.cols).noalias() += dc * view(pb).transpose();
    }
    if (pb.requires_grad) {
      MutMap(pb.ensure_grad().data(), pb.rows, pb.cols).noalias() += view(pa).transpose() * dc;
    }
  });
}

namespace {

// out = a (op) b with broadcasting; da/db given as coefficient callbacks.
template <typename F, typename DA, typename DB>
Tensor binary(const char* name, const Tensor& a, const Tensor& b, F f, DA dfa, DB dfb) {
  const Broadcast kind = broadcast_kind(name, a, b);
  const std::size_t cols = a.cols();
  std::vector<double> out(a.size());
  const auto av = a.values();
  const auto bv = b.values();
  broadcast_loop(kind, out.size(), cols, [&](std::size_t i, std::size_t j) { out[i] = f(av[i], bv[j]); });
  return make_result(a.rows(), a.cols(), std::move(out), {a.node(), b.node()},
                     [kind, cols, dfa, dfb](Node& self) {
                       Node& pa = *self.parents[0];
                       Node& pb = *self.parents[1];
                       if (pa.requires_grad) {
                         auto& g = pa.ensure_grad();
                         broadcast_loop(kind, g.size(), cols, [&](std::size_t i, std::size_t j) {
                           g[i] += self.grad[i] * dfa(pa.value[i], pb.value[j]);
                         });
                       }
                       if (pb.requires_grad) {
                         auto& g = pb.ensure_grad();
                         broadcast_loop(kind, self.grad.size(), cols, [&](std::size_t i, std::size_t j) {
                           g[j] += self.grad[i] * dfb(pa.value[i], pb.value[j]);
                         });
                       }
                     });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor minimum(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_mismatch("minimum", a, b);
  return binary(
      "minimum", a, b, [](double x, double y) { return x <= y ? x : y; },
      [](double x, double y) { return x <= y ? 1.0 : 0.0; },
      [](double x, double y) { return x <= y ? 0.0 : 1.0; });
}

Tensor maximum(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_mismatch("maximum", a, b);
  return binary(
      "maximum", a, b, [](double x, double y) { return x >= y ? x : y; },
      [](double x, double y) { return x >= y ? 1.0 : 0.0; },
      [](double x, double y) { return x >= y ? 0.0 : 1.0; });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(
      a, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double offset) {
  return unary(
      a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Tensor selu(const Tensor& a) {
  return unary(
      a,
      [](double x) { return x > 0.0 ? kSeluScale * x : kSeluScale * kSeluAlpha * std::expm1(x); },
      [](double x, double) { return x > 0.0 ? kSeluScale : kSeluScale * kSeluAlpha * std::exp(x); });
}

Tensor tanh(const Tensor& a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  return unary(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor log_add_exp(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_mismatch("log_add_exp", a, b);
  return binary(
      "log_add_exp", a, b,
      [](double x, double y) {
        const double m = std::max(x, y);
        if (m == -std::numeric_limits<double>::infinity()) return m;
        return m + std::log(std::exp(x - m) + std::exp(y - m));
      },
      [](double x, double y) {
        const double m = std::max(x, y);
        return std::exp(x - m) / (std::exp(x - m) + std::exp(y - m));
      },
      [](double x, double y) {
        const double m = std::max(x, y);
        return std::exp(y - m) / (std::exp(x - m) + std::exp(y - m));
      });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  return unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double x : a.values()) s += x;
  return make_result(1, 1, {s}, {a.node()}, [](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    for (double& x : g) x += self.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw ShapeError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_cols of nothing");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) shape_mismatch("concat_cols", parts[0], p);
    cols += p.cols();
  }
  std::vector<double> out(rows * cols);
  std::vector<NodePtr> parents;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(p.values().begin() + r * p.cols(), p.cols(), out.begin() + r * cols + offset);
    }
    offset += p.cols();
    parents.push_back(p.node());
  }
  return make_result(rows, cols, std::move(out), std::move(parents), [](Node& self) {
    std::size_t offset = 0;
    for (auto& parent : self.parents) {
      Node& p = *parent;
      if (p.requires_grad) {
        auto& g = p.ensure_grad();
        for (std::size_t r = 0; r < self.rows; ++r) {
          for (std::size_t c = 0; c < p.cols; ++c) g[r * p.cols + c] += self.grad[r * self.cols + offset + c];
        }
      }
      offset += p.cols;
    }
  });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_rows of nothing");
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) shape_mismatch("concat_rows", parts[0], p);
    rows += p.rows();
  }
  std::vector<double> out;
  out.reserve(rows * cols);
  std::vector<NodePtr> parents;
  for (const auto& p : parts) {
    out.insert(out.end(), p.values().begin(), p.values().end());
    parents.push_back(p.node());
  }
  return make_result(rows, cols, std::move(out), std::move(parents), [](Node& self) {
    std::size_t offset = 0;
    for (auto& parent : self.parents) {
      Node& p = *parent;
      if (p.requires_grad) {
        auto& g = p.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[offset + i];
      }
      offset += p.value.size();
    }
  });
}

Tensor gather_rows(const Tensor& a, std::span<const int> index) {
  const std::size_t cols = a.cols();
  std::vector<double> out(index.size() * cols, 0.0);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0) continue;
    if (static_cast<std::size_t>(index[i]) >= a.rows()) {
      throw ShapeError("gather_rows: index " + std::to_string(index[i]) + " out of range for " +
                       shape_of(a));
    }
    std::copy_n(a.values().begin() + index[i] * cols, cols, out.begin() + i * cols);
  }
  std::vector<int> idx(index.begin(), index.end());
  return make_result(index.size(), cols, std::move(out), {a.node()},
                     [idx = std::move(idx)](Node& self) {
                       auto& g = self.parents[0]->ensure_grad();
                       const std::size_t cols = self.cols;
                       for (std::size_t i = 0; i < idx.size(); ++i) {
                         if (idx[i] < 0) continue;
                         for (std::size_t c = 0; c < cols; ++c) {
                           g[idx[i] * cols + c] += self.grad[i * cols + c];
                         }
                       }
                     });
}

Tensor column(const Tensor& a, std::size_t c) {
  if (c >= a.cols()) throw ShapeError("column index out of range for " + shape_of(a));
  std::vector<double> out(a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r) out[r] = a(r, c);
  return make_result(a.rows(), 1, std::move(out), {a.node()}, [c](Node& self) {
    Node& p = *self.parents[0];
    auto& g = p.ensure_grad();
    for (std::size_t r = 0; r < self.rows; ++r) g[r * p.cols + c] += self.grad[r];
  });
}

Tensor scale_rows(const Tensor& a, const Tensor& w) {
  if (w.rows() != a.rows() || w.cols() != 1) shape_mismatch("scale_rows", a, w);
  const std::size_t cols = a.cols();
  std::vector<double> out(a.size());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double s = w.values()[r];
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = a(r, c) * s;
  }
  return make_result(a.rows(), cols, std::move(out), {a.node(), w.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pw = *self.parents[1];
    const std::size_t cols = self.cols;
    if (pa.requires_grad) {
      auto& g = pa.ensure_grad();
      for (std::size_t r = 0; r < self.rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] += self.grad[r * cols + c] * pw.value[r];
      }
    }
    if (pw.requires_grad) {
      auto& g = pw.ensure_grad();
      for (std::size_t r = 0; r < self.rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += self.grad[r * cols + c] * pa.value[r * cols + c];
        g[r] += s;
      }
    }
  });
}

Tensor masked_softmax_rows(const Tensor& logits, const std::vector<bool>& mask_in) {
  const std::size_t rows = logits.rows(), cols = logits.cols();
  if (!mask_in.empty() && mask_in.size() != logits.size()) {
    throw ShapeError("softmax mask size does not match " + shape_of(logits));
  }
  std::vector<bool> keep(logits.size(), true);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    keep[i] = (mask_in.empty() || mask_in[i]) &&
              logits.values()[i] != -std::numeric_limits<double>::infinity();
  }
  std::vector<double> out(logits.size(), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cols; ++c) {
      if (keep[r * cols + c]) m = std::max(m, logits(r, c));
    }
    if (m == -std::numeric_limits<double>::infinity()) continue;
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      if (keep[r * cols + c]) {
        out[r * cols + c] = std::exp(logits(r, c) - m);
        z += out[r * cols + c];
      }
    }
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] /= z;
  }
  return make_result(rows, cols, std::move(out), {logits.node()},
                     [keep = std::move(keep)](Node& self) {
                       auto& g = self.parents[0]->ensure_grad();
                       const std::size_t cols = self.cols;
                       for (std::size_t r = 0; r < self.rows; ++r) {
                         double dot = 0.0;
                         for (std::size_t c = 0; c < cols; ++c) {
                           dot += self.value[r * cols + c] * self.grad[r * cols + c];
                         }
                         for (std::size_t c = 0; c < cols; ++c) {
                           const std::size_t i = r * cols + c;
                           if (keep[i]) g[i] += self.value[i] * (self.grad[i] - dot);
                         }
                       }
                     });
}

Tensor segment_log_softmax(const Tensor& scores, std::span<const std::size_t> offsets,
                           const std::vector<bool>& mask) {
  if (scores.cols() != 1) throw ShapeError("segment_log_softmax needs a column, got " + shape_of(scores));
  if (mask.size() != scores.rows()) throw ShapeError("segment_log_softmax mask size mismatch");
  if (offsets.empty() || offsets.back() != scores.rows()) {
    throw ShapeError("segment offsets do not cover " + shape_of(scores));
  }
  const auto s = scores.values();
  std::vector<double> out(scores.rows(), 0.0);
  std::vector<double> probs(scores.rows(), 0.0);
  for (std::size_t seg = 0; seg + 1 < offsets.size(); ++seg) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = offsets[seg]; i < offsets[seg + 1]; ++i) {
      if (mask[i]) m = std::max(m, s[i]);
    }
    if (m == -std::numeric_limits<double>::infinity()) continue;
    double z = 0.0;
    for (std::size_t i = offsets[seg]; i < offsets[seg + 1]; ++i) {
      if (mask[i]) z += std::exp(s[i] - m);
    }
    const double lse = m + std::log(z);
    for (std::size_t i = offsets[seg]; i < offsets[seg + 1]; ++i) {
      if (mask[i]) {
        out[i] = s[i] - lse;
        probs[i] = std::exp(out[i]);
      }
    }
  }
  std::vector<std::size_t> offs(offsets.begin(), offsets.end());
  return make_result(
      scores.rows(), 1, std::move(out), {scores.node()},
      [offs = std::move(offs), mask, probs = std::move(probs)](Node& self) {
        auto& g = self.parents[0]->ensure_grad();
        for (std::size_t seg = 0; seg + 1 < offs.size(); ++seg) {
          double total = 0.0;
          for (std::size_t i = offs[seg]; i < offs[seg + 1]; ++i) {
            if (mask[i]) total += self.grad[i];
          }
          for (std::size_t i = offs[seg]; i < offs[seg + 1]; ++i) {
            if (mask[i]) g[i] += self.grad[i] - probs[i] * total;
          }
        }
      });
}

Tensor segment_sum(const Tensor& a, std::span<const std::size_t> offsets) {
  if (offsets.empty() || offsets.back() != a.rows()) {
    throw ShapeError("segment offsets do not cover " + shape_of(a));
  }
  const std::size_t segs = offsets.size() - 1, cols = a.cols();
  std::vector<double> out(segs * cols, 0.0);
  for (std::size_t s = 0; s < segs; ++s) {
    for (std::size_t r = offsets[s]; r < offsets[s + 1]; ++r) {
      for (std::size_t c = 0; c < cols; ++c) out[s * cols + c] += a(r, c);
    }
  }
  std::vector<std::size_t> offs(offsets.begin(), offsets.end());
  return make_result(segs, cols, std::move(out), {a.node()}, [offs = std::move(offs)](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    const std::size_t cols = self.cols;
    for (std::size_t s = 0; s + 1 < offs.size(); ++s) {
      for (std::size_t r = offs[s]; r < offs[s + 1]; ++r) {
        for (std::size_t c = 0; c < cols; ++c) g[r * cols + c] += self.grad[s * cols + c];
      }
    }
  });
}

Tensor pool_mean(const Tensor& a, const std::vector<std::vector<int>>& groups) {
  const std::size_t cols = a.cols();
  std::vector<double> out(groups.size() * cols, 0.0);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) continue;
    for (int r : groups[g]) {
      for (std::size_t c = 0; c < cols; ++c) out[g * cols + c] += a(r, c);
    }
    const double inv = 1.0 / static_cast<double>(groups[g].size());
    for (std::size_t c = 0; c < cols; ++c) out[g * cols + c] *= inv;
  }
  return make_result(groups.size(), cols, std::move(out), {a.node()}, [groups](Node& self) {
    auto& grad = self.parents[0]->ensure_grad();
    const std::size_t cols = self.cols;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (groups[g].empty()) continue;
      const double inv = 1.0 / static_cast<double>(groups[g].size());
      for (int r : groups[g]) {
        for (std::size_t c = 0; c < cols; ++c) grad[r * cols + c] += self.grad[g * cols + c] * inv;
      }
    }
  });
}

Tensor sparse_sum(const std::shared_ptr<const SparsePattern>& pattern, const Tensor& a) {
  const std::size_t rows = pattern->offsets.size() - 1, cols = a.cols();
  std::vector<double> out(rows * cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double* dst = out.data() + r * cols;
    for (std::size_t k = pattern->offsets[r]; k < pattern->offsets[r + 1]; ++k) {
      const double* src = a.values().data() + pattern->columns[k] * cols;
      for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
    }
  }
  return make_result(rows, cols, std::move(out), {a.node()}, [pattern](Node& self) {
    auto& g = self.parents[0]->ensure_grad();
    const std::size_t cols = self.cols;
    for (std::size_t r = 0; r + 1 < pattern->offsets.size(); ++r) {
      const double* src = self.grad.data() + r * cols;
      for (std::size_t k = pattern->offsets[r]; k < pattern->offsets[r + 1]; ++k) {
        double* dst = g.data() + pattern->columns[k] * cols;
        for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
      }
    }
  });
}

Tensor graph_norm(const Tensor& x, std::span<const std::size_t> offsets, const Tensor& gain,
                  const Tensor& bias, const Tensor& shift) {
  const std::size_t cols = x.cols();
  for (const Tensor* p : {&gain, &bias, &shift}) {
    if (p->rows() != 1 || p->cols() != cols) shape_mismatch("graph_norm", x, *p);
  }
  if (offsets.empty() || offsets.back() != x.rows()) {
    throw ShapeError("graph_norm segments do not cover " + shape_of(x));
  }
  const std::size_t segs = offsets.size() - 1;
  const auto xv = x.values();
  const auto gv = gain.values();
  const auto bv = bias.values();
  const auto sv = shift.values();
  std::vector<double> normalized(x.size(), 0.0);  // z / sigma
  std::vector<double> means(segs * cols, 0.0), inv_sigma(segs * cols, 0.0);
  std::vector<double> out(x.size(), 0.0);
  std::vector<double> centre(cols), var(cols);
  for (std::size_t s = 0; s < segs; ++s) {
    const std::size_t begin = offsets[s], end = offsets[s + 1];
    if (begin == end) continue;
    const double n = static_cast<double>(end - begin);
    double* mu = &means[s * cols];
    double* inv = &inv_sigma[s * cols];
    for (std::size_t r = begin; r < end; ++r) {
      for (std::size_t c = 0; c < cols; ++c) mu[c] += xv[r * cols + c];
    }
    for (std::size_t c = 0; c < cols; ++c) {
      mu[c] /= n;
      centre[c] = sv[c] * mu[c];
      var[c] = 0.0;
    }
    for (std::size_t r = begin; r < end; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const double z = xv[r * cols + c] - centre[c];
        var[c] += z * z;
      }
    }
    for (std::size_t c = 0; c < cols; ++c) inv[c] = 1.0 / std::sqrt(var[c] / n + kGraphNormEpsilon);
    for (std::size_t r = begin; r < end; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const double xhat = (xv[r * cols + c] - centre[c]) * inv[c];
        normalized[r * cols + c] = xhat;
        out[r * cols + c] = gv[c] * xhat + bv[c];
      }
    }
  }
  std::vector<std::size_t> offs(offsets.begin(), offsets.end());
  return make_result(
      x.rows(), cols, std::move(out), {x.node(), gain.node(), bias.node(), shift.node()},
      [offs = std::move(offs), normalized = std::move(normalized), means = std::move(means),
       inv_sigma = std::move(inv_sigma)](Node& self) {
        Node& px = *self.parents[0];
        Node& pg = *self.parents[1];
        Node& pb = *self.parents[2];
        Node& ps = *self.parents[3];
        const std::size_t cols = self.cols;
        std::vector<double> sum_dy(cols), sum_dy_xhat(cols), sum_xhat(cols), scale(cols), sum_dz(cols);
        for (std::size_t s = 0; s + 1 < offs.size(); ++s) {
          const std::size_t begin = offs[s], end = offs[s + 1];
          if (begin == end) continue;
          const double n = static_cast<double>(end - begin);
          std::fill(sum_dy.begin(), sum_dy.end(), 0.0);
          std::fill(sum_dy_xhat.begin(), sum_dy_xhat.end(), 0.0);
          std::fill(sum_xhat.begin(), sum_xhat.end(), 0.0);
          for (std::size_t r = begin; r < end; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
              const double dy = self.grad[r * cols + c];
              const double xhat = normalized[r * cols + c];
              sum_dy[c] += dy;
              sum_dy_xhat[c] += dy * xhat;
              sum_xhat[c] += xhat;
            }
          }
          if (pg.requires_grad) {
            auto& g = pg.ensure_grad();
            for (std::size_t c = 0; c < cols; ++c) g[c] += sum_dy_xhat[c];
          }
          if (pb.requires_grad) {
            auto& g = pb.ensure_grad();
            for (std::size_t c = 0; c < cols; ++c) g[c] += sum_dy[c];
          }
          // dz_i = gamma*inv*(dy_i - xhat_i * mean(dy * xhat)); z = x - shift*mu.
          for (std::size_t c = 0; c < cols; ++c) {
            scale[c] = pg.value[c] * inv_sigma[s * cols + c];
            sum_dz[c] = scale[c] * (sum_dy[c] - sum_xhat[c] * sum_dy_xhat[c] / n);
          }
          if (ps.requires_grad) {
            auto& g = ps.ensure_grad();
            for (std::size_t c = 0; c < cols; ++c) g[c] -= sum_dz[c] * means[s * cols + c];
          }
          if (px.requires_grad) {
            auto& gx = px.ensure_grad();
            for (std::size_t r = begin; r < end; ++r) {
              for (std::size_t c = 0; c < cols; ++c) {
                const double dz = scale[c] * (self.grad[r * cols + c] - normalized[r * cols + c] * sum_dy_xhat[c] / n);
                gx[r * cols + c] += dz - ps.value[c] * sum_dz[c] / n;
              }
            }
          }
        }
      });
}

}  // namespace rforge::nn
