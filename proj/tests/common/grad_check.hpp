#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <unordered_set>
#include <vector>

#include "rforge/nn/tensor.hpp"

namespace rforge::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t probes = 0;
  // Probes moved off a point where the loss is not differentiable at scale h.
  std::size_t relocated = 0;
  // Probes still straddling a kink after the last relocation attempt.
  std::size_t unresolved = 0;
  // Location and values of the worst probe.
  std::size_t worst_leaf = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Branch quantities of a tape: every value and, for two-input nodes of
// matching size, the input difference. selu, min, max and the dual-clip floor
// change slope exactly where one of these crosses zero.
inline std::vector<double> branch_values(const nn::Tensor& loss) {
  std::vector<const nn::Node*> order;
  std::unordered_set<const nn::Node*> seen;
  std::vector<const nn::Node*> stack{loss.node().get()};
  while (!stack.empty()) {
    const nn::Node* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    order.push_back(n);
    for (const auto& p : n->parents) stack.push_back(p.get());
  }
  std::vector<double> out;
  for (const nn::Node* n : order) {
    out.insert(out.end(), n->value.begin(), n->value.end());
    if (n->parents.size() == 2 && n->parents[0]->value.size() == n->value.size() &&
        n->parents[1]->value.size() == n->value.size()) {
      for (std::size_t i = 0; i < n->value.size(); ++i) {
        out.push_back(n->parents[0]->value[i] - n->parents[1]->value[i]);
      }
    }
  }
  return out;
}

// True when some branch quantity changes sign between the two tapes. Values
// within round-off of zero on both sides do not count.
inline bool crosses_branch(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] < 0.0) != (b[i] < 0.0) && std::max(std::fabs(a[i]), std::fabs(b[i])) > 1e-12) return true;
  }
  return false;
}

// Ridders' extrapolation of a difference quotient d(step) to step -> 0.
inline double ridders(const std::function<double(double)>& d, double h, int levels = 4) {
  constexpr double con = 2.0, con2 = con * con;
  std::vector<std::vector<double>> a(levels, std::vector<double>(levels, 0.0));
  a[0][0] = d(h);
  double best = a[0][0];
  double err = INFINITY;
  for (int i = 1; i < levels; ++i) {
    h /= con;
    a[0][i] = d(h);
    double fac = con2;
    for (int j = 1; j <= i; ++j) {
      a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
      fac *= con2;
      const double e = std::max(std::fabs(a[j][i] - a[j - 1][i]), std::fabs(a[j][i] - a[j - 1][i - 1]));
      if (e <= err) {
        err = e;
        best = a[j][i];
      }
    }
    if (std::fabs(a[i][i] - a[i - 1][i - 1]) >= 2.0 * err) break;
  }
  return best;
}

// Finite differences against backward() on `leaves`. Up to `max_probes`
// scalar entries are drawn at random across all leaves; with per_leaf > 0
// every leaf contributes up to per_leaf probes instead. Relative error is
// |analytic - numeric| / max(|analytic|, |numeric|, floor), the floor keeping
// near-zero gradients from dividing by round-off.
//
// The numeric value comes from Ridders' extrapolation of central differences
// with steps h, h/2, h/4, ..., keeping the entry of the tableau with the
// smallest error estimate. That balances truncation on strongly curved losses
// against round-off on tiny gradients. It only measures the derivative when the
// loss is smooth on [x - h, x + h].
// If the branch pattern differs across that interval the probed entry is
// shifted by a small random offset, the analytic gradient recomputed and the
// probe repeated.
inline GradCheckResult grad_check(const std::vector<nn::Tensor>& leaves,
                                  const std::function<nn::Tensor()>& loss_fn,
                                  std::size_t max_probes, std::mt19937_64& rng,
                                  std::size_t per_leaf = 0, double h = 1e-5, double floor = 1e-6) {
  auto analytic_grads = [&] {
    for (nn::Tensor t : leaves) t.zero_grad();
    nn::backward(loss_fn());
  };
  analytic_grads();
  std::vector<std::pair<std::size_t, std::size_t>> slots;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    std::vector<std::pair<std::size_t, std::size_t>> own;
    for (std::size_t i = 0; i < leaves[l].size(); ++i) own.emplace_back(l, i);
    if (per_leaf > 0) {
      std::shuffle(own.begin(), own.end(), rng);
      if (own.size() > per_leaf) own.resize(per_leaf);
    }
    slots.insert(slots.end(), own.begin(), own.end());
  }
  if (per_leaf == 0) {
    std::shuffle(slots.begin(), slots.end(), rng);
    if (slots.size() > max_probes) slots.resize(max_probes);
  }

  GradCheckResult out;
  std::uniform_real_distribution<double> shift(-20.0 * h, 20.0 * h);
  for (auto [l, i] : slots) {
    nn::Tensor t = leaves[l];
    double& x = t.mutable_values()[i];
    double numeric = 0.0;
    for (int attempt = 0;; ++attempt) {
      const double saved = x;
      auto at = [&](double offset) {
        x = saved + offset;
        nn::Tensor v = loss_fn();
        x = saved;
        return v;
      };
      const nn::Tensor mid = loss_fn();
      const nn::Tensor hi = at(h);
      const nn::Tensor lo = at(-h);
      const auto base = branch_values(mid);
      const bool smooth = !crosses_branch(base, branch_values(hi)) && !crosses_branch(base, branch_values(lo));
      if (smooth || attempt == 20) {
        if (!smooth) ++out.unresolved;
        const double first = (hi.item() - lo.item()) / (2.0 * h);
        numeric = ridders([&](double step) {
          return step == h ? first : (at(step).item() - at(-step).item()) / (2.0 * step);
        }, h);
        break;
      }
      ++out.relocated;
      x = saved + shift(rng);
      analytic_grads();
    }
    const auto grad = t.grad();
    const double analytic = grad.empty() ? 0.0 : grad[i];
    const double denom = std::max({std::fabs(analytic), std::fabs(numeric), floor});
    const double err = std::fabs(analytic - numeric) / denom;
    if (err > out.max_rel_error) {
      out.max_rel_error = err;
      out.worst_leaf = l;
      out.worst_index = i;
      out.worst_analytic = analytic;
      out.worst_numeric = numeric;
    }
    ++out.probes;
  }
  return out;
}

}  // namespace rforge::testing
