#include "rforge/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "rforge/error.hpp"

namespace rforge::spectral {

namespace {

constexpr int kMaxQlIterations = 60;

double signed_magnitude(double magnitude, double sign_of) {
  return sign_of >= 0.0 ? std::fabs(magnitude) : -std::fabs(magnitude);
}

}  // namespace

std::vector<double> tridiagonal_eigen(std::vector<double> d, std::vector<double> sub,
                                      std::vector<double>* vectors) {
  const std::size_t n = d.size();
  if (n == 0) return {};
  if (sub.size() + 1 != n) throw ContractError("off-diagonal must have n-1 entries");
  std::vector<double> e(n, 0.0);
  std::copy(sub.begin(), sub.end(), e.begin());

  std::vector<double> z;
  if (vectors) {
    z.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) z[i * n + i] = 1.0;
  }

  for (std::size_t l = 0; l < n; ++l) {
    int iter = 0;
    std::size_t m;
    do {
      for (m = l; m + 1 < n; ++m) {
        const double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
        if (std::fabs(e[m]) + dd == dd) break;
      }
      if (m == l) break;
      if (iter++ == kMaxQlIterations) {
        throw NumericError("tridiagonal QL did not converge");
      }
      double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
      double r = std::hypot(g, 1.0);
      g = d[m] - d[l] + e[l] / (g + signed_magnitude(r, g));
      double s = 1.0, c = 1.0, p = 0.0;
      bool underflow = false;
      for (std::size_t ii = m; ii-- > l;) {
        const double f = s * e[ii];
        const double b = c * e[ii];
        r = std::hypot(f, g);
        e[ii + 1] = r;
        if (r == 0.0) {
          d[ii + 1] -= p;
          e[m] = 0.0;
          underflow = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = d[ii + 1] - p;
        r = (d[ii] - g) * s + 2.0 * c * b;
        p = s * r;
        d[ii + 1] = g + p;
        g = c * r - b;
        if (vectors) {
          for (std::size_t k = 0; k < n; ++k) {
            const double t = z[k * n + ii + 1];
            z[k * n + ii + 1] = s * z[k * n + ii] + c * t;
            z[k * n + ii] = c * z[k * n + ii] - s * t;
          }
        }
      }
      if (underflow) continue;
      d[l] -= p;
      e[l] = g;
      e[m] = 0.0;
    } while (m != l);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  std::vector<double> values(n);
  for (std::size_t k = 0; k < n; ++k) values[k] = d[order[k]];
  if (vectors) {
    vectors->assign(n * n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t row = 0; row < n; ++row) (*vectors)[row * n + k] = z[row * n + order[k]];
    }
  }
  return values;
}

std::vector<double> symmetric_eigenvalues(std::vector<double> a, std::size_t n) {
  if (a.size() != n * n) throw ContractError("matrix size does not match n*n");
  if (n == 0) return {};
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };

  std::vector<double> d(n, 0.0), e(n, 0.0);
  // Householder reduction, eliminating row i left of the subdiagonal.
  for (std::size_t i = n - 1; i >= 1; --i) {
    const std::size_t l = i - 1;
    double h = 0.0;
    if (l > 0) {
      double scale = 0.0;
      for (std::size_t k = 0; k <= l; ++k) scale += std::fabs(at(i, k));
      if (scale == 0.0) {
        e[i] = at(i, l);
      } else {
        for (std::size_t k = 0; k <= l; ++k) {
          at(i, k) /= scale;
          h += at(i, k) * at(i, k);
        }
        double f = at(i, l);
        double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
        e[i] = scale * g;
        h -= f * g;
        at(i, l) = f - g;
        f = 0.0;
        for (std::size_t j = 0; j <= l; ++j) {
          g = 0.0;
          for (std::size_t k = 0; k <= j; ++k) g += at(j, k) * at(i, k);
          for (std::size_t k = j + 1; k <= l; ++k) g += at(k, j) * at(i, k);
          e[j] = g / h;
          f += e[j] * at(i, j);
        }
        const double hh = f / (h + h);
        for (std::size_t j = 0; j <= l; ++j) {
          f = at(i, j);
          g = e[j] - hh * f;
          e[j] = g;
          for (std::size_t k = 0; k <= j; ++k) at(j, k) -= f * e[k] + g * at(i, k);
        }
      }
    } else {
      e[i] = at(i, l);
    }
    d[i] = h;
  }
  for (std::size_t i = 0; i < n; ++i) d[i] = at(i, i);
  // e[i] couples rows i-1 and i; shift into the n-1 subdiagonal layout.
  std::vector<double> sub(e.begin() + 1, e.end());
  return tridiagonal_eigen(std::move(d), std::move(sub));
}

double lanczos_extreme(std::size_t n, const MatVec& apply, bool largest,
                       std::span<const std::vector<double>> deflate, double tolerance) {
  if (n == 0) throw ContractError("empty operator");
  const std::size_t max_dim = n - std::min(n - 1, deflate.size());

  auto dot = [n](const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
  };
  auto project_out = [&](std::vector<double>& v, const std::vector<double>& u) {
    const double c = dot(v, u);
    for (std::size_t i = 0; i < n; ++i) v[i] -= c * u[i];
  };

  std::vector<std::vector<double>> basis;
  std::vector<double> alpha, beta;
  std::mt19937_64 rng(0x5eed5eedULL);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = uni(rng);
  for (const auto& u : deflate) project_out(v, u);
  double norm = std::sqrt(dot(v, v));
  if (norm == 0.0) throw NumericError("Lanczos start vector vanished after deflation");
  for (double& x : v) x /= norm;

  std::vector<double> w(n);
  double theta = 0.0;
  for (std::size_t j = 0; j < max_dim; ++j) {
    basis.push_back(v);
    apply(basis.back(), w);
    const double a = dot(w, basis.back());
    alpha.push_back(a);
    // Full reorthogonalization, done twice for stability.
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& u : deflate) project_out(w, u);
      for (const auto& q : basis) project_out(w, q);
    }
    const double b = std::sqrt(dot(w, w));

    const bool check = (j + 1) % 5 == 0 || j + 1 == max_dim || b < 1e-14;
    if (check) {
      std::vector<double> vecs;
      const std::vector<double> ritz = tridiagonal_eigen(alpha, beta, &vecs);
      const std::size_t k = alpha.size();
      const std::size_t idx = largest ? k - 1 : 0;
      theta = ritz[idx];
      const double residual = b * std::fabs(vecs[(k - 1) * k + idx]);
      if (residual <= tolerance * std::max(1.0, std::fabs(theta)) || j + 1 == max_dim ||
          b < 1e-14) {
        return theta;
      }
    }
    beta.push_back(b);
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / b;
  }
  throw NumericError("Lanczos did not converge");
}

}  // namespace rforge::spectral
