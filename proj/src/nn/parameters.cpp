#include "rforge/nn/parameters.hpp"

#include <algorithm>
#include <cmath>

#include "rforge/error.hpp"

namespace rforge::nn {

Tensor& ParameterSet::insert(const std::string& name, Tensor t) {
  for (const auto& e : entries_) {
    if (e.name == name) throw ContractError("duplicate parameter name " + name);
  }
  entries_.push_back({name, std::move(t)});
  return entries_.back().tensor;
}

Tensor ParameterSet::add_uniform(const std::string& name, std::size_t rows, std::size_t cols,
                                 std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> values(rows * cols);
  for (double& v : values) v = dist(rng);
  return insert(name, Tensor::leaf(rows, cols, std::move(values)));
}

Tensor ParameterSet::add_filled(const std::string& name, std::size_t rows, std::size_t cols,
                                double value) {
  return insert(name, Tensor::leaf(rows, cols, std::vector<double>(rows * cols, value)));
}

const Tensor& ParameterSet::get(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.tensor;
  }
  throw ContractError("unknown parameter " + name);
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& e : entries_) e.tensor.zero_grad();
}

void ParameterSet::copy_values_from(const ParameterSet& other) {
  if (other.entries_.size() != entries_.size()) {
    throw ContractError("parameter sets differ in size");
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& src = other.entries_[i];
    auto& dst = entries_[i];
    if (src.name != dst.name || src.tensor.shape() != dst.tensor.shape()) {
      throw ContractError("parameter mismatch at " + dst.name);
    }
    auto out = dst.tensor.mutable_values();
    std::copy(src.tensor.values().begin(), src.tensor.values().end(), out.begin());
  }
}

std::vector<std::vector<double>> ParameterSet::snapshot() const {
  std::vector<std::vector<double>> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.emplace_back(e.tensor.values().begin(), e.tensor.values().end());
  return out;
}

void ParameterSet::restore(const std::vector<std::vector<double>>& values) {
  if (values.size() != entries_.size()) throw ContractError("snapshot does not match parameter set");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto dst = entries_[i].tensor.mutable_values();
    if (values[i].size() != dst.size()) throw ContractError("snapshot shape mismatch at " + entries_[i].name);
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

double ParameterSet::grad_norm() const {
  double sq = 0.0;
  for (const auto& e : entries_) {
    for (double g : e.tensor.grad()) sq += g * g;
  }
  return std::sqrt(sq);
}

double ParameterSet::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (auto& e : entries_) {
      for (double& g : e.tensor.node()->grad) g *= factor;
    }
  }
  return norm;
}

}  // namespace rforge::nn
