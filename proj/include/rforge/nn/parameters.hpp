#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "rforge/nn/tensor.hpp"

namespace rforge::nn {

struct NamedParameter {
  std::string name;
  Tensor tensor;
};

// Ordered collection of trainable leaf tensors. Order is insertion order and
// fixes the layout of optimizer state and checkpoints.
class ParameterSet {
 public:
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
  Tensor add_uniform(const std::string& name, std::size_t rows, std::size_t cols,
                     std::size_t fan_in, std::mt19937_64& rng);
  Tensor add_filled(const std::string& name, std::size_t rows, std::size_t cols, double value);

  const std::vector<NamedParameter>& entries() const { return entries_; }
  std::vector<NamedParameter>& entries() { return entries_; }
  const Tensor& get(const std::string& name) const;
  std::size_t scalar_count() const;

  void zero_grad();
  // Copies values from another set with the same names and shapes.
  void copy_values_from(const ParameterSet& other);
  // Plain copies of every value array, for keeping the best weights seen.
  std::vector<std::vector<double>> snapshot() const;
  void restore(const std::vector<std::vector<double>>& values);
  // Global L2 gradient norm; missing gradients count as zero.
  double grad_norm() const;
  // Rescales gradients so their global norm is at most max_norm.
  double clip_grad_norm(double max_norm);

 private:
  Tensor& insert(const std::string& name, Tensor t);
  std::vector<NamedParameter> entries_;
};

}  // namespace rforge::nn
