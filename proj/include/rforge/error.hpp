#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rforge {

// Base of every error raised by the library. The CLI maps the category to an
// exit code (data errors -> 2, numeric/training errors -> 3).
class Error : public std::runtime_error {
 public:
  enum class Category { kData, kNumeric };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& what)
      : Error(Category::kData, "parameter error: " + what) {}
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(Category::kData,
              "parse error at line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SamplingError : public Error {
 public:
  explicit SamplingError(const std::string& what)
      : Error(Category::kData, "sampling error: " + what) {}
};

// Raised for invalid rewiring actions; `constraint()` names the violated rule.
class FeasibilityError : public Error {
 public:
  FeasibilityError(const std::string& constraint, const std::string& detail)
      : Error(Category::kData, "infeasible rewiring (" + constraint + "): " + detail),
        constraint_(constraint) {}

  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string constraint_;
};

class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what)
      : Error(Category::kData, "contract violation: " + what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what)
      : Error(Category::kNumeric, "shape error: " + what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what)
      : Error(Category::kNumeric, "numeric error: " + what) {}
};

class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what)
      : Error(Category::kNumeric, "training error: " + what) {}
};

}  // namespace rforge
