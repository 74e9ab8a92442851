#pragma once

#include <stdexcept>
#include <string>

namespace spinn {

/// Base of every exception raised by the library. The category maps onto the
/// CLI exit codes: usage problems, bad input data, numerical failures.
class Error : public std::runtime_error {
 public:
  enum class Category { Usage, Data, Numerical };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(Category::Usage, what) {}
};

class IncompatibleGrid : public Error {
 public:
  explicit IncompatibleGrid(const std::string& what) : Error(Category::Data, what) {}
};

class ShapeMismatch : public Error {
 public:
  explicit ShapeMismatch(const std::string& what) : Error(Category::Data, what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(Category::Data, what) {}
};

class ZeroReference : public Error {
 public:
  explicit ZeroReference(const std::string& what) : Error(Category::Numerical, what) {}
};

class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, double best_residual)
      : Error(Category::Numerical, what), best_residual_(best_residual) {}

  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

class DivergedTraining : public Error {
 public:
  explicit DivergedTraining(const std::string& what) : Error(Category::Numerical, what) {}
};

}  // namespace spinn
