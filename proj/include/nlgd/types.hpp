#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace nlgd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Base for all library errors; callers that don't care about the category
// can catch this one.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class NotPositiveSemidefinite : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class DisconnectedGraph : public Error {
 public:
  DisconnectedGraph(std::size_t components, const std::string& what)
      : Error(what), components_(components) {}
  std::size_t components() const noexcept { return components_; }

 private:
  std::size_t components_;
};

class InfeasibleStart : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace nlgd
