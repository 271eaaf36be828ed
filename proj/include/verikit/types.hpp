#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace verikit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Label sequences use 1-based labels throughout, matching the flat label
// convention (labels run 1..K).
using LabelSeq = std::vector<int>;

inline constexpr const char* kVersion = "0.1.0";

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class LabelOutOfRange : public Error {
 public:
  using Error::Error;
};

class SingleClass : public Error {
 public:
  using Error::Error;
};

class NonpositiveTheta : public Error {
 public:
  using Error::Error;
};

class NonpositiveRho : public Error {
 public:
  using Error::Error;
};

class InvalidP : public Error {
 public:
  using Error::Error;
};

// Raised when an input admits no feasible label (or label sequence); carries
// the offending input indices so callers can report them.
class InfeasibleInput : public Error {
 public:
  InfeasibleInput(const std::string& what, std::vector<std::size_t> indices)
      : Error(what), infeasible_indices(std::move(indices)) {}
  std::vector<std::size_t> infeasible_indices;
};

// A masked score function saw a base score whose magnitude reaches the mask
// constant, so the "masked below everything" guarantee would break.
class MaskConstantViolated : public Error {
 public:
  using Error::Error;
};

class NotAChain : public Error {
 public:
  using Error::Error;
};

class TooLarge : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public ParseError {
 public:
  using ParseError::ParseError;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace verikit
