#pragma once

#include <stdexcept>
#include <string>

namespace pixtok {

// Base for every error the library raises. The CLI maps ConfigError to exit
// code 1 and everything else to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or inconsistent configuration (bad JSON, unknown keys, out of range).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Tensor shape or dimension mismatch.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A forward op produced NaN/Inf. Carries the op name.
class NumericError : public Error {
 public:
  NumericError(std::string op, const std::string& what)
      : Error(what), op_(std::move(op)) {}
  const std::string& op() const noexcept { return op_; }

 private:
  std::string op_;
};

// Malformed file (checkpoint, dataset, permutation file). `offset` is the byte
// or line position where parsing failed, or -1 when not applicable.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, long long offset = -1)
      : Error(offset >= 0 ? what + " (at offset " + std::to_string(offset) + ")"
                          : what),
        offset_(offset) {}
  long long offset() const noexcept { return offset_; }

 private:
  long long offset_;
};

// Checkpoint contents do not match the model it is loaded into.
class CheckpointMismatch : public Error {
 public:
  CheckpointMismatch(std::string field, const std::string& what)
      : Error(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace pixtok
