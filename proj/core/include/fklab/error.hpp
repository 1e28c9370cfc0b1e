#pragma once
#include <stdexcept>
#include <string>

namespace fklab {

enum class ErrorKind {
  Domain,
  Range,
  Type,
  Parameter,
  Precondition,
  Unsupported,
  UnboundedInverse,
  CriterionInapplicable,
  SlicingInapplicable,
  Assembly,
  Solver,
  InsufficientData,
  Config,
  Usage,
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace fklab
