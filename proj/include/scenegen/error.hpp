#pragma once

#include <stdexcept>
#include <string>

namespace scenegen {

// Base for every error the library raises on bad input or failed invariants.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// nearest_asset found nothing after applying the class/size filters.
class NoCandidateError : public Error {
 public:
  using Error::Error;
};

// A guidance potential or loss produced NaN/Inf.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  enum class Kind { kIo, kCorrupt, kVersion, kShape };
  CheckpointError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// LLM response could not be turned into parameters. Carries the raw response.
class SchemaViolation : public Error {
 public:
  SchemaViolation(const std::string& what, std::string raw)
      : Error(what), raw_(std::move(raw)) {}
  const std::string& raw_response() const { return raw_; }

 private:
  std::string raw_;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace scenegen
