#pragma once

#include <stdexcept>
#include <string>

namespace grpss {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidParameter : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct NonFiniteInput : Error {
  using Error::Error;
};

struct IndexOutOfRange : Error {
  using Error::Error;
};

struct NotPositiveDefinite : Error {
  using Error::Error;
};

struct EmptyGroup : Error {
  using Error::Error;
};

struct RankDeficient : Error {
  using Error::Error;
};

struct MaxIterationsExceeded : Error {
  using Error::Error;
};

struct InsufficientData : Error {
  using Error::Error;
};

struct InsufficientReplications : Error {
  using Error::Error;
};

struct DegenerateEstimate : Error {
  using Error::Error;
};

struct SingularCovariance : Error {
  using Error::Error;
};

struct EmptyChain : Error {
  using Error::Error;
};

struct UnknownMethod : Error {
  using Error::Error;
};

struct UnknownExample : Error {
  using Error::Error;
};

// 1-based row/column of the offending cell
struct ParseError : Error {
  ParseError(std::size_t row, std::size_t col, const std::string& what)
      : Error("parse error at row " + std::to_string(row) + ", col " + std::to_string(col) + ": " + what),
        row(row),
        col(col) {}
  std::size_t row, col;
};

struct MissingValue : ParseError {
  MissingValue(std::size_t row, std::size_t col) : ParseError(row, col, "missing value") {}
};

}  // namespace grpss
