#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pnr {

/// Precondition violations: bad arguments, out-of-range indices, invalid configs.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Base for data-dependent failures raised by the analysis stages.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class EmptyResult : public Error {
public:
  using Error::Error;
};

class InsufficientData : public Error {
public:
  using Error::Error;
};

class DegenerateData : public Error {
public:
  using Error::Error;
};

/// Threshold never crossed (threshold at or above the trace peak).
class NoCrossing : public Error {
public:
  using Error::Error;
};

/// Count rate at or above the repetition rate.
class SaturationError : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  ParseError(const std::string& what, std::uint64_t byte_offset)
      : Error(what + " (at byte offset " + std::to_string(byte_offset) + ")"),
        offset_(byte_offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

private:
  std::uint64_t offset_;
};

}  // namespace pnr
