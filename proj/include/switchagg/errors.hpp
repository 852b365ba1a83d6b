// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace switchagg {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// wire
// ---------------------------------------------------------------------------

class OversizeError : public Error {
 public:
  OversizeError(std::size_t size, std::size_t mtu)
      : Error("encoded packet of " + std::to_string(size) +
              " bytes exceeds MTU " + std::to_string(mtu)),
        size_(size),
        mtu_(mtu) {}
  std::size_t size() const noexcept { return size_; }
  std::size_t mtu() const noexcept { return mtu_; }

 private:
  std::size_t size_;
  std::size_t mtu_;
};

class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Base for malformed-input errors; `offset()` is the byte position of the
/// field that could not be decoded.
class DecodeError : public Error {
 public:
  DecodeError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class TruncatedError : public DecodeError {
 public:
  using DecodeError::DecodeError;
};

class UnknownTypeError : public DecodeError {
 public:
  using DecodeError::DecodeError;
};

class LengthMismatchError : public DecodeError {
 public:
  using DecodeError::DecodeError;
};

// ---------------------------------------------------------------------------
// dataplane
// ---------------------------------------------------------------------------

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DuplicateTreeError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class KeyTooLongError : public Error {
 public:
  using Error::Error;
};

class UnknownTreeError : public Error {
 public:
  using Error::Error;
};

class NoRouteError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// engines
// ---------------------------------------------------------------------------

class RegionUnallocatedError : public Error {
 public:
  using Error::Error;
};

class PrematureFlushError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// controller
// ---------------------------------------------------------------------------

class DisconnectedError : public Error {
 public:
  using Error::Error;
};

class ConfigTimeoutError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// analytics / workload / harness
// ---------------------------------------------------------------------------

class DomainError : public Error {
 public:
  using Error::Error;
};

class SpecError : public Error {
 public:
  using Error::Error;
};

class PairTooLargeError : public Error {
 public:
  using Error::Error;
};

class NotLaunchedError : public Error {
 public:
  using Error::Error;
};

}  // namespace switchagg
