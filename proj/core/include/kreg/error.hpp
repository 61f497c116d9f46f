#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace kreg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents. `offset()` is the byte position where decoding failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Sample locations fall outside the band a transform can represent.
class OutOfBandError : public Error {
 public:
  OutOfBandError(const std::string& what, std::size_t count)
      : Error(what + " (" + std::to_string(count) + " locations out of band)"), count_(count) {}
  std::size_t count() const noexcept { return count_; }

 private:
  std::size_t count_;
};

/// No sample survived the registration transform.
class EmptyCoverageError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace kreg
