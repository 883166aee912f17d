#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace drecon {

// Base class for every error raised by the library. The CLI maps each
// subclass to its own exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed Newick text. Carries the character offset of the problem.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : Error("offset " + std::to_string(offset) + ": " + message),
        message_(message),
        offset_(offset) {}

  std::size_t offset() const { return offset_; }
  const std::string& message() const { return message_; }

 private:
  std::string message_;
  std::size_t offset_;
};

// Missing, duplicated or dangling leaf mapping rows.
class MappingError : public Error {
 public:
  using Error::Error;
};

// The protein-gene mapping is not one-to-one where the algorithm needs it.
class BijectionError : public MappingError {
 public:
  using MappingError::MappingError;
};

// Inputs that cannot have been derived from a single tree, or otherwise
// contradict each other.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

// An exhaustive procedure was asked to run beyond its configured size cap.
class CapExceeded : public Error {
 public:
  CapExceeded(const std::string& what, std::size_t size, std::size_t cap)
      : Error(what + ": size " + std::to_string(size) + " exceeds cap " + std::to_string(cap)),
        size_(size),
        cap_(cap) {}

  std::size_t size() const { return size_; }
  std::size_t cap() const { return cap_; }

 private:
  std::size_t size_;
  std::size_t cap_;
};

}  // namespace drecon
