#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace esisig {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input is not well-formed namespace-aware XML.
class WellFormednessError : public Error {
 public:
  WellFormednessError(const std::string& message, std::uint64_t line, std::uint64_t column,
                      std::int64_t byte_offset)
      : Error(message + " at line " + std::to_string(line) + ", column " + std::to_string(column)),
        line_(line),
        column_(column),
        byte_offset_(byte_offset) {}

  std::uint64_t line() const noexcept { return line_; }
  std::uint64_t column() const noexcept { return column_; }
  std::int64_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::uint64_t line_;
  std::uint64_t column_;
  std::int64_t byte_offset_;
};

class EncodingError : public Error {
 public:
  using Error::Error;
};

// Unbalanced or mismatched element records fed to the normalizer.
class NestingError : public Error {
 public:
  using Error::Error;
};

class MalformedBlobError : public Error {
 public:
  using Error::Error;
};

class MalformedPIError : public Error {
 public:
  using Error::Error;
};

class UnsupportedAlgorithm : public Error {
 public:
  using Error::Error;
};

class SignerFailure : public Error {
 public:
  using Error::Error;
};

// Document cannot be signed with the requested placement/target combination.
class SigningError : public Error {
 public:
  using Error::Error;
};

// A result was requested before the end of the document was seen.
class NotFinished : public Error {
 public:
  using Error::Error;
};

// A corpus mutation was requested on a document lacking the feature it edits.
class NotApplicable : public Error {
 public:
  using Error::Error;
};

}  // namespace esisig
