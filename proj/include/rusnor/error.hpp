#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace rusnor {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed JSON input. `offset()` is the byte position reported by the parser.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// A record violates its schema or an invariant of its type.
class ValidationError : public Error {
 public:
  ValidationError(std::size_t index, std::string field, const std::string& message)
      : Error("record " + std::to_string(index) + ", field '" + field + "': " + message),
        index_(index),
        field_(std::move(field)) {}

  std::size_t index() const noexcept { return index_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t index_;
  std::string field_;
};

/// Two records share a key that must be unique.
class DuplicateEntryError : public Error {
 public:
  DuplicateEntryError(std::size_t first, std::size_t second, const std::string& key)
      : Error("records " + std::to_string(first) + " and " + std::to_string(second) +
              " share the key " + key),
        first_(first),
        second_(second) {}

  std::size_t first_index() const noexcept { return first_; }
  std::size_t second_index() const noexcept { return second_; }

 private:
  std::size_t first_;
  std::size_t second_;
};

/// Caller passed an argument outside the operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace rusnor
