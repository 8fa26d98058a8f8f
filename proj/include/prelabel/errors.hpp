#pragma once

#include <stdexcept>
#include <string>

namespace prelabel {

/// Caller supplied something the operation cannot accept (bad image, bad range, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A named entity does not exist.
class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniqueness or state conflict (duplicate project name, concurrent job, ...).
class ConflictError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An external inference backend could not be reached or answered garbage.
/// Kept distinct from an empty result so callers never confuse the two.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed dataset file. `where` carries a file name plus line/element.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

}  // namespace prelabel
