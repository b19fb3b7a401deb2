#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tensorm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Index tuple or flat offset outside the tensor extents.
class BoundsError : public Error {
  public:
    using Error::Error;
};

/// Caller supplied an argument outside the documented domain.
class ArgumentError : public Error {
  public:
    using Error::Error;
};

/// Operation invoked on an object that is not in a usable state
/// (e.g. reading a posterior summary before any sample was drawn).
class StateError : public Error {
  public:
    using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
  public:
    using Error::Error;
};

/// Malformed input. `location` names the line (text formats) or byte
/// offset (binary formats) where decoding failed.
class ParseError : public Error {
  public:
    ParseError(const std::string& what, std::string location)
        : Error(location.empty() ? what : location + ": " + what),
          location_(std::move(location)) {}

    const std::string& location() const noexcept { return location_; }

  private:
    std::string location_;
};

} // namespace tensorm
