#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace compilot {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class KernelParseError : public Error {
 public:
  KernelParseError(const std::string& message, int line, int column);
  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& detail() const { return detail_; }

 private:
  int line_;
  int column_;
  std::string detail_;
};

// Kernel is structurally valid text but violates an IR invariant.
class KernelError : public Error {
 public:
  using Error::Error;
};

class ScheduleSyntaxError : public Error {
 public:
  ScheduleSyntaxError(const std::string& message, std::size_t position);
  std::size_t position() const { return position_; }
  const std::string& detail() const { return detail_; }

 private:
  std::size_t position_;
  std::string detail_;
};

class InterpretError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

// Scripted provider history diverged from the recording.
class ScriptMismatchError : public TransportError {
 public:
  using TransportError::TransportError;
};

class BackendError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Internal invariant broken; indicates a bug.
class InternalError : public Error {
 public:
  using Error::Error;
};

}  // namespace compilot
