#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hjm {

// Caller passed something outside an operation's domain (bad point, negative speed, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A Hamiltonian violates a standing assumption in a way the requested operation cannot absorb.
class AssumptionError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Scenario/configuration problem. `key()` names the offending setting when known.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what, std::string key = {})
      : std::runtime_error(what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

// Scenario text could not be tokenized. Line and column are 1-based.
class ParseError : public ConfigError {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : ConfigError(what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

// Broken internal invariant (e.g. a value grid without argmin records asked for a trajectory).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace hjm
