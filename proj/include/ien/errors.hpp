// SPDX-License-Identifier: Apache-2.0
#ifndef IEN_ERRORS_HPP
#define IEN_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <utility>

namespace ien {

// Library-wide error base. `kind()` is a stable machine-parsable class
// name; the CLI prints it as the single-line error tag on failure.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

// Dimension mismatch between an operand and what the operation expects.
struct ShapeError : Error {
  explicit ShapeError(const std::string& w) : Error("shape_error", w) {}
};

// Non-finite values where finite ones are required.
struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error("numeric_error", w) {}
};

// API misuse: mismatched trace/params, empty inputs, out-of-range labels.
struct UsageError : Error {
  explicit UsageError(const std::string& w) : Error("usage_error", w) {}
};

// Malformed file content (bad magic, bad version, truncation).
struct FormatError : Error {
  explicit FormatError(const std::string& w) : Error("format_error", w) {}
};

// Inconsistent configuration, e.g. checkpoint/data width mismatch.
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("config_error", w) {}
};

// Filesystem failure (unreadable/unwritable path).
struct IoError : Error {
  explicit IoError(const std::string& w) : Error("io_error", w) {}
};

}  // namespace ien

#endif  // IEN_ERRORS_HPP
