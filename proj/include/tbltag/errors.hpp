#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tbltag {

// Bad input data: malformed files, unknown ids, out-of-range parameters.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed stream with a line number attached.
class ParseError : public DataError {
 public:
  ParseError(const std::string& msg, int line)
      : DataError("line " + std::to_string(line) + ": " + msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// A library invariant failed; indicates a bug, not bad input.
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

// Raised when a training run exceeds its configured generated-rule budget.
// The bench harness catches this to record a cleanly aborted run.
class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(std::uint64_t generated, std::uint64_t budget)
      : std::runtime_error("rule generation budget exceeded: " +
                           std::to_string(generated) + " > " +
                           std::to_string(budget)),
        generated_(generated) {}
  std::uint64_t generated() const { return generated_; }

 private:
  std::uint64_t generated_;
};

}  // namespace tbltag
