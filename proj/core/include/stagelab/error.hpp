#pragma once

#include <stdexcept>
#include <string>

namespace stagelab {

/// Thrown by the textual front ends (machine code, source terms, host
/// s-expressions) on malformed input. Positions are 1-based.
class ParseError : public std::runtime_error {
public:
  ParseError(std::string message, int line, int column)
      : std::runtime_error(message + " (line " + std::to_string(line) +
                           ", column " + std::to_string(column) + ")"),
        line_(line), column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

private:
  int line_;
  int column_;
};

} // namespace stagelab
