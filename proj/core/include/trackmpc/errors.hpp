#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace trackmpc {

/// Malformed text input (bank files, trajectories). Carries the 1-based line
/// number and the name of the offending field.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, std::string field, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ", field '" + field +
                           "': " + message),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

}  // namespace trackmpc
