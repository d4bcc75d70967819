#pragma once

#include <stdexcept>
#include <string>

namespace sdmon {

// Base of every error the library throws. Contract violations and bad input
// surface as exceptions; expected runtime outcomes (a lost lock, an
// undetected pedestrian) are reported through return values and events.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateCorrespondence : public Error {
 public:
  using Error::Error;
};

class PointAtInfinity : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class InsufficientDepth : public Error {
 public:
  using Error::Error;
};

class MixedFrames : public Error {
 public:
  using Error::Error;
};

class TimeRegression : public Error {
 public:
  using Error::Error;
};

class SelfPair : public Error {
 public:
  using Error::Error;
};

class NoVisibleMember : public Error {
 public:
  using Error::Error;
};

class SpacingTooWide : public Error {
 public:
  using Error::Error;
};

// Malformed scenario text. Line and column are 1-based; 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error(what), line_(line), column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

// Scenario that parses but breaks a named constraint ("pedestrian.id.unique").
class ValidationError : public Error {
 public:
  ValidationError(std::string constraint, const std::string& what)
      : Error(what), constraint_(std::move(constraint)) {}
  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string constraint_;
};

}  // namespace sdmon
