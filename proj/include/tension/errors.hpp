#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tension {

/// Base for every error the toolkit raises on purpose.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A value outside the physical or mathematical domain of an operation.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Caller supplied structurally bad input (length mismatch, too few points).
class InputError : public Error {
public:
  using Error::Error;
};

/// Least-squares system could not be solved.
class FitError : public Error {
public:
  using Error::Error;
};

class DegenerateInputError : public InputError {
public:
  using InputError::InputError;
};

/// The reflector gap left the configured operating window.
class OutOfWindowError : public DomainError {
public:
  OutOfWindowError(double force_n, double gap_m);
  double force_n() const noexcept { return force_n_; }
  double gap_m() const noexcept { return gap_m_; }

private:
  double force_n_;
  double gap_m_;
};

/// Twist exceeded what the untwisted string length allows (|r*theta| >= L0).
class KinematicLimitError : public DomainError {
public:
  using DomainError::DomainError;
};

class RateLimitError : public DomainError {
public:
  using DomainError::DomainError;
};

class EncodeError : public DomainError {
public:
  using DomainError::DomainError;
};

/// Text input (CSV, config, JSON) that does not parse. Line numbers are 1-based.
class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

} // namespace tension
