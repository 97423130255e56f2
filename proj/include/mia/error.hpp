#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mia {

// Base type for every error raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or inconsistent configuration values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input file; carries the 1-based row that failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t row)
      : Error(msg + " (row " + std::to_string(row) + ")"), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

// Dimension mismatch between a sample and a model/oracle.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Requested partition sizes exceed the corpus.
class SizeError : public Error {
 public:
  using Error::Error;
};

class TrainError : public Error {
 public:
  using Error::Error;
};

// Loss became non-finite; carries the epoch where it happened.
class DivergenceError : public TrainError {
 public:
  DivergenceError(const std::string& msg, int epoch)
      : TrainError(msg + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

// A score query hit a label-only surface.
class ExposureError : public Error {
 public:
  using Error::Error;
};

// Query budget exhausted; carries the number of queries consumed.
class BudgetError : public Error {
 public:
  BudgetError(const std::string& msg, std::uint64_t consumed)
      : Error(msg + " (consumed " + std::to_string(consumed) + " queries)"),
        consumed_(consumed) {}
  std::uint64_t consumed() const { return consumed_; }

 private:
  std::uint64_t consumed_;
};

// Remote oracle failure (connection, non-2xx, bad payload).
class TransportError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

// Threshold or radius estimation had nothing to work with.
class EstimationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mia
