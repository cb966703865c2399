#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dnc {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Raised when a gene value has no row in the embedding table.
class EmbeddingRangeError : public Error {
public:
  EmbeddingRangeError(long gene, std::size_t vocab_size)
      : Error("gene value " + std::to_string(gene) + " outside embedding vocabulary of size " +
              std::to_string(vocab_size)) {}
};

class ShapeError : public Error {
public:
  using Error::Error;
};

class CorruptWeightsError : public Error {
public:
  using Error::Error;
};

class TransferIncompatibleError : public Error {
public:
  using Error::Error;
};

class TrainingDivergenceError : public Error {
public:
  using Error::Error;
};

class DegenerateGenomeError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

// Input data problems: instance files, generator bounds.
class DataError : public Error {
public:
  using Error::Error;
};

class ParseError : public DataError {
public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

}  // namespace dnc
