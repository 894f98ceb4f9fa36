#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hypertext {

// Base of every error raised by the library. Callers that only care about
// "something went wrong" catch this; the subclasses name the failure.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class NoLabel : public Error {
 public:
  using Error::Error;
};

class EmptyCorpus : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class StaleTrace : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class NonFiniteGradient : public Error {
 public:
  NonFiniteGradient(std::size_t example_index)
      : Error("non-finite gradient at example " + std::to_string(example_index)),
        example_index_(example_index) {}

  std::size_t example_index() const { return example_index_; }

 private:
  std::size_t example_index_;
};

}  // namespace hypertext
