#pragma once

#include <stdexcept>
#include <string>

namespace mf {

// Violated precondition or shape contract. CLI maps this to exit code 3.
class ContractViolation : public std::runtime_error {
 public:
  explicit ContractViolation(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input data (files, configs). CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mf
