#pragma once

#include <stdexcept>
#include <string>

namespace octskin {

// Root of all library errors. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error { using Error::Error; };
class FormatError : public Error { using Error::Error; };
class SchemaError : public Error { using Error::Error; };
class ValidationError : public Error { using Error::Error; };
class ParameterError : public Error { using Error::Error; };
class ContractError : public Error { using Error::Error; };
class CoverageError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class MetricError : public Error { using Error::Error; };
class DegenerateInputError : public Error { using Error::Error; };

}  // namespace octskin
