#pragma once

#include <stdexcept>
#include <string>

namespace vss {

// error taxonomy; the CLI maps these onto process exit codes
struct ConfigError : std::runtime_error { // exit code 2
  explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};

struct NumericalError : std::runtime_error { // exit code 3
  explicit NumericalError(const std::string& m) : std::runtime_error(m) {}
};

struct IoError : std::runtime_error { // exit code 4
  explicit IoError(const std::string& m) : std::runtime_error(m) {}
};

} // namespace vss
