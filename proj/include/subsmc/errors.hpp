#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace subsmc {

/// Invalid configuration: carries one message per offending field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> items)
      : std::runtime_error(join(items)), items_(std::move(items)) {}
  explicit ConfigError(const std::string& item)
      : ConfigError(std::vector<std::string>{item}) {}

  const std::vector<std::string>& items() const { return items_; }

 private:
  static std::string join(const std::vector<std::string>& items) {
    std::string out = "invalid configuration:";
    for (const auto& s : items) out += "\n  - " + s;
    return out;
  }
  std::vector<std::string> items_;
};

/// Numeric failure during a run (overflow in a likelihood term, degenerate
/// particle cloud, failed factorization). Message names the observation or
/// stage involved.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateCloudError : public NumericError {
 public:
  using NumericError::NumericError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace subsmc
