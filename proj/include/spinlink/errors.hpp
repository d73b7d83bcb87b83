#pragma once

#include <stdexcept>
#include <string>

namespace spinlink {

// Configuration file / run-parameter problems. CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Corrupt or inconsistent event data. CLI maps these to exit code 3.
class DataIntegrityError : public std::runtime_error {
 public:
  explicit DataIntegrityError(const std::string& what) : std::runtime_error(what) {}
};

// Degenerate input to a least-squares fit.
class FitError : public std::runtime_error {
 public:
  explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

// Singular or otherwise unusable tomographic reconstruction.
class ReconstructionError : public std::runtime_error {
 public:
  explicit ReconstructionError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace spinlink
