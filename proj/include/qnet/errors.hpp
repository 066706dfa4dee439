#pragma once

#include <stdexcept>
#include <string>

namespace qnet {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParameterError : Error {
  using Error::Error;
};

struct GenerationError : Error {
  using Error::Error;
};

struct RoutingError : Error {
  using Error::Error;
};

struct ModelError : Error {
  using Error::Error;
};

// A schedule that drives an ebit queue negative under the ideal update.
struct InfeasibleScheduleError : Error {
  using Error::Error;
};

struct ProgramError : Error {
  using Error::Error;
};

struct ClassificationError : Error {
  using Error::Error;
};

// Carries the dotted key path of the offending entry, e.g. "physics.eta".
struct ConfigError : Error {
  ConfigError(std::string key_path, const std::string& what)
      : Error(key_path.empty() ? what : key_path + ": " + what), path(std::move(key_path)) {}
  std::string path;
};

}  // namespace qnet
