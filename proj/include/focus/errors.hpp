#pragma once

#include <stdexcept>
#include <string>

namespace focus {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaViolation : public Error {
 public:
  using Error::Error;
};

class UndefinedStatistic : public Error {
 public:
  using Error::Error;
};

class InfeasiblePartition : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Raised when a training or aggregation step has nothing to work with.
class NoProgress : public Error {
 public:
  using Error::Error;
};

class CannotFit : public Error {
 public:
  using Error::Error;
};

class MissingPool : public Error {
 public:
  using Error::Error;
};

/// A content-free estimate with a zero component cannot be inverted.
class DegenerateEstimate : public Error {
 public:
  using Error::Error;
};

/// The ledger refuses to represent a flow (raw data leaving a silo).
class ForbiddenFlow : public Error {
 public:
  using Error::Error;
};

/// Private data offered where only public data may go (e.g. backend fitting).
class PrivacyViolation : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Config validation failure; `path()` names the offending key, e.g. "scenario[0].lrr".
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// A scenario failed; the message carries the scenario name and seed.
class ScenarioError : public Error {
 public:
  ScenarioError(std::string scenario, unsigned long long seed, const std::string& what)
      : Error("scenario '" + scenario + "' (seed " + std::to_string(seed) + "): " + what),
        scenario_(std::move(scenario)) {}
  const std::string& scenario() const noexcept { return scenario_; }

 private:
  std::string scenario_;
};

}  // namespace focus
