#pragma once

#include <stdexcept>
#include <string>

namespace harmonizer {

/// Precondition or shape violation in a library call.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Unreadable or ill-formed file. The message carries the path and reason.
class IoError : public std::runtime_error {
 public:
  IoError(const std::string& path, const std::string& reason)
      : std::runtime_error(path + ": " + reason), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Training diverged (non-finite loss or gradient).
class TrainingError : public std::runtime_error {
 public:
  TrainingError(long step, const std::string& reason)
      : std::runtime_error("training step " + std::to_string(step) + ": " + reason), step_(step) {}

  long step() const noexcept { return step_; }

 private:
  long step_;
};

/// Per-image argument fitting produced a non-finite objective.
class OptimizationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace harmonizer
