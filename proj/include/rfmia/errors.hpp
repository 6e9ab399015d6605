#pragma once

#include <stdexcept>
#include <string>

namespace rfmia {

// Malformed argument to a pure operation (bad bit count, dim mismatch, ...).
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A perturbation was requested against a feature whose range is zero.
struct DegenerateRange : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct MissingArtifact : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Wraps a failure inside one experiment stage so callers can tell which
// stage died; artifacts written by earlier stages are left on disk.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace rfmia
