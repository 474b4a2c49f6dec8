#pragma once

#include <stdexcept>
#include <string>

namespace snipcheck {

// Caller passed something malformed (unknown format tag, bad arguments).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configuration files (run config, compiler catalog) are invalid or empty.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The host environment is missing something (compiler/solver executable).
class EnvironmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The external compiler replied with something we cannot interpret.
class BridgeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A pipeline callback failed in a way that is not a per-snippet diagnostic.
class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace snipcheck
