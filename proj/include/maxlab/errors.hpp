#pragma once

#include <stdexcept>
#include <string>

namespace maxlab {

/// Base class for all library errors. Carries the module and operation that
/// failed so the CLI can map failures to stable exit codes and messages.
class Error : public std::runtime_error {
public:
  Error(std::string module, std::string op, const std::string& what)
      : std::runtime_error("[" + module + "." + op + "] " + what),
        module_(std::move(module)),
        op_(std::move(op)) {}

  const std::string& module_name() const { return module_; }
  const std::string& operation() const { return op_; }

private:
  std::string module_;
  std::string op_;
};

/// Invalid geometry or combinatorics: degenerate cells, disconnected meshes,
/// misaligned holes, parse failures of mesh files.
class MeshError : public Error {
public:
  using Error::Error;
};

/// Invalid run configuration or input data (dimension mismatches, bad levels,
/// non-SPD material entries, missing files).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Numerical failure during a computation: Cholesky breakdown, missing
/// spectral gap, unstable harmonic-dimension detection.
class ComputationError : public Error {
public:
  using Error::Error;
};

} // namespace maxlab
