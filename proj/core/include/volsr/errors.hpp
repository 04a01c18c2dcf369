#pragma once

#include <stdexcept>
#include <string>

namespace volsr {

/// Base class for all library errors.
class error : public std::runtime_error {
public:
  explicit error(const std::string &msg) : std::runtime_error(msg) {}
};

/// File parsing / serialization failures (bad magic, truncation, ...).
class io_error : public error {
public:
  using error::error;
};

/// Dimension or layout mismatches between tensors/volumes.
class shape_error : public error {
public:
  using error::error;
};

/// Invalid configuration values (fractions, window sizes, ...).
class config_error : public error {
public:
  using error::error;
};

/// Physical coordinate outside a volume's bounding box.
class bounds_error : public error {
public:
  using error::error;
};

/// A measurement routine could not produce a result (no edge found, ...).
class measurement_error : public error {
public:
  using error::error;
};

/// Degenerate or insufficient data for a statistical estimator.
class stats_error : public error {
public:
  using error::error;
};

/// Operation invoked in the wrong order (backward before forward, ...).
class state_error : public error {
public:
  using error::error;
};

/// Training aborted (divergence, non-finite gradients).
class train_error : public error {
public:
  using error::error;
};

} // namespace volsr
