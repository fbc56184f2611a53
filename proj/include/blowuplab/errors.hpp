#pragma once

#include <stdexcept>

namespace blowuplab {

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Instability, divergence or failed convergence of a numerical procedure.
struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace blowuplab
