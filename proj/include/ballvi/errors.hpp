#pragma once

#include <stdexcept>
#include <string>

namespace ballvi {

// Invalid or inconsistent input: config files, scenario data, parameter ranges.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// A solver failed to converge. Carries the time step index and the residual
// it got stuck at so the caller can retry with a smaller step or tolerance.
class SolverError : public std::runtime_error {
  public:
    SolverError(const std::string& what, int step, double residual)
        : std::runtime_error(what), step_(step), residual_(residual) {}
    int step() const noexcept { return step_; }
    double residual() const noexcept { return residual_; }

  private:
    int step_;
    double residual_;
};

} // namespace ballvi
