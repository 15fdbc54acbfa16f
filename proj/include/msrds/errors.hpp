#ifndef MSRDS_ERRORS_HPP
#define MSRDS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace msrds {

// Base class for all failures raised by the numerical layers. The CLI maps
// these to exit code 3; configuration problems use ConfigError (exit code 2)
// and file-system problems IoError (exit code 4).
class NumericalError : public std::runtime_error {
  public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// A trajectory left the representable range (non-finite state).
class IntegrationDivergedError : public NumericalError {
  public:
    IntegrationDivergedError(const std::string& what, double failure_time)
        : NumericalError(what), failure_time_(failure_time) {}
    double failure_time() const { return failure_time_; }

  private:
    double failure_time_;
};

// Adaptive step control shrank the step below the representable resolution
// of the integration interval.
class StiffnessError : public NumericalError {
  public:
    explicit StiffnessError(const std::string& what) : NumericalError(what) {}
};

class EigensolverFailedError : public NumericalError {
  public:
    explicit EigensolverFailedError(const std::string& what) : NumericalError(what) {}
};

// A moment state (or lifted point) violates the admissibility cone beyond
// the documented tolerances.
class InadmissibleStateError : public NumericalError {
  public:
    explicit InadmissibleStateError(const std::string& what) : NumericalError(what) {}
};

// A particle exceeded the blow-up guard during ensemble simulation.
class SimulationDivergedError : public NumericalError {
  public:
    SimulationDivergedError(const std::string& what, long step_index)
        : NumericalError(what), step_index_(step_index) {}
    long step_index() const { return step_index_; }

  private:
    long step_index_;
};

class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
  public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace msrds

#endif
