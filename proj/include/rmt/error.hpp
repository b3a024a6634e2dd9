#pragma once

#include <stdexcept>
#include <string>

namespace rmt {

/// Base of every error raised by the library. `kind()` is the machine-readable
/// tag the CLI puts into its error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define RMT_DEFINE_ERROR(Name, tag)                                      \
    class Name : public Error {                                          \
    public:                                                              \
        explicit Name(const std::string& what) : Error(tag, what) {}     \
    };

RMT_DEFINE_ERROR(ParameterError, "parameter")
RMT_DEFINE_ERROR(InputError, "input")
RMT_DEFINE_ERROR(DomainError, "domain")
RMT_DEFINE_ERROR(EvaluationError, "evaluation")
RMT_DEFINE_ERROR(FitError, "fit")
RMT_DEFINE_ERROR(PrecisionError, "precision")
RMT_DEFINE_ERROR(SolverError, "solver")
RMT_DEFINE_ERROR(RangeError, "range")
RMT_DEFINE_ERROR(IntegrationError, "integration")
RMT_DEFINE_ERROR(StepError, "step")
RMT_DEFINE_ERROR(ConfigError, "config")

#undef RMT_DEFINE_ERROR

}  // namespace rmt
