#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace phyto {

// All recoverable failures carry a stable machine-readable code ("not-found",
// "schema", ...) next to the human-readable message. The CLI maps codes to
// exit statuses; tests match on them.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

struct IngestError : Error {
    using Error::Error;
};

struct BuildError : Error {
    using Error::Error;
};

struct TrainError : Error {
    using Error::Error;
};

struct PredictError : Error {
    using Error::Error;
};

struct MetricError : Error {
    using Error::Error;
};

struct FilterError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace phyto
