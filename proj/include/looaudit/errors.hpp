#pragma once

#include <stdexcept>
#include <string>

namespace looaudit {

// Base for all toolkit errors. Subclasses mark the failure domain so callers
// (and tests) can distinguish bad configuration from numeric trouble.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration: bad dims, bad fractions, o_size too large, etc.
struct ConfigError : Error {
    using Error::Error;
};

// Shape mismatch between operands.
struct DimensionError : Error {
    using Error::Error;
};

// Invalid argument outside configuration (unknown id, unknown subset, ...).
struct ArgumentError : Error {
    using Error::Error;
};

// A loss or model kind does not support the requested operation.
struct UnsupportedError : Error {
    using Error::Error;
};

// Non-finite values where finite ones are required.
struct NumericError : Error {
    NumericError(const std::string& msg, int layer) : Error(msg), layer_index(layer) {}
    int layer_index = -1;
};

// CSV ingestion failure; carries 1-based row and column when known.
struct IngestionError : Error {
    IngestionError(const std::string& msg, long row = -1, long column = -1)
        : Error(msg), row(row), column(column) {}
    long row = -1;
    long column = -1;
};

// Training diverged; carries the epoch and optimizer step.
struct TrainingError : Error {
    TrainingError(const std::string& msg, int epoch, long step)
        : Error(msg), epoch(epoch), step(step) {}
    int epoch = -1;
    long step = -1;
};

// A leave-one-out variant failed inside an audit; names the removed id.
struct AuditError : Error {
    AuditError(const std::string& msg, long removed_id)
        : Error(msg), removed_id(removed_id) {}
    long removed_id = -1;
};

// The exact oracle refused an instance (size cap or unsupported rule).
struct RefusalError : Error {
    using Error::Error;
};

}  // namespace looaudit
