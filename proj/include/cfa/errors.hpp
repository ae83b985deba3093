#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cfa {

// Base class for every error raised by the toolkit. The CLI maps the
// concrete types onto process exit codes.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t byte_offset)
        : Error(msg + " (byte offset " + std::to_string(byte_offset) + ")"),
          offset(byte_offset) {}
    std::size_t offset;
};

class EmptyTraceError : public Error {
public:
    explicit EmptyTraceError(const std::string& msg) : Error(msg) {}
};

class WriteError : public Error {
public:
    explicit WriteError(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Invalid attack specification (bad position, zero inserts, ...).
class SpecError : public Error {
public:
    explicit SpecError(const std::string& msg) : Error(msg) {}
};

// DOP generation exhausted its retry budget without finding a splice.
class NoDopSpliceError : public Error {
public:
    explicit NoDopSpliceError(const std::string& msg) : Error(msg) {}
};

class ModelError : public Error {
public:
    explicit ModelError(const std::string& msg) : Error(msg) {}
};

class TrainingDivergedError : public Error {
public:
    TrainingDivergedError(const std::string& msg, std::size_t at_epoch)
        : Error(msg + " (epoch " + std::to_string(at_epoch) + ")"),
          epoch(at_epoch) {}
    std::size_t epoch;
};

class MetricUndefinedError : public Error {
public:
    explicit MetricUndefinedError(const std::string& msg) : Error(msg) {}
};

class EmptySetError : public Error {
public:
    explicit EmptySetError(const std::string& msg) : Error(msg) {}
};

class CalibrationError : public Error {
public:
    explicit CalibrationError(const std::string& msg) : Error(msg) {}
};

class ProfileError : public Error {
public:
    explicit ProfileError(const std::string& msg) : Error(msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace cfa
