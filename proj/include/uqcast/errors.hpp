#pragma once

#include <stdexcept>
#include <string>

namespace uqcast {

// Exit-code table used by the CLI: 1 usage, 2 I/O, 3 data validation,
// 4 numeric failure, 5 verification failure.
class Error : public std::runtime_error {
public:
    Error(const std::string& msg, int exit_code)
        : std::runtime_error(msg), exit_code_(exit_code) {}
    int exit_code() const { return exit_code_; }

private:
    int exit_code_;
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string& msg) : Error(msg, 1) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg, 2) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg, 3) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg, 4) {}
};

// Dimension mismatches are reported with both shapes in the message.
class ShapeError : public NumericError {
public:
    explicit ShapeError(const std::string& msg) : NumericError(msg) {}
};

class VerifyError : public Error {
public:
    explicit VerifyError(const std::string& msg) : Error(msg, 5) {}
};

} // namespace uqcast
