#pragma once

#include <stdexcept>
#include <string>

namespace forge {

// Root of every error raised by the library. Subclasses tag the failure
// category so callers (CLI exit codes, HTTP status mapping) can dispatch.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class coordinate_error : public error {
public:
    coordinate_error(const std::string& what, long x, long y) : error(what), x_(x), y_(y) {}
    long x() const noexcept { return x_; }
    long y() const noexcept { return y_; }

private:
    long x_;
    long y_;
};

class domain_error : public error {
    using error::error;
};

class config_error : public error {
    using error::error;
};

class shape_error : public error {
    using error::error;
};

class io_error : public error {
    using error::error;
};

class format_error : public error {
    using error::error;
};

class contract_error : public error {
    using error::error;
};

class transport_error : public error {
public:
    transport_error(const std::string& what, std::string endpoint, int attempts)
        : error(what), endpoint_(std::move(endpoint)), attempts_(attempts) {}
    const std::string& endpoint() const noexcept { return endpoint_; }
    int attempts() const noexcept { return attempts_; }

private:
    std::string endpoint_;
    int attempts_;
};

}  // namespace forge
