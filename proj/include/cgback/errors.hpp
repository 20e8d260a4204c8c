#pragma once

#include <stdexcept>
#include <string>

namespace cgback {

// Base class for all library errors.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data: parse failures, skeleton
// mismatches, missing atoms, unknown residue codes.
class DataError : public Error {
  public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

// Numeric degeneracies: collinear anchors, non-finite values.
class NumericError : public Error {
  public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

// HTTP transfer failure carrying the status code (0 when the request
// never reached the server). Retryable by the caller.
class HttpError : public Error {
  public:
    HttpError(const std::string& msg, int status) : Error(msg), status_(status) {}
    int status() const { return status_; }

  private:
    int status_;
};

// Remote entry does not exist (HTTP 404).
class NotFoundError : public HttpError {
  public:
    explicit NotFoundError(const std::string& msg) : HttpError(msg, 404) {}
};

} // namespace cgback
