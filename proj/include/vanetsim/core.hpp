#pragma once

#include <cassert>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>

namespace vanetsim {

enum class Errc {
  DegenerateInput,
  OffRoute,
  Truncated,
  UnknownKind,
  FieldOutOfRange,
  InvariantViolation,
  UnknownEthertype,
  PayloadTooLarge,
  StalePoA,
  ClockSkew,
  InsufficientHistory,
  UnknownRsu,
  StorageFailure,
  CryptoFailure,
  IntegrityFailure,
  DecryptFailure,
  AuthFailure,
  KeyUnavailable,
  CorruptStream,
  DegenerateData,
  InsufficientWindow,
  NoRsuInRange,
  ParseError,
  ValidationError,
  IoError,
};

const char* errc_name(Errc code);

struct Error {
  Errc code;
  std::string detail;
};

inline Error make_error(Errc code, std::string detail = {}) {
  return Error{code, std::move(detail)};
}

/// Minimal value-or-error carrier. value() must not be called when !ok().
template <typename T>
class Result {
 public:
  Result(T value) : v_(std::move(value)) {}
  Result(Error err) : v_(std::move(err)) {}

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }

  const T& value() const& {
    assert(ok());
    return std::get<T>(v_);
  }
  T& value() & {
    assert(ok());
    return std::get<T>(v_);
  }
  T&& value() && {
    assert(ok());
    return std::get<T>(std::move(v_));
  }
  const Error& error() const {
    assert(!ok());
    return std::get<Error>(v_);
  }
  Errc code() const { return error().code; }

 private:
  std::variant<T, Error> v_;
};

/// Result for operations with no payload.
class Status {
 public:
  Status() = default;
  Status(Error err) : err_(std::move(err)) {}

  static Status ok_status() { return Status{}; }

  bool ok() const { return !err_.has_value(); }
  explicit operator bool() const { return ok(); }
  const Error& error() const {
    assert(err_);
    return *err_;
  }
  Errc code() const { return error().code; }

 private:
  std::optional<Error> err_;
};

using TimestampMs = std::int64_t;

}  // namespace vanetsim
