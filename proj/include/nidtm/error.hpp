#pragma once

#include <stdexcept>
#include <string>

namespace nidtm {

enum class ErrorKind {
  Domain,         // argument outside the mathematical domain
  InvalidInput,   // malformed data or configuration
  Parse,          // file format errors (message carries the line number)
  Quadrature,     // integration did not reach tolerance
  Sampler,        // random variate generation failed repeatedly
  RankDeficient,  // whitening could not find k positive directions
  Decomposition,  // tensor power method produced nothing usable
  Unsupported     // operation not available for this family
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::InvalidInput: return "invalid input";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Quadrature: return "quadrature error";
    case ErrorKind::Sampler: return "sampler error";
    case ErrorKind::RankDeficient: return "rank deficiency";
    case ErrorKind::Decomposition: return "decomposition error";
    case ErrorKind::Unsupported: return "unsupported";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Error raised inside a multi-stage pipeline; the message is prefixed with
/// the stage name so callers can tell where things went wrong.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(cause.kind(), stage + ": " + cause.what()),
        stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

template <class F>
decltype(auto) in_stage(const std::string& stage, F&& f) {
  try {
    return std::forward<F>(f)();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e);
  }
}

}  // namespace nidtm
