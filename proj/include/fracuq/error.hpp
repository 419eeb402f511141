#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fracuq {

/// Machine-readable error categories. The CLI prints them as `error[CODE]:`.
enum class ErrorCode {
  usage,       // bad command line
  config,      // inconsistent or invalid configuration
  domain,      // argument outside the mathematical domain
  parse,       // malformed input file
  validation,  // well-formed input that violates an invariant
  solver,      // linear solver failure
  tolerance,   // requested accuracy not reachable
  bounds,      // diffusivity bound violation
  io,          // file system failure
};

inline std::string_view code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::usage: return "E_USAGE";
    case ErrorCode::config: return "E_CONFIG";
    case ErrorCode::domain: return "E_DOMAIN";
    case ErrorCode::parse: return "E_PARSE";
    case ErrorCode::validation: return "E_VALIDATION";
    case ErrorCode::solver: return "E_SOLVER";
    case ErrorCode::tolerance: return "E_TOLERANCE";
    case ErrorCode::bounds: return "E_BOUNDS";
    case ErrorCode::io: return "E_IO";
  }
  return "E_UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace fracuq
