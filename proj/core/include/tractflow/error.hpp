#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tractflow {

/// Error categories surfaced by the library. The CLI maps these onto exit
/// codes, the service onto HTTP statuses.
enum class Errc {
  InvalidArgument,
  MissingInput,
  ParseError,
  MissingColumn,
  NonFiniteValue,
  DuplicateId,
  DuplicatePair,
  DegenerateGeometry,
  EmptyInput,
  UnknownTract,
  UnknownIndicator,
  NegativeForbidden,
  SchemaMismatch,
  DimensionMismatch,
  KeyMismatch,
  BothTotalsZero,
  NoDefinedPairs,
  InsufficientData,
  NonFiniteLoss,
  Diverged,
  VersionMismatch,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// True for failures caused by numerical divergence rather than bad data.
inline bool is_numeric_failure(Errc code) noexcept {
  return code == Errc::NonFiniteLoss || code == Errc::Diverged;
}

}  // namespace tractflow
