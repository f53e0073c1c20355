#include "tractflow/error.hpp"

namespace tractflow {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::MissingInput: return "MissingInput";
    case Errc::ParseError: return "ParseError";
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::DuplicatePair: return "DuplicatePair";
    case Errc::DegenerateGeometry: return "DegenerateGeometry";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::UnknownTract: return "UnknownTract";
    case Errc::UnknownIndicator: return "UnknownIndicator";
    case Errc::NegativeForbidden: return "NegativeForbidden";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::KeyMismatch: return "KeyMismatch";
    case Errc::BothTotalsZero: return "BothTotalsZero";
    case Errc::NoDefinedPairs: return "NoDefinedPairs";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::Diverged: return "Diverged";
    case Errc::VersionMismatch: return "VersionMismatch";
  }
  return "Unknown";
}

}  // namespace tractflow
