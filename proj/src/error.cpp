#include "selfsim/error.hpp"

namespace selfsim {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Domain: return "DomainError";
    case ErrorKind::Inconclusive: return "Inconclusive";
    case ErrorKind::BadBracket: return "BadBracket";
    case ErrorKind::Ambiguous: return "Ambiguous";
    case ErrorKind::NotEnoughZeros: return "NotEnoughZeros";
    case ErrorKind::NoSupportRadius: return "NoSupportRadius";
    case ErrorKind::InsufficientRange: return "InsufficientRange";
    case ErrorKind::NegativeBase: return "NegativeBase";
    case ErrorKind::IllPosedPotential: return "IllPosedPotential";
    case ErrorKind::InfiniteMass: return "InfiniteMass";
    case ErrorKind::OutOfTimeDomain: return "OutOfTimeDomain";
    case ErrorKind::Solver: return "SolverFailure";
  }
  return "Unknown";
}

}  // namespace selfsim
