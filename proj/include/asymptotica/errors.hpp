#pragma once

#include <stdexcept>
#include <string>

namespace asymptotica {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad call: wrong shapes, empty inputs, invalid parameter combinations.
struct DimensionError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };

// Solver did not converge or residuals exceed the requested tolerance.
struct NumericalError : Error { using Error::Error; };

// A mathematical identity that must hold for valid input was violated;
// usually means the input is not the kind of map the caller claimed.
struct StructuralError : Error { using Error::Error; };
struct NotAnEigenvalueError : Error { using Error::Error; };
struct DefectivenessError : Error { using Error::Error; };
struct NotAnAlgebraError : Error { using Error::Error; };
struct DecompositionError : Error { using Error::Error; };
struct PermutationExtractionError : Error { using Error::Error; };
struct DerivationViolationError : Error { using Error::Error; };
struct FaithfulnessError : Error { using Error::Error; };
struct SynthesisError : Error { using Error::Error; };

// Malformed or unreadable input files.
struct IoError : Error { using Error::Error; };

} // namespace asymptotica
