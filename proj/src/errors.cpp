#include "hyperbuild/errors.hpp"

namespace hyperbuild {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidInput: return "InvalidInput";
        case ErrorKind::Domain: return "DomainError";
        case ErrorKind::Degenerate: return "DegenerateCrossing";
        case ErrorKind::Coverage: return "CoverageError";
        case ErrorKind::ResolutionLimit: return "ResolutionLimit";
        case ErrorKind::Capacity: return "CapacityError";
        case ErrorKind::Precondition: return "PreconditionError";
        case ErrorKind::NonConvergence: return "NonConvergence";
        case ErrorKind::Undersampled: return "Undersampled";
        case ErrorKind::UndefinedValue: return "UndefinedValue";
    }
    return "Unknown";
}

}  // namespace hyperbuild
