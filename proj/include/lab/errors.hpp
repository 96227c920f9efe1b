#pragma once
#include <stdexcept>
#include <string>

namespace lab {

struct LabError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// geometry
struct DegenerateBoundaryPair : LabError { using LabError::LabError; };
struct CoincidentPoints : LabError { using LabError::LabError; };

// group construction / enumeration
struct DisksOverlap : LabError { using LabError::LabError; };
struct DegenerateDisk : LabError { using LabError::LabError; };
struct BudgetExceeded : LabError { using LabError::LabError; };
struct InsufficientDepth : LabError { using LabError::LabError; };
struct OutOfRange : LabError { using LabError::LabError; };

// measures & averages
struct EmptyCatalog : LabError { using LabError::LabError; };
struct EmptyAnnulus : LabError { using LabError::LabError; };
struct ShadowTooNarrow : LabError { using LabError::LabError; };

// CLI / orchestration
struct ConfigError : LabError { using LabError::LabError; };
struct ExperimentFailed : LabError { using LabError::LabError; };

} // namespace lab
