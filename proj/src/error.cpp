#include "tristage/error.hpp"

namespace tristage {

std::string_view error_category(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Ordering: return "ordering";
    case ErrorKind::ConstraintData: return "constraint-data";
    case ErrorKind::Objective: return "objective";
    case ErrorKind::DegenerateLeaf: return "degenerate-leaf";
    case ErrorKind::DegenerateRatio: return "degenerate-ratio";
    case ErrorKind::Persistence: return "persistence";
    case ErrorKind::Config: return "config";
    case ErrorKind::Metric: return "metric";
    case ErrorKind::Io: return "io";
    }
    return "unknown";
}

int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::Usage: return 2;
    case ErrorKind::ConstraintData: return 4;
    case ErrorKind::Persistence: return 5;
    default: return 3;
    }
}

} // namespace tristage
