#include "etz/error.hpp"

namespace etz {

std::string_view code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::malformed_header: return "malformed_header";
        case ErrorCode::bad_cell: return "bad_cell";
        case ErrorCode::duplicate_subject: return "duplicate_subject";
        case ErrorCode::missing_control: return "missing_control";
        case ErrorCode::duplicate_visit: return "duplicate_visit";
        case ErrorCode::visit_out_of_range: return "visit_out_of_range";
        case ErrorCode::conflicting_arm: return "conflicting_arm";
        case ErrorCode::insufficient_subjects: return "insufficient_subjects";
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::non_finite: return "non_finite";
        case ErrorCode::zero_dof: return "zero_dof";
        case ErrorCode::empty_cell: return "empty_cell";
        case ErrorCode::infeasible: return "infeasible";
        case ErrorCode::degenerate_predictor: return "degenerate_predictor";
        case ErrorCode::unequal_arms: return "unequal_arms";
        case ErrorCode::io: return "io";
    }
    return "unknown";
}

}  // namespace etz
