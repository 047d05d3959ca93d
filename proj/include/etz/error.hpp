#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace etz {

/// Machine-readable failure categories. The CLI maps these to exit codes.
enum class ErrorCode {
    malformed_header,
    bad_cell,
    duplicate_subject,
    missing_control,
    duplicate_visit,
    visit_out_of_range,
    conflicting_arm,
    insufficient_subjects,
    invalid_argument,
    non_finite,
    zero_dof,
    empty_cell,
    infeasible,
    degenerate_predictor,
    unequal_arms,
    io,
};

std::string_view code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace etz
