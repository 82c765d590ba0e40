#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace invscope {

enum class ErrorCode {
    InvalidInput,
    NotFound,
    Conflict,
    Referential,
    StoreUnavailable,
    Busy,
    Precondition,
    Training,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every fault raised by the library. Violations that
/// are data (parse rejects, validation results) are returned, not thrown.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace invscope
