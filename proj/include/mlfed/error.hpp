#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace mlfed {

// Library-wide error type. `code` is a stable machine-readable tag
// (e.g. "AllZeroAction", "IdMismatch"); `what()` carries the detail.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& detail)
        : std::runtime_error(code + ": " + detail), code_(std::move(code)) {}

    const std::string& code() const { return code_; }

private:
    std::string code_;
};

}  // namespace mlfed
