#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace arreid {

enum class ErrorKind {
    invalid_geometry,
    empty_dataset,
    infeasible_k,
    overlapping_grid,
    degenerate_batch,
    degenerate_dataset,
    shape,
    empty_input,
    empty_evaluation,
    parse,
    format,
    io,
    config,
};

std::string_view to_string(ErrorKind kind);

// Every library failure is reported through this one exception type; the
// kind lets callers (and the CLI exit status) branch without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace arreid
