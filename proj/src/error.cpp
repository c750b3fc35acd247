#include "arreid/error.hpp"

namespace arreid {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_geometry: return "invalid_geometry";
        case ErrorKind::empty_dataset: return "empty_dataset";
        case ErrorKind::infeasible_k: return "infeasible_k";
        case ErrorKind::overlapping_grid: return "overlapping_grid";
        case ErrorKind::degenerate_batch: return "degenerate_batch";
        case ErrorKind::degenerate_dataset: return "degenerate_dataset";
        case ErrorKind::shape: return "shape";
        case ErrorKind::empty_input: return "empty_input";
        case ErrorKind::empty_evaluation: return "empty_evaluation";
        case ErrorKind::parse: return "parse";
        case ErrorKind::format: return "format";
        case ErrorKind::io: return "io";
        case ErrorKind::config: return "config";
    }
    return "unknown";
}

}  // namespace arreid
