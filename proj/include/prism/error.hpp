#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace prism {

enum class ErrorCode {
    // core_series
    NoOverlap,
    OutOfRange,
    InvalidSeries,
    // decomposition
    SeriesTooShort,
    InsufficientHistory,
    InvalidConfig,
    // penalized_regression
    InvalidDesign,
    FoldTooSmall,
    // prism_pipeline
    InsufficientVintage,
    MissingVintage,
    InsufficientTrack,
    // evaluation
    EmptyTrack,
    GridMismatch,
    ZeroReferenceError,
    DegenerateDifferential,
    TrackTooShort,
    TooFew,
    // data_ingest
    ParseError,
    GapError,
    NonSaturdayGrid,
    OutOfRangeValue,
    CoverageTooLong,
    UncoveredOrigin,
    Io,
};

/// Broad failure class, used by the CLI to choose an exit code.
enum class ErrorCategory { Usage, Data, Numerical };

std::string_view to_string(ErrorCode code) noexcept;
ErrorCategory category_of(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    ErrorCategory category() const noexcept { return category_of(code_); }

private:
    ErrorCode code_;
};

} // namespace prism
