#include "prism/error.hpp"

namespace prism {

std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::NoOverlap: return "NoOverlap";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::InvalidSeries: return "InvalidSeries";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::InsufficientHistory: return "InsufficientHistory";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidDesign: return "InvalidDesign";
    case ErrorCode::FoldTooSmall: return "FoldTooSmall";
    case ErrorCode::InsufficientVintage: return "InsufficientVintage";
    case ErrorCode::MissingVintage: return "MissingVintage";
    case ErrorCode::InsufficientTrack: return "InsufficientTrack";
    case ErrorCode::EmptyTrack: return "EmptyTrack";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::ZeroReferenceError: return "ZeroReferenceError";
    case ErrorCode::DegenerateDifferential: return "DegenerateDifferential";
    case ErrorCode::TrackTooShort: return "TrackTooShort";
    case ErrorCode::TooFew: return "TooFew";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::GapError: return "GapError";
    case ErrorCode::NonSaturdayGrid: return "NonSaturdayGrid";
    case ErrorCode::OutOfRangeValue: return "OutOfRangeValue";
    case ErrorCode::CoverageTooLong: return "CoverageTooLong";
    case ErrorCode::UncoveredOrigin: return "UncoveredOrigin";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

ErrorCategory category_of(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidConfig:
        return ErrorCategory::Usage;
    case ErrorCode::DegenerateDifferential:
    case ErrorCode::InvalidDesign:
        return ErrorCategory::Numerical;
    default:
        return ErrorCategory::Data;
    }
}

} // namespace prism
