#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "prism/evaluation.hpp"
#include "prism/pipeline.hpp"

namespace prism {

/// Everything a CLI run depends on. Serialises to JSON; unknown keys are rejected.
struct RunConfig {
    PrismConfig prism;
    std::string claims_path;
    /// Claims value column; empty picks the only non-date column.
    std::string claims_column;
    std::string trends_manifest;
    std::optional<WeekStamp> from;
    std::optional<WeekStamp> to;
    EvalRange eval;
    std::string output_dir = ".";
    std::uint64_t seed = 0;
};

std::string to_json(const RunConfig& cfg);
/// Missing keys keep their defaults. Throws Error{InvalidConfig}.
RunConfig run_config_from_json(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const RunConfig& cfg, const std::filesystem::path& path);

} // namespace prism
