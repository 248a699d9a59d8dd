#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mglstm/eval.hpp"
#include "mglstm/features.hpp"
#include "mglstm/glimpse.hpp"
#include "mglstm/proposals.hpp"
#include "mglstm/training.hpp"

namespace mglstm::pipeline {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kOk = 0, kUsage = 2, kIo = 3, kFormat = 4 };

struct PipelineConfig {
    std::string intrinsics_path;  ///< empty: use the dataset's intrinsics.json
    ProposalParams proposals;
    GlimpseConfig glimpse;
    ExtractorConfig extractor;
    TrainConfig train;
    MatchParams eval;

    void validate() const;
};

/// Missing sections and keys keep their defaults. Malformed JSON is a
/// FormatError, out-of-range values a ConfigError.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig config_from_json_text(const std::string& text, const std::string& name);
std::string config_to_json(const PipelineConfig& config);

/// Entry point of the `mglstm` tool. Diagnostics go to `err` as one JSON
/// object per line: {"level", "msg", "path"}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mglstm::pipeline
