#pragma once

// Composite experiment configuration behind the command-line tool: one JSON
// file drives data generation, human-reward training, the evolutionary
// search, and evaluation. Shared sections (train, issuer, layout, mode,
// recall levels, seed) flow into the evolve sub-config at load time; the
// "evolve" JSON section carries only loop-specific keys.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trisk/eval.hpp"
#include "trisk/evolve.hpp"
#include "trisk/rewards.hpp"
#include "trisk/synthdata.hpp"

namespace trisk {

inline constexpr const char* kVersion = "0.1.0";

struct RunConfig {
    GenConfig gen;
    TrainConfig train;
    IssuerConfig issuer;
    BaselineConfig baseline;
    StateLayout layout = StateLayout::ScoresWithStage;
    PrecisionRewardParams reward;  // human-crafted reward for train-human
    std::vector<double> recall_levels = {0.80, 0.85, 0.90};
    int longterm_window_days = 30;
    PromptContext::Mode mode = PromptContext::Mode::ZeroShot;
    std::string llm = "mock";  // "mock" or "live"
    std::string fixture_path;  // mock fixture (JSON array of responses)
    std::string data_dir = "data";
    std::uint64_t seed = 42;
    // Test-split shapes; the train split uses gen as-is.
    int test_short_n = 25000;
    int test_short_days = 15;
    int test_long_n = 200000;
    int test_long_days = 180;
    EvolveConfig evolve;  // shared fields mirrored from the top level

    void validate() const;
    // Re-derives every per-section seed from the master seed.
    void apply_seed(std::uint64_t s);
};

// Missing keys fall back to defaults; unknown top-level keys are rejected.
RunConfig load_run_config(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const RunConfig& cfg);
void from_json(const nlohmann::json& j, RunConfig& cfg);

// FNV-1a hash of the canonical JSON dump.
std::string run_config_digest(const RunConfig& cfg);

// The three generated splits on one contiguous day timeline:
// train, then a short test window, then a long drifting test window.
struct GeneratedSplits {
    Dataset train;
    Dataset test_short;
    Dataset test_long;
};

GeneratedSplits generate_splits(const RunConfig& cfg);

// manifest.json: command, config digest, seed, tool version. No timestamps,
// so re-runs are byte-identical.
void write_manifest(const std::filesystem::path& dir, const std::string& command,
                    const RunConfig& cfg);

}  // namespace trisk
