#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace trisk {

struct BetaParams {
    double a = 1.0;
    double b = 1.0;
};

// Per-score generative model, one Beta distribution per label.
struct ScoreModel {
    BetaParams legit;
    BetaParams fraud;
};

struct LogNormalParams {
    double mu = 4.0;
    double sigma = 1.0;
};

// Configuration for the synthetic transaction generator. Scores are indexed
// pre0, pre1, post0, post1; post scores of fraud records get signal_boost_post
// added (then clipped to [0, 1]) so the downstream stage carries more signal.
struct GenConfig {
    std::int64_t n_transactions = 100000;
    double fraud_rate = 0.0132;
    std::array<ScoreModel, 4> score_beta = {
        ScoreModel{{1.6, 8.0}, {6.0, 2.5}},   // pre0
        ScoreModel{{2.0, 7.0}, {3.2, 4.8}},   // pre1
        ScoreModel{{1.8, 6.0}, {4.5, 3.5}},   // post0
        ScoreModel{{2.0, 6.0}, {4.0, 4.0}},   // post1
    };
    double signal_boost_post = 0.22;
    LogNormalParams weight_legit = {4.0, 1.0};
    LogNormalParams weight_fraud = {4.6, 0.9};
    double fraud_value_decay = 0.995;  // per-day geometric decay of fraud GMV
    int n_days = 14;
    std::uint64_t seed = 42;

    // Throws ConfigError naming the offending field.
    void validate() const;
};

struct TransactionRecord {
    std::int64_t id = 0;
    int day = 0;
    std::array<double, 2> pre_scores = {0.0, 0.0};
    std::array<double, 2> post_scores = {0.0, 0.0};
    bool is_fraud = false;
    double wgt = 0.0;
};

struct DatasetMeta {
    std::uint64_t seed = 0;
    std::string config_digest;
    int day_min = 0;
    int day_max = 0;  // inclusive
};

struct Dataset {
    std::vector<TransactionRecord> records;
    DatasetMeta meta;
};

// Stable 64-bit FNV-1a digest of the canonical JSON form of a config.
std::string config_digest(const GenConfig& cfg);

// Deterministic generation: identical (config, seed) pairs give identical
// datasets. Records come out sorted by day.
Dataset generate_dataset(const GenConfig& cfg);

// Partitions by day: k strictly increasing cut points give k+1 datasets,
// split i holding days [boundaries[i-1], boundaries[i]).
std::vector<Dataset> split_dataset(const Dataset& d, const std::vector<int>& boundaries);

// CSV round-trip. Header: id,day,pre0,pre1,post0,post1,label,wgt
// with floats at 6 decimals.
std::string to_csv(const Dataset& d);
void save_csv(const Dataset& d, const std::filesystem::path& path);
Dataset load_csv(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const GenConfig& cfg);
void from_json(const nlohmann::json& j, GenConfig& cfg);

}  // namespace trisk
