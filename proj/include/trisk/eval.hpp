#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "trisk/env.hpp"
#include "trisk/policy.hpp"
#include "trisk/synthdata.hpp"

namespace trisk {

// Offline block probabilities per transaction: p0 from the pre-auth state,
// p1 from the post-auth state, both in eval mode (no dropout).
struct StageScores {
    Eigen::ArrayXd p0;
    Eigen::ArrayXd p1;
};

StageScores score_dataset(const PolicyParams& params, const Dataset& d,
                          StateLayout layout = StateLayout::ScoresWithStage);

// Fixed issuer realization per transaction (see issuer_approves); 1 means the
// transaction would reach stage 1 if passed at stage 0.
std::vector<char> issuer_mask(const IssuerConfig& issuer, const Dataset& d);

// Deployment rule for a threshold pair: block at stage 0 when p0 >= t0, else
// block at stage 1 when the issuer approved and p1 >= t1. +infinity disables
// a stage; an empty approved mask means every transaction reaches stage 1.
struct StageMasks {
    std::vector<char> blocked0;
    std::vector<char> blocked1;
};

StageMasks apply_thresholds(const StageScores& scores, double t0, double t1,
                            const std::vector<char>& approved = {});

struct DollarConfusion {
    double tp = 0.0;  // fraud GMV blocked
    double fp = 0.0;  // legit GMV blocked
    double fn = 0.0;  // fraud GMV passed
    double tn = 0.0;  // legit GMV passed

    double total() const { return tp + fp + fn + tn; }
};

// Dollar-weighted metrics for a blocking outcome. $Recall = fraud GMV blocked
// over total fraud GMV (1 when there is no fraud GMV); $Precision = fraud GMV
// blocked over total GMV blocked (1 when nothing is blocked).
struct DollarMetrics {
    double recall = 1.0;
    double precision = 1.0;
    bool blocked_nothing = true;
    bool zero_fraud = false;
    DollarConfusion confusion;
    double tp_gmv_step0 = 0.0, tp_gmv_step1 = 0.0;
    double blocked_gmv_step0 = 0.0, blocked_gmv_step1 = 0.0;
};

DollarMetrics dollar_metrics(const StageMasks& masks, const Dataset& d);

struct ThresholdResult {
    double t0 = 0.0, t1 = 0.0;
    double precision = 1.0;
    double recall = 1.0;
    bool blocked_nothing = true;
};

// Exact search over observed score values plus a +infinity sentinel per
// stage: among pairs whose $Recall reaches theta, picks the one maximizing
// $Precision, breaking ties toward higher t0 then higher t1. Issuer-declined
// transactions never block at stage 1 but stay in the recall denominator.
// Throws ConfigError for theta outside (0, 1).
ThresholdResult threshold_search(const StageScores& scores, const Dataset& d, double theta,
                                 const IssuerConfig& issuer = {});

// Same search evaluated for several recall targets in one pass.
std::vector<ThresholdResult> threshold_search_multi(const StageScores& scores, const Dataset& d,
                                                    const std::vector<double>& thetas,
                                                    const IssuerConfig& issuer = {});

// Single-threshold reference strategy: rank by one pre-auth model score.
struct BaselineConfig {
    int pre_score_index = 0;  // pre_scores[0] is the production default
};

struct BaselineResult {
    double threshold = 0.0;
    double precision = 1.0;
    double recall = 1.0;
    bool blocked_nothing = true;
};

BaselineResult baseline_eval(const Dataset& d, double theta, const BaselineConfig& cfg = {});
std::vector<BaselineResult> baseline_eval_multi(const Dataset& d,
                                                const std::vector<double>& thetas,
                                                const BaselineConfig& cfg = {});

struct LevelResult {
    double theta = 0.0;
    double achieved_recall = 0.0;
    double precision = 0.0;
    double t0 = 0.0, t1 = 0.0;
    bool blocked_nothing = false;
};

// Stage-split GMV figures, computed from the threshold pair chosen at the
// median recall level (the same masks that back the confusion numbers).
struct StageGmv {
    double reference_theta = 0.0;
    double tp_gmv_step0 = 0.0, tp_gmv_step1 = 0.0;
    double blocked_gmv_step0 = 0.0, blocked_gmv_step1 = 0.0;
};

struct EvalReport {
    std::vector<LevelResult> levels;
    std::vector<double> baseline_precisions;  // aligned with levels
    std::vector<double> baseline_recalls;
    StageGmv stage;
    bool zero_fraud = false;
};

EvalReport evaluate_policy(const PolicyParams& params, const Dataset& d,
                           const std::vector<double>& thetas,
                           StateLayout layout = StateLayout::ScoresWithStage,
                           const IssuerConfig& issuer = {});

struct WindowReport {
    int window_start = 0;
    EvalReport report;
};

// Splits by consecutive day windows and evaluates each window independently
// (thresholds re-searched per window).
std::vector<WindowReport> longterm_report(const PolicyParams& params, const Dataset& d,
                                          int window_days, const std::vector<double>& thetas,
                                          StateLayout layout = StateLayout::ScoresWithStage,
                                          const IssuerConfig& issuer = {});

// CSV series: window_start,theta,precision,baseline_precision,recall,t0,t1
std::string longterm_csv(const std::vector<WindowReport>& windows);

void to_json(nlohmann::json& j, const EvalReport& r);
void from_json(const nlohmann::json& j, EvalReport& r);

}  // namespace trisk
