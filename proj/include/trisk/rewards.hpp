#pragma once

#include <functional>

#include <Eigen/Dense>

namespace trisk {

// Batched per-step reward inputs. action/target/wgt are element-aligned over
// the transaction batch; action and target hold 0/1 values, wgt is positive
// dollar weight. current_step is 0 (pre-auth) or 1 (post-auth).
struct RewardContext {
    int current_step = 0;
    Eigen::ArrayXd action;
    Eigen::ArrayXd target;
    Eigen::ArrayXd wgt;

    // Throws ConfigError on mismatched lengths, bad step, or non-positive wgt.
    void validate() const;
};

// A reward function maps a batch context to a per-transaction reward vector of
// the same length. Implementations may throw (e.g. expression evaluation).
using RewardFn = std::function<Eigen::ArrayXd(const RewardContext&)>;

// Stage-wise precision-constraint reward: blocked fraud earns (1-alpha)*wgt,
// blocked legit costs alpha*wgt, passed transactions earn 0. The step-0 alpha
// must be below the step-1 alpha so early blocking is cheaper.
struct PrecisionRewardParams {
    double alpha_step0 = 0.5;
    double alpha_step1 = 0.7;

    void validate() const;
};

Eigen::ArrayXd precision_reward(const RewardContext& ctx, const PrecisionRewardParams& params);

// Reference reward designs produced by LLM evolution runs, kept as fixed
// baselines: one from a zero-shot run, one from a few-shot run.
Eigen::ArrayXd evolved_zero_shot_reward(const RewardContext& ctx);
Eigen::ArrayXd evolved_few_shot_reward(const RewardContext& ctx);

RewardFn make_precision_reward_fn(const PrecisionRewardParams& params);

}  // namespace trisk
