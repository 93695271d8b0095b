#include "trisk/rewards.hpp"

#include "trisk/errors.hpp"

namespace trisk {

void RewardContext::validate() const {
    if (current_step != 0 && current_step != 1)
        throw ConfigError("current_step: must be 0 or 1");
    if (action.size() != target.size() || action.size() != wgt.size())
        throw ConfigError("action/target/wgt: lengths must match");
    if ((wgt <= 0.0).any()) throw ConfigError("wgt: all weights must be positive");
    if (((action != 0.0) && (action != 1.0)).any())
        throw ConfigError("action: entries must be 0 or 1");
    if (((target != 0.0) && (target != 1.0)).any())
        throw ConfigError("target: entries must be 0 or 1");
}

void PrecisionRewardParams::validate() const {
    if (!(alpha_step0 > 0.0) || !(alpha_step0 < 1.0))
        throw ConfigError("alpha_step0: must be in (0, 1)");
    if (!(alpha_step1 > 0.0) || !(alpha_step1 < 1.0))
        throw ConfigError("alpha_step1: must be in (0, 1)");
    if (!(alpha_step0 < alpha_step1))
        throw ConfigError("alpha_step0: must be below alpha_step1");
}

Eigen::ArrayXd precision_reward(const RewardContext& ctx, const PrecisionRewardParams& params) {
    ctx.validate();
    params.validate();
    const double alpha = ctx.current_step == 0 ? params.alpha_step0 : params.alpha_step1;
    // (1-alpha)*wgt on blocked fraud, -alpha*wgt on blocked legit, 0 on pass.
    return ctx.action * (ctx.target * (1.0 - alpha) - (1.0 - ctx.target) * alpha) * ctx.wgt;
}

Eigen::ArrayXd evolved_zero_shot_reward(const RewardContext& ctx) {
    ctx.validate();
    Eigen::ArrayXd reward = ctx.action * ctx.target * ctx.wgt;
    if (ctx.current_step == 0)
        reward *= 1.2;
    else if (ctx.current_step == 1)
        reward *= 0.9;
    const Eigen::ArrayXd fn = (1.0 - ctx.action) * ctx.target * ctx.wgt;
    reward -= fn * 0.5;
    const Eigen::ArrayXd fp = ctx.action * (1.0 - ctx.target) * ctx.wgt;
    reward -= fp * 0.1;
    const Eigen::ArrayXd low_weight_penalty = ctx.action * (ctx.wgt < 50.0).cast<double>();
    reward -= low_weight_penalty * 0.005;
    reward /= ctx.wgt;
    return reward;
}

Eigen::ArrayXd evolved_few_shot_reward(const RewardContext& ctx) {
    ctx.validate();
    const double gamma_positive = 1.15;
    const double gamma_negative = 0.9;
    const double alpha = 1.2;
    const Eigen::ArrayXd tp = (ctx.action == 1.0 && ctx.target == 1.0).cast<double>();
    const Eigen::ArrayXd fp = (ctx.action == 1.0 && ctx.target == 0.0).cast<double>();
    const Eigen::ArrayXd fn = (ctx.action == 0.0 && ctx.target == 1.0).cast<double>();
    if (ctx.current_step == 0)
        return gamma_positive *
               (tp * ctx.wgt - fp * (alpha * 0.005) * ctx.wgt - 0.15 * fn * ctx.wgt);
    return gamma_negative * (tp * ctx.wgt - fp * (alpha * 0.002) * ctx.wgt - 0.10 * fn * ctx.wgt);
}

RewardFn make_precision_reward_fn(const PrecisionRewardParams& params) {
    params.validate();
    return [params](const RewardContext& ctx) { return precision_reward(ctx, params); };
}

}  // namespace trisk
