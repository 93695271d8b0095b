#include "trisk/env.hpp"

#include <cmath>

#include "trisk/errors.hpp"
#include "trisk/random.hpp"

namespace trisk {

namespace {

double clamp_prob(double p) { return std::min(1.0 - 1e-12, std::max(1e-12, p)); }

Eigen::ArrayXd action_log_prob(const Eigen::ArrayXd& probs, const Eigen::ArrayXd& actions) {
    Eigen::ArrayXd out(probs.size());
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        const double p = clamp_prob(probs[i]);
        out[i] = actions[i] != 0.0 ? std::log(p) : std::log(1.0 - p);
    }
    return out;
}

}  // namespace

void IssuerConfig::validate() const {
    if (p_approve_legit < 0.0 || p_approve_legit > 1.0)
        throw ConfigError("p_approve_legit: must be in [0, 1]");
    if (p_approve_fraud < 0.0 || p_approve_fraud > 1.0)
        throw ConfigError("p_approve_fraud: must be in [0, 1]");
}

bool issuer_approves(const IssuerConfig& cfg, const TransactionRecord& r) {
    if (!cfg.enabled) return true;
    const double p = r.is_fraud ? cfg.p_approve_fraud : cfg.p_approve_legit;
    Rng rng(mix_seed(0x1553u, static_cast<std::uint64_t>(r.id)));
    return rng.uniform() < p;
}

int state_dim(StateLayout layout) {
    return layout == StateLayout::ScoresWithStage ? 6 : 4;
}

Eigen::VectorXd make_state(const TransactionRecord& r, int stage, StateLayout layout) {
    if (stage != 0 && stage != 1) throw ConfigError("stage: must be 0 or 1");
    Eigen::VectorXd s(state_dim(layout));
    s[0] = r.pre_scores[0];
    s[1] = r.pre_scores[1];
    // Post-auth scores only exist once the transaction reached the second step.
    s[2] = stage == 1 ? r.post_scores[0] : 0.0;
    s[3] = stage == 1 ? r.post_scores[1] : 0.0;
    if (layout == StateLayout::ScoresWithStage) {
        s[4] = stage == 0 ? 1.0 : 0.0;
        s[5] = stage == 1 ? 1.0 : 0.0;
    }
    return s;
}

Eigen::MatrixXd make_state_batch(std::span<const TransactionRecord> batch, int stage,
                                 StateLayout layout) {
    Eigen::MatrixXd m(state_dim(layout), static_cast<Eigen::Index>(batch.size()));
    for (std::size_t i = 0; i < batch.size(); ++i)
        m.col(static_cast<Eigen::Index>(i)) = make_state(batch[i], stage, layout);
    return m;
}

TrajectoryBatch run_episode(std::span<const TransactionRecord> batch, const PolicyFn& policy,
                            const RewardFn& reward_fn, const IssuerConfig& issuer,
                            StateLayout layout, std::uint64_t rng_seed) {
    issuer.validate();
    const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
    TrajectoryBatch traj;
    traj.batch_size = n;
    traj.layout = layout;
    traj.target.resize(n);
    traj.wgt.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        traj.target[i] = batch[static_cast<std::size_t>(i)].is_fraud ? 1.0 : 0.0;
        traj.wgt[i] = batch[static_cast<std::size_t>(i)].wgt;
    }
    traj.issuer.assign(static_cast<std::size_t>(n), IssuerOutcome::NotReached);
    traj.dropout_seed0 = mix_seed(rng_seed, 101);
    traj.dropout_seed1 = mix_seed(rng_seed, 102);

    Rng rng(mix_seed(rng_seed, 0));

    traj.states0 = make_state_batch(batch, 0, layout);
    try {
        traj.probs0 = policy(traj.states0, 0, traj.dropout_seed0);
    } catch (const std::exception& e) {
        throw EpisodeError(std::string("policy failed at step 0: ") + e.what());
    }
    if (traj.probs0.size() != n) throw EpisodeError("policy returned wrong batch size at step 0");
    if ((traj.probs0 < 0.0).any() || (traj.probs0 > 1.0).any())
        throw EpisodeError("policy emitted probability outside [0, 1] at step 0");

    traj.actions0.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
        traj.actions0[i] = rng.bernoulli(traj.probs0[i]) ? 1.0 : 0.0;
    traj.logp0 = action_log_prob(traj.probs0, traj.actions0);

    // Issuer check on step-0 passes; blocked transactions never reach it.
    traj.alive1.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (traj.actions0[i] != 0.0) {
            traj.alive1[i] = 0.0;
            continue;
        }
        const bool approved = issuer_approves(issuer, batch[static_cast<std::size_t>(i)]);
        traj.alive1[i] = approved ? 1.0 : 0.0;
        traj.issuer[static_cast<std::size_t>(i)] =
            approved ? IssuerOutcome::Approved : IssuerOutcome::Declined;
    }

    traj.states1 = make_state_batch(batch, 1, layout);
    try {
        traj.probs1 = policy(traj.states1, 1, traj.dropout_seed1);
    } catch (const std::exception& e) {
        throw EpisodeError(std::string("policy failed at step 1: ") + e.what());
    }
    if (traj.probs1.size() != n) throw EpisodeError("policy returned wrong batch size at step 1");
    if ((traj.probs1 < 0.0).any() || (traj.probs1 > 1.0).any())
        throw EpisodeError("policy emitted probability outside [0, 1] at step 1");

    // Step-1 actions are only sampled for transactions still alive.
    traj.actions1 = Eigen::ArrayXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i)
        if (traj.alive1[i] != 0.0) traj.actions1[i] = rng.bernoulli(traj.probs1[i]) ? 1.0 : 0.0;
    traj.logp1 = action_log_prob(traj.probs1, traj.actions1);

    RewardContext ctx0{0, traj.actions0, traj.target, traj.wgt};
    RewardContext ctx1{1, traj.actions1, traj.target, traj.wgt};
    try {
        traj.rewards0 = reward_fn(ctx0);
        traj.rewards1 = reward_fn(ctx1);
    } catch (const std::exception& e) {
        throw EpisodeError(std::string("reward function failed: ") + e.what());
    }
    if (traj.rewards0.size() != n || traj.rewards1.size() != n)
        throw EpisodeError("reward function returned wrong batch size");
    // Rewards are local to the step: dead step-1 entries contribute nothing.
    traj.rewards1 *= traj.alive1;
    return traj;
}

}  // namespace trisk
