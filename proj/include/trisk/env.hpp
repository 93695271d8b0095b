#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "trisk/rewards.hpp"
#include "trisk/synthdata.hpp"

namespace trisk {

// Issuer check applied between the two decision steps. Disabled by default,
// in which case every transaction passed at step 0 reaches step 1.
struct IssuerConfig {
    bool enabled = false;
    double p_approve_legit = 0.98;
    double p_approve_fraud = 0.85;

    void validate() const;
};

// Fixed per-transaction issuer realization: approval is a deterministic
// function of the transaction id and label, so training episodes and offline
// threshold evaluation see the same issuer world. Always true when disabled.
bool issuer_approves(const IssuerConfig& cfg, const TransactionRecord& r);

// State layouts fed to the policy:
//  - ScoresWithStage: [pre0, pre1, post0, post1, stage0, stage1] with post
//    scores zero-masked at step 0 and a one-hot stage indicator (default).
//  - ScoresOnly: [pre0, pre1, post0, post1] with post scores zero-masked at
//    step 0 acting as the implicit stage signal.
enum class StateLayout { ScoresWithStage, ScoresOnly };

int state_dim(StateLayout layout);

Eigen::VectorXd make_state(const TransactionRecord& r, int stage,
                           StateLayout layout = StateLayout::ScoresWithStage);

// States for a whole batch, one column per transaction.
Eigen::MatrixXd make_state_batch(std::span<const TransactionRecord> batch, int stage,
                                 StateLayout layout = StateLayout::ScoresWithStage);

enum class IssuerOutcome { NotReached, Approved, Declined };

// One episode over a transaction batch. Vectors are batch-aligned; step-1
// entries of transactions that never reached step 1 hold zeros.
struct TrajectoryBatch {
    Eigen::Index batch_size = 0;
    StateLayout layout = StateLayout::ScoresWithStage;
    Eigen::MatrixXd states0, states1;
    Eigen::ArrayXd probs0, probs1;    // block probabilities emitted by the policy
    Eigen::ArrayXd actions0, actions1;  // 1 = block, 0 = pass
    Eigen::ArrayXd logp0, logp1;      // log-probability of the taken action
    Eigen::ArrayXd alive1;            // 1 if the transaction reached step 1
    Eigen::ArrayXd rewards0, rewards1;
    Eigen::ArrayXd target, wgt;
    std::vector<IssuerOutcome> issuer;
    std::uint64_t dropout_seed0 = 0, dropout_seed1 = 0;  // per-step policy noise streams

    double total_reward() const { return rewards0.sum() + rewards1.sum(); }
};

// The policy maps a batch of states at a given stage to block probabilities in
// [0, 1]. The dropout seed parameterizes any stochastic forward pass; plain
// policies ignore it.
using PolicyFn =
    std::function<Eigen::ArrayXd(const Eigen::MatrixXd& states, int stage, std::uint64_t seed)>;

// Runs one two-step episode: step-0 decisions on the full batch, issuer check
// on step-0 passes, step-1 decisions on survivors. Rewards come from
// reward_fn with full-batch vectors; dead step-1 entries are zeroed. Action
// sampling is deterministic given rng_seed; issuer outcomes follow
// issuer_approves. A throwing reward_fn or policy surfaces as EpisodeError.
TrajectoryBatch run_episode(std::span<const TransactionRecord> batch, const PolicyFn& policy,
                            const RewardFn& reward_fn, const IssuerConfig& issuer,
                            StateLayout layout, std::uint64_t rng_seed);

}  // namespace trisk
