#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "trisk/env.hpp"

namespace trisk {

// Feed-forward block-probability network: three GELU hidden layers of sizes
// 8, 32 and 8 (each followed by dropout when training), then a sigmoid unit.
struct PolicyParams {
    std::vector<Eigen::MatrixXd> weights;  // layer l maps weights[l].cols() -> rows()
    std::vector<Eigen::VectorXd> biases;
    double dropout_rate = 0.1;
    std::uint64_t init_seed = 0;

    int input_dim() const { return weights.empty() ? 0 : static_cast<int>(weights[0].cols()); }
    std::size_t n_layers() const { return weights.size(); }

    // He-normal weights, zero biases; deterministic in seed.
    static PolicyParams init(int input_dim, std::uint64_t seed, double dropout_rate = 0.1);
    // All-zero parameters (forward emits exactly 0.5 everywhere).
    static PolicyParams zeros(int input_dim, double dropout_rate = 0.0);
};

// Block probabilities for a batch of state columns. In train mode, dropout
// masks are drawn deterministically from dropout_seed; in eval mode the seed
// is ignored and the pass is noise-free.
Eigen::ArrayXd policy_forward(const PolicyParams& params, const Eigen::MatrixXd& states,
                              bool train_mode, std::uint64_t dropout_seed);

struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    bool all_finite() const;
    static Gradients zeros_like(const PolicyParams& params);
};

struct TrainConfig {
    int n_episodes = 150;
    int batch_size = 1024;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double entropy_coef = 0.0;    // optional entropy bonus
    bool center_returns = false;  // optional per-batch mean-return subtraction
    std::uint64_t seed = 42;

    void validate() const;
};

struct AdamState {
    std::vector<Eigen::MatrixXd> m_weights, v_weights;
    std::vector<Eigen::VectorXd> m_biases, v_biases;
    long step = 0;

    static AdamState init(const PolicyParams& params);
};

// REINFORCE loss over a trajectory (undiscounted returns, alive-masked,
// averaged over the batch). Recomputes the forward passes with the
// trajectory's dropout seeds so the loss matches the sampled rollout.
double reinforce_loss(const PolicyParams& params, const TrajectoryBatch& traj,
                      const TrainConfig& cfg);

Gradients reinforce_gradients(const PolicyParams& params, const TrajectoryBatch& traj,
                              const TrainConfig& cfg);

struct StepStats {
    double total_reward = 0.0;
    double mean_reward = 0.0;
    int blocks_step0 = 0;
    int blocks_step1 = 0;
};

// One Adam step on the REINFORCE gradient. Throws TrainError on a non-finite
// gradient. With all-zero rewards the parameters are left exactly unchanged.
StepStats reinforce_update(PolicyParams& params, const TrajectoryBatch& traj,
                           const TrainConfig& cfg, AdamState& opt);

struct TrainStats {
    std::vector<double> episode_mean_reward;  // one entry per episode
    double initial_total_reward = 0.0;
    double final_total_reward = 0.0;
    int final_blocks_step0 = 0;
    int final_blocks_step1 = 0;
};

struct TrainResult {
    PolicyParams params;
    TrainStats stats;
};

// Runs cfg.n_episodes full passes over the dataset; each pass reshuffles and
// applies one rollout + update per minibatch. Deterministic given (dataset,
// cfg.seed, initial params).
TrainResult train_agent(const Dataset& data, const RewardFn& reward_fn, const TrainConfig& cfg,
                        const IssuerConfig& issuer, StateLayout layout,
                        const PolicyParams* initial = nullptr);

// Flat binary format: "TRSK" magic, u16 version, then per-layer shapes with
// row-major little-endian 64-bit floats (weights, then bias).
std::vector<std::uint8_t> serialize_policy(const PolicyParams& params);
PolicyParams deserialize_policy(const std::vector<std::uint8_t>& bytes,
                                double dropout_rate = 0.1);
void save_policy(const PolicyParams& params, const std::filesystem::path& path);
PolicyParams load_policy(const std::filesystem::path& path, double dropout_rate = 0.1);

}  // namespace trisk
