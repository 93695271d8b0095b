#include "trisk/policy.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "trisk/errors.hpp"
#include "trisk/random.hpp"

namespace trisk {

namespace {

constexpr int kHidden[3] = {8, 32, 8};
constexpr double kSqrt1_2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kSqrt1_2)); }

double gelu_grad(double x) {
    const double phi = kInvSqrt2Pi * std::exp(-0.5 * x * x);
    return 0.5 * (1.0 + std::erf(x * kSqrt1_2)) + x * phi;
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double clamp_prob(double p) { return std::min(1.0 - 1e-12, std::max(1e-12, p)); }

// Dropout masks are drawn in column-major order from a per-layer stream, so a
// given (seed, layer) pair always produces the same mask.
Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate,
                             std::uint64_t seed, int layer) {
    Eigen::MatrixXd mask(rows, cols);
    Rng rng(mix_seed(seed, 7000 + static_cast<std::uint64_t>(layer)));
    const double scale = 1.0 / (1.0 - rate);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i)
            mask(i, j) = rng.uniform() >= rate ? scale : 0.0;
    return mask;
}

struct ForwardCache {
    std::vector<Eigen::MatrixXd> pre;    // affine outputs per hidden layer
    std::vector<Eigen::MatrixXd> post;   // activations after GELU + dropout
    std::vector<Eigen::MatrixXd> masks;  // dropout masks (empty when unused)
    Eigen::ArrayXd logits;
    Eigen::ArrayXd probs;
};

void check_input(const PolicyParams& params, const Eigen::MatrixXd& states) {
    if (params.weights.empty()) throw ConfigError("policy has no layers");
    if (states.rows() != params.weights[0].cols())
        throw ConfigError("state dimension " + std::to_string(states.rows()) +
                          " does not match policy input " +
                          std::to_string(params.weights[0].cols()));
}

ForwardCache forward_cached(const PolicyParams& params, const Eigen::MatrixXd& states,
                            bool train_mode, std::uint64_t dropout_seed) {
    check_input(params, states);
    const std::size_t n_hidden = params.weights.size() - 1;
    const bool use_dropout = train_mode && params.dropout_rate > 0.0;
    ForwardCache fc;
    Eigen::MatrixXd x = states;
    for (std::size_t l = 0; l < n_hidden; ++l) {
        Eigen::MatrixXd z = params.weights[l] * x;
        z.colwise() += params.biases[l];
        Eigen::MatrixXd h = z.unaryExpr([](double v) { return gelu(v); });
        if (use_dropout) {
            Eigen::MatrixXd mask = dropout_mask(h.rows(), h.cols(), params.dropout_rate,
                                                dropout_seed, static_cast<int>(l));
            h.array() *= mask.array();
            fc.masks.push_back(std::move(mask));
        }
        fc.pre.push_back(std::move(z));
        fc.post.push_back(h);
        x = std::move(h);
    }
    Eigen::MatrixXd z_out = params.weights[n_hidden] * x;
    z_out.colwise() += params.biases[n_hidden];
    fc.logits = z_out.row(0).array();
    fc.probs = fc.logits.unaryExpr([](double z) { return sigmoid(z); });
    return fc;
}

// Backprop from d(loss)/d(logit) through the cached pass; accumulates into g.
void backward_logits(const PolicyParams& params, const Eigen::MatrixXd& states,
                     const ForwardCache& fc, const Eigen::ArrayXd& dlogits, Gradients& g) {
    const std::size_t n_hidden = params.weights.size() - 1;
    Eigen::MatrixXd delta(1, dlogits.size());
    delta.row(0) = dlogits.matrix().transpose();

    const Eigen::MatrixXd& last_in = n_hidden == 0 ? states : fc.post[n_hidden - 1];
    g.weights[n_hidden] += delta * last_in.transpose();
    g.biases[n_hidden] += delta.rowwise().sum();

    Eigen::MatrixXd grad_h = params.weights[n_hidden].transpose() * delta;
    for (std::size_t l = n_hidden; l-- > 0;) {
        if (!fc.masks.empty()) grad_h.array() *= fc.masks[l].array();
        const Eigen::MatrixXd grad_z =
            grad_h.array() * fc.pre[l].unaryExpr([](double v) { return gelu_grad(v); }).array();
        const Eigen::MatrixXd& in = l == 0 ? states : fc.post[l - 1];
        g.weights[l] += grad_z * in.transpose();
        g.biases[l] += grad_z.rowwise().sum();
        if (l > 0) grad_h = params.weights[l].transpose() * grad_z;
    }
}

// Per-step return coefficients and loss pieces shared by loss and gradients.
struct StepInputs {
    const Eigen::MatrixXd* states;
    Eigen::ArrayXd alive;
    Eigen::ArrayXd actions;
    Eigen::ArrayXd returns;
    std::uint64_t dropout_seed;
};

std::vector<StepInputs> step_inputs(const TrajectoryBatch& traj, const TrainConfig& cfg) {
    const Eigen::Index n = traj.batch_size;
    Eigen::ArrayXd g0 = traj.rewards0 + traj.rewards1;  // undiscounted return-to-go
    Eigen::ArrayXd g1 = traj.rewards1;
    if (cfg.center_returns) {
        g0 -= g0.mean();
        const double alive_count = traj.alive1.sum();
        if (alive_count > 0.0) {
            const double mean1 = (g1 * traj.alive1).sum() / alive_count;
            g1 = (g1 - mean1) * traj.alive1;
        }
    }
    std::vector<StepInputs> steps(2);
    steps[0] = {&traj.states0, Eigen::ArrayXd::Ones(n), traj.actions0, std::move(g0),
                traj.dropout_seed0};
    steps[1] = {&traj.states1, traj.alive1, traj.actions1, std::move(g1), traj.dropout_seed1};
    return steps;
}

}  // namespace

void TrainConfig::validate() const {
    if (n_episodes < 0) throw ConfigError("n_episodes: must be non-negative");
    if (batch_size < 1) throw ConfigError("batch_size: must be positive");
    if (!(lr > 0.0)) throw ConfigError("lr: must be positive");
    if (beta1 < 0.0 || beta1 >= 1.0) throw ConfigError("beta1: must be in [0, 1)");
    if (beta2 < 0.0 || beta2 >= 1.0) throw ConfigError("beta2: must be in [0, 1)");
    if (!(eps > 0.0)) throw ConfigError("eps: must be positive");
    if (entropy_coef < 0.0) throw ConfigError("entropy_coef: must be non-negative");
}

PolicyParams PolicyParams::init(int input_dim, std::uint64_t seed, double dropout_rate) {
    if (input_dim < 1) throw ConfigError("input_dim: must be positive");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw ConfigError("dropout_rate: must be in [0, 1)");
    PolicyParams p;
    p.dropout_rate = dropout_rate;
    p.init_seed = seed;
    int in = input_dim;
    std::vector<int> dims(std::begin(kHidden), std::end(kHidden));
    dims.push_back(1);
    for (std::size_t l = 0; l < dims.size(); ++l) {
        Rng rng(mix_seed(seed, l));
        const double scale = std::sqrt(2.0 / in);
        Eigen::MatrixXd w(dims[l], in);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = scale * rng.normal();
        p.weights.push_back(std::move(w));
        p.biases.push_back(Eigen::VectorXd::Zero(dims[l]));
        in = dims[l];
    }
    return p;
}

PolicyParams PolicyParams::zeros(int input_dim, double dropout_rate) {
    PolicyParams p = init(input_dim, 0, dropout_rate);
    for (auto& w : p.weights) w.setZero();
    return p;
}

Eigen::ArrayXd policy_forward(const PolicyParams& params, const Eigen::MatrixXd& states,
                              bool train_mode, std::uint64_t dropout_seed) {
    return forward_cached(params, states, train_mode, dropout_seed).probs;
}

bool Gradients::all_finite() const {
    for (const auto& w : weights)
        if (!w.allFinite()) return false;
    for (const auto& b : biases)
        if (!b.allFinite()) return false;
    return true;
}

Gradients Gradients::zeros_like(const PolicyParams& params) {
    Gradients g;
    for (const auto& w : params.weights) g.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    for (const auto& b : params.biases) g.biases.push_back(Eigen::VectorXd::Zero(b.size()));
    return g;
}

double reinforce_loss(const PolicyParams& params, const TrajectoryBatch& traj,
                      const TrainConfig& cfg) {
    const double inv_b = 1.0 / static_cast<double>(traj.batch_size);
    double loss = 0.0;
    for (const StepInputs& s : step_inputs(traj, cfg)) {
        const ForwardCache fc = forward_cached(params, *s.states, true, s.dropout_seed);
        for (Eigen::Index i = 0; i < traj.batch_size; ++i) {
            if (s.alive[i] == 0.0) continue;
            const double p = clamp_prob(fc.probs[i]);
            const double logp = s.actions[i] != 0.0 ? std::log(p) : std::log(1.0 - p);
            loss -= inv_b * s.returns[i] * logp;
            if (cfg.entropy_coef > 0.0) {
                const double h = -p * std::log(p) - (1.0 - p) * std::log(1.0 - p);
                loss -= inv_b * cfg.entropy_coef * h;
            }
        }
    }
    return loss;
}

Gradients reinforce_gradients(const PolicyParams& params, const TrajectoryBatch& traj,
                              const TrainConfig& cfg) {
    const double inv_b = 1.0 / static_cast<double>(traj.batch_size);
    Gradients g = Gradients::zeros_like(params);
    for (const StepInputs& s : step_inputs(traj, cfg)) {
        const ForwardCache fc = forward_cached(params, *s.states, true, s.dropout_seed);
        Eigen::ArrayXd dlogits(traj.batch_size);
        for (Eigen::Index i = 0; i < traj.batch_size; ++i) {
            if (s.alive[i] == 0.0) {
                dlogits[i] = 0.0;
                continue;
            }
            const double p = clamp_prob(fc.probs[i]);
            dlogits[i] = -inv_b * s.returns[i] * (s.actions[i] - p);
            if (cfg.entropy_coef > 0.0)
                dlogits[i] += inv_b * cfg.entropy_coef * fc.logits[i] * p * (1.0 - p);
        }
        backward_logits(params, *s.states, fc, dlogits, g);
    }
    return g;
}

AdamState AdamState::init(const PolicyParams& params) {
    AdamState s;
    for (const auto& w : params.weights) {
        s.m_weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
        s.v_weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    }
    for (const auto& b : params.biases) {
        s.m_biases.push_back(Eigen::VectorXd::Zero(b.size()));
        s.v_biases.push_back(Eigen::VectorXd::Zero(b.size()));
    }
    return s;
}

namespace {

template <typename Mat>
void adam_step_tensor(Mat& param, Mat& m, Mat& v, const Mat& grad, const TrainConfig& cfg,
                      double bc1, double bc2) {
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    param.array() -= cfg.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps);
}

}  // namespace

StepStats reinforce_update(PolicyParams& params, const TrajectoryBatch& traj,
                           const TrainConfig& cfg, AdamState& opt) {
    cfg.validate();
    const Gradients g = reinforce_gradients(params, traj, cfg);
    if (!g.all_finite()) throw TrainError("non-finite gradient");
    opt.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(opt.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(opt.step));
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        adam_step_tensor(params.weights[l], opt.m_weights[l], opt.v_weights[l], g.weights[l], cfg,
                         bc1, bc2);
        adam_step_tensor(params.biases[l], opt.m_biases[l], opt.v_biases[l], g.biases[l], cfg,
                         bc1, bc2);
    }
    StepStats st;
    st.total_reward = traj.total_reward();
    st.mean_reward = st.total_reward / static_cast<double>(traj.batch_size);
    st.blocks_step0 = static_cast<int>(traj.actions0.sum());
    st.blocks_step1 = static_cast<int>((traj.actions1 * traj.alive1).sum());
    return st;
}

TrainResult train_agent(const Dataset& data, const RewardFn& reward_fn, const TrainConfig& cfg,
                        const IssuerConfig& issuer, StateLayout layout,
                        const PolicyParams* initial) {
    cfg.validate();
    TrainResult result;
    result.params = initial ? *initial : PolicyParams::init(state_dim(layout),
                                                            mix_seed(cfg.seed, 1));
    if (cfg.n_episodes == 0) return result;
    if (data.records.empty()) throw TrainError("cannot train on an empty dataset");

    PolicyParams& params = result.params;
    AdamState opt = AdamState::init(params);
    const PolicyFn policy = [&params](const Eigen::MatrixXd& states, int, std::uint64_t seed) {
        return policy_forward(params, states, true, seed);
    };

    Rng shuffle_rng(mix_seed(cfg.seed, 2));
    std::vector<std::size_t> order(data.records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const std::size_t batch_size =
        std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), order.size());

    // One episode = one full pass over the shuffled dataset, one update per
    // minibatch (trailing partial batch included).
    std::vector<TransactionRecord> batch;
    for (int e = 0; e < cfg.n_episodes; ++e) {
        shuffle_rng.shuffle(order);
        double episode_reward = 0.0;
        int episode_blocks0 = 0;
        int episode_blocks1 = 0;
        const std::uint64_t episode_seed = mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(e));
        for (std::size_t start = 0, bi = 0; start < order.size(); start += batch_size, ++bi) {
            const std::size_t len = std::min(batch_size, order.size() - start);
            batch.resize(len);
            for (std::size_t k = 0; k < len; ++k) batch[k] = data.records[order[start + k]];
            const TrajectoryBatch traj =
                run_episode(batch, policy, reward_fn, issuer, layout, mix_seed(episode_seed, bi));
            const StepStats st = reinforce_update(params, traj, cfg, opt);
            episode_reward += st.total_reward;
            episode_blocks0 += st.blocks_step0;
            episode_blocks1 += st.blocks_step1;
        }
        result.stats.episode_mean_reward.push_back(episode_reward /
                                                   static_cast<double>(order.size()));
        if (e == 0) result.stats.initial_total_reward = episode_reward;
        result.stats.final_total_reward = episode_reward;
        result.stats.final_blocks_step0 = episode_blocks0;
        result.stats.final_blocks_step1 = episode_blocks1;
    }
    return result;
}

// ====================== serialization ======================

namespace {

constexpr char kMagic[4] = {'T', 'R', 'S', 'K'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof(bits));
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xff));
}

struct ByteReader {
    const std::vector<std::uint8_t>& bytes;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > bytes.size()) throw IoError("truncated policy file");
    }
    std::uint16_t u16() {
        need(2);
        const std::uint16_t v = static_cast<std::uint16_t>(bytes[pos] | (bytes[pos + 1] << 8));
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
        pos += 8;
        double d;
        std::memcpy(&d, &bits, sizeof(d));
        return d;
    }
};

}  // namespace

std::vector<std::uint8_t> serialize_policy(const PolicyParams& params) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u16(out, kVersion);
    put_u16(out, static_cast<std::uint16_t>(params.weights.size()));
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        const Eigen::MatrixXd& w = params.weights[l];
        put_u32(out, static_cast<std::uint32_t>(w.rows()));
        put_u32(out, static_cast<std::uint32_t>(w.cols()));
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) put_f64(out, w(r, c));
        for (Eigen::Index r = 0; r < params.biases[l].size(); ++r)
            put_f64(out, params.biases[l][r]);
    }
    return out;
}

PolicyParams deserialize_policy(const std::vector<std::uint8_t>& bytes, double dropout_rate) {
    ByteReader rd{bytes};
    rd.need(4);
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw IoError("bad policy file magic");
    rd.pos = 4;
    const std::uint16_t version = rd.u16();
    if (version != kVersion)
        throw IoError("unsupported policy file version " + std::to_string(version));
    const std::uint16_t n_layers = rd.u16();
    if (n_layers == 0) throw IoError("policy file has no layers");
    PolicyParams p;
    p.dropout_rate = dropout_rate;
    Eigen::Index prev_rows = -1;
    for (std::uint16_t l = 0; l < n_layers; ++l) {
        const std::uint32_t rows = rd.u32();
        const std::uint32_t cols = rd.u32();
        if (rows == 0 || cols == 0 || rows > 65536 || cols > 65536)
            throw IoError("corrupt policy layer shape");
        if (prev_rows >= 0 && static_cast<Eigen::Index>(cols) != prev_rows)
            throw IoError("inconsistent layer shapes in policy file");
        Eigen::MatrixXd w(rows, cols);
        for (std::uint32_t r = 0; r < rows; ++r)
            for (std::uint32_t c = 0; c < cols; ++c) w(r, c) = rd.f64();
        Eigen::VectorXd b(rows);
        for (std::uint32_t r = 0; r < rows; ++r) b[r] = rd.f64();
        p.weights.push_back(std::move(w));
        p.biases.push_back(std::move(b));
        prev_rows = static_cast<Eigen::Index>(rows);
    }
    if (rd.pos != bytes.size()) throw IoError("trailing bytes in policy file");
    return p;
}

void save_policy(const PolicyParams& params, const std::filesystem::path& path) {
    const std::vector<std::uint8_t> bytes = serialize_policy(params);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed: " + path.string());
}

PolicyParams load_policy(const std::filesystem::path& path, double dropout_rate) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    return deserialize_policy(bytes, dropout_rate);
}

}  // namespace trisk
