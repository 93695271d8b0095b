#include <doctest.h>

#include <vector>

#include <Eigen/Dense>

#include "helpers.hpp"
#include "trisk/env.hpp"
#include "trisk/errors.hpp"
#include "trisk/eval.hpp"
#include "trisk/rewards.hpp"

using namespace trisk;

namespace {

PolicyFn constant_policy(double p) {
    return [p](const Eigen::MatrixXd& states, int, std::uint64_t) {
        return Eigen::ArrayXd::Constant(states.cols(), p);
    };
}

// Deterministic rule: block when the stage-matched score crosses 0.5.
// Stage 0 reads pre0 (row 0), stage 1 reads post0 (row 2).
PolicyFn threshold_policy() {
    return [](const Eigen::MatrixXd& states, int stage, std::uint64_t) {
        const int row = stage == 0 ? 0 : 2;
        return (states.row(row).array() >= 0.5).cast<double>().eval();
    };
}

RewardFn zero_reward() {
    return [](const RewardContext& ctx) { return Eigen::ArrayXd::Zero(ctx.action.size()); };
}

std::vector<TransactionRecord> hand_batch() {
    return {
        testutil::record(1, 0, 0.9, 0.5, 0.9, 0.5, true, 100.0),   // blocked at step 0
        testutil::record(2, 0, 0.8, 0.5, 0.1, 0.5, false, 50.0),   // blocked at step 0
        testutil::record(3, 0, 0.3, 0.5, 0.95, 0.5, true, 20.0),   // blocked at step 1
        testutil::record(4, 0, 0.2, 0.5, 0.2, 0.5, false, 10.0),   // passes both steps
    };
}

}  // namespace

TEST_SUITE("env") {

TEST_CASE("make_state lays out scores and stage indicators") {
    const TransactionRecord t = testutil::record(1, 0, 0.9, 0.7, 0.8, 0.6, true, 10.0);

    const Eigen::VectorXd s0 = make_state(t, 0);
    REQUIRE(s0.size() == 6);
    CHECK(s0.isApprox((Eigen::VectorXd(6) << 0.9, 0.7, 0.0, 0.0, 1.0, 0.0).finished()));

    const Eigen::VectorXd s1 = make_state(t, 1);
    CHECK(s1.isApprox((Eigen::VectorXd(6) << 0.9, 0.7, 0.8, 0.6, 0.0, 1.0).finished()));

    const TransactionRecord z = testutil::record(2, 0, 0, 0, 0, 0, false, 1.0);
    const Eigen::VectorXd sz = make_state(z, 0);
    CHECK(sz[4] == 1.0);
    CHECK(sz.head(4).isZero());
}

TEST_CASE("ScoresOnly layout drops the stage indicator") {
    const TransactionRecord t = testutil::record(1, 0, 0.9, 0.7, 0.8, 0.6, true, 10.0);
    CHECK(state_dim(StateLayout::ScoresOnly) == 4);
    CHECK(state_dim(StateLayout::ScoresWithStage) == 6);

    const Eigen::VectorXd s0 = make_state(t, 0, StateLayout::ScoresOnly);
    REQUIRE(s0.size() == 4);
    CHECK(s0.isApprox((Eigen::VectorXd(4) << 0.9, 0.7, 0.0, 0.0).finished()));
    const Eigen::VectorXd s1 = make_state(t, 1, StateLayout::ScoresOnly);
    CHECK(s1.isApprox((Eigen::VectorXd(4) << 0.9, 0.7, 0.8, 0.6).finished()));
}

TEST_CASE("make_state_batch stacks states column-wise") {
    const auto batch = hand_batch();
    const Eigen::MatrixXd m = make_state_batch(batch, 1);
    REQUIRE(m.rows() == 6);
    REQUIRE(m.cols() == 4);
    for (int i = 0; i < 4; ++i) CHECK(m.col(i).isApprox(make_state(batch[i], 1)));
}

TEST_CASE("an always-blocking policy kills the whole batch at step 0") {
    const auto batch = hand_batch();
    const TrajectoryBatch traj =
        run_episode(batch, constant_policy(1.0), zero_reward(), {}, StateLayout::ScoresWithStage, 1);
    CHECK((traj.actions0 == 1.0).all());
    CHECK((traj.alive1 == 0.0).all());
    CHECK((traj.actions1 == 0.0).all());
    CHECK((traj.rewards1 == 0.0).all());
    for (const IssuerOutcome o : traj.issuer) CHECK(o == IssuerOutcome::NotReached);
}

TEST_CASE("a never-blocking policy with the issuer disabled keeps everyone alive") {
    const auto batch = hand_batch();
    const TrajectoryBatch traj =
        run_episode(batch, constant_policy(0.0), zero_reward(), {}, StateLayout::ScoresWithStage, 1);
    CHECK((traj.actions0 == 0.0).all());
    CHECK((traj.alive1 == 1.0).all());
    for (const IssuerOutcome o : traj.issuer) CHECK(o == IssuerOutcome::Approved);
}

TEST_CASE("the hand-built batch follows the traced two-step pipeline") {
    const auto batch = hand_batch();
    const RewardFn reward = make_precision_reward_fn({0.5, 0.7});
    const TrajectoryBatch traj =
        run_episode(batch, threshold_policy(), reward, {}, StateLayout::ScoresWithStage, 99);

    CHECK(traj.actions0.isApprox((Eigen::ArrayXd(4) << 1, 1, 0, 0).finished().array()));
    CHECK(traj.alive1.isApprox((Eigen::ArrayXd(4) << 0, 0, 1, 1).finished().array()));
    CHECK(traj.actions1.isApprox((Eigen::ArrayXd(4) << 0, 0, 1, 0).finished().array()));

    // Step-0 rewards: fraud $100 blocked -> +50, legit $50 blocked -> -25.
    CHECK(traj.rewards0.isApprox((Eigen::ArrayXd(4) << 50, -25, 0, 0).finished().array()));
    // Step-1 rewards: fraud $20 blocked at alpha 0.7 -> +6; dead entries 0.
    CHECK(traj.rewards1.isApprox((Eigen::ArrayXd(4) << 0, 0, 6, 0).finished().array()));
    CHECK(traj.total_reward() == doctest::Approx(31.0));

    CHECK(traj.issuer[0] == IssuerOutcome::NotReached);
    CHECK(traj.issuer[1] == IssuerOutcome::NotReached);
    CHECK(traj.issuer[2] == IssuerOutcome::Approved);
    CHECK(traj.issuer[3] == IssuerOutcome::Approved);

    CHECK(traj.target.isApprox((Eigen::ArrayXd(4) << 1, 0, 1, 0).finished().array()));
    CHECK(traj.wgt.isApprox((Eigen::ArrayXd(4) << 100, 50, 20, 10).finished().array()));
}

TEST_CASE("every transaction ends in exactly one terminal state") {
    GenConfig cfg;
    cfg.n_transactions = 500;
    const Dataset d = generate_dataset(cfg);
    IssuerConfig issuer;
    issuer.enabled = true;
    issuer.p_approve_legit = 0.7;
    issuer.p_approve_fraud = 0.4;

    const TrajectoryBatch traj = run_episode(d.records, constant_policy(0.5), zero_reward(),
                                             issuer, StateLayout::ScoresWithStage, 5);
    int terminals = 0;
    for (Eigen::Index i = 0; i < traj.batch_size; ++i) {
        const bool blocked0 = traj.actions0[i] == 1.0;
        const bool declined = traj.issuer[i] == IssuerOutcome::Declined;
        const bool blocked1 = traj.actions1[i] == 1.0;
        const bool passed = !blocked0 && !declined && !blocked1;
        terminals += static_cast<int>(blocked0) + static_cast<int>(declined) +
                     static_cast<int>(blocked1) + static_cast<int>(passed);
        if (blocked0 || declined) CHECK(traj.alive1[i] == 0.0);
        if (blocked1 || (passed && !blocked0)) CHECK(traj.alive1[i] == 1.0);
    }
    CHECK(terminals == traj.batch_size);
}

TEST_CASE("step-1 rewards are zero wherever the transaction is dead") {
    GenConfig cfg;
    cfg.n_transactions = 300;
    const Dataset d = generate_dataset(cfg);
    IssuerConfig issuer;
    issuer.enabled = true;
    issuer.p_approve_legit = 0.5;
    issuer.p_approve_fraud = 0.5;

    const RewardFn reward = make_precision_reward_fn({0.5, 0.7});
    const TrajectoryBatch traj =
        run_episode(d.records, constant_policy(0.5), reward, issuer, StateLayout::ScoresWithStage, 3);
    for (Eigen::Index i = 0; i < traj.batch_size; ++i)
        if (traj.alive1[i] == 0.0) CHECK(traj.rewards1[i] == 0.0);
}

TEST_CASE("episodes are deterministic in the seed") {
    GenConfig cfg;
    cfg.n_transactions = 200;
    const Dataset d = generate_dataset(cfg);
    const RewardFn reward = make_precision_reward_fn({0.5, 0.7});

    const TrajectoryBatch a =
        run_episode(d.records, constant_policy(0.5), reward, {}, StateLayout::ScoresWithStage, 17);
    const TrajectoryBatch b =
        run_episode(d.records, constant_policy(0.5), reward, {}, StateLayout::ScoresWithStage, 17);
    CHECK(a.actions0.isApprox(b.actions0));
    CHECK(a.actions1.isApprox(b.actions1));
    CHECK(a.rewards0.isApprox(b.rewards0));
    CHECK(a.rewards1.isApprox(b.rewards1));

    const TrajectoryBatch c =
        run_episode(d.records, constant_policy(0.5), reward, {}, StateLayout::ScoresWithStage, 18);
    CHECK((a.actions0 != c.actions0).any());
}

TEST_CASE("issuer approval is a fixed function of the transaction") {
    IssuerConfig off;
    CHECK(issuer_approves(off, testutil::record(1, 0, 0, 0, 0, 0, true, 1)));

    IssuerConfig strict;
    strict.enabled = true;
    strict.p_approve_legit = 1.0;
    strict.p_approve_fraud = 0.0;
    const TransactionRecord fraud = testutil::record(10, 0, 0, 0, 0, 0, true, 1);
    const TransactionRecord legit = testutil::record(11, 0, 0, 0, 0, 0, false, 1);
    CHECK_FALSE(issuer_approves(strict, fraud));
    CHECK(issuer_approves(strict, legit));
    // Same transaction, same answer, every time.
    for (int i = 0; i < 5; ++i) CHECK(issuer_approves(strict, legit));
}

TEST_CASE("episode issuer outcomes agree with the offline issuer mask") {
    GenConfig cfg;
    cfg.n_transactions = 400;
    const Dataset d = generate_dataset(cfg);
    IssuerConfig issuer;
    issuer.enabled = true;
    issuer.p_approve_legit = 0.8;
    issuer.p_approve_fraud = 0.3;

    const TrajectoryBatch traj = run_episode(d.records, constant_policy(0.0), zero_reward(),
                                             issuer, StateLayout::ScoresWithStage, 7);
    const std::vector<char> mask = issuer_mask(issuer, d);
    REQUIRE(mask.size() == d.records.size());
    for (std::size_t i = 0; i < d.records.size(); ++i) {
        CHECK(issuer_approves(issuer, d.records[i]) == static_cast<bool>(mask[i]));
        CHECK(traj.alive1[static_cast<Eigen::Index>(i)] == (mask[i] ? 1.0 : 0.0));
    }
}

TEST_CASE("issuer config validation rejects bad probabilities") {
    IssuerConfig bad;
    bad.p_approve_legit = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    IssuerConfig neg;
    neg.p_approve_fraud = -0.1;
    CHECK_THROWS_AS(neg.validate(), ConfigError);
}

TEST_CASE("a throwing reward function surfaces as EpisodeError") {
    const auto batch = hand_batch();
    const RewardFn broken = [](const RewardContext&) -> Eigen::ArrayXd {
        throw DslEvalError("division by zero");
    };
    CHECK_THROWS_WITH_AS(
        run_episode(batch, constant_policy(0.5), broken, {}, StateLayout::ScoresWithStage, 1),
        doctest::Contains("division by zero"), EpisodeError);
}

}  // TEST_SUITE
