#include "trisk/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "trisk/errors.hpp"

namespace trisk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_theta(double theta) {
    if (!(theta > 0.0) || !(theta < 1.0))
        throw ConfigError("theta: recall target must be in (0, 1)");
}

struct Prepared {
    std::size_t n = 0;
    std::vector<double> p0, p1, wgt;
    std::vector<char> fraud, approved;
    double fraud_gmv = 0.0;
};

Prepared prepare(const StageScores& scores, const Dataset& d, const IssuerConfig& issuer) {
    if (static_cast<std::size_t>(scores.p0.size()) != d.records.size() ||
        static_cast<std::size_t>(scores.p1.size()) != d.records.size())
        throw ConfigError("scores: length does not match dataset");
    Prepared pr;
    pr.n = d.records.size();
    pr.p0.resize(pr.n);
    pr.p1.resize(pr.n);
    pr.wgt.resize(pr.n);
    pr.fraud.resize(pr.n);
    pr.approved = issuer_mask(issuer, d);
    for (std::size_t i = 0; i < pr.n; ++i) {
        pr.p0[i] = scores.p0[static_cast<Eigen::Index>(i)];
        pr.p1[i] = scores.p1[static_cast<Eigen::Index>(i)];
        pr.wgt[i] = d.records[i].wgt;
        pr.fraud[i] = d.records[i].is_fraud ? 1 : 0;
        if (pr.fraud[i]) pr.fraud_gmv += pr.wgt[i];
    }
    return pr;
}

std::vector<std::size_t> argsort_desc(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    return idx;
}

struct Best {
    bool found = false;
    double precision = -1.0;
    double t0 = kInf, t1 = kInf;
};

}  // namespace

StageScores score_dataset(const PolicyParams& params, const Dataset& d, StateLayout layout) {
    StageScores s;
    const Eigen::MatrixXd states0 = make_state_batch(d.records, 0, layout);
    const Eigen::MatrixXd states1 = make_state_batch(d.records, 1, layout);
    s.p0 = policy_forward(params, states0, false, 0);
    s.p1 = policy_forward(params, states1, false, 0);
    return s;
}

std::vector<char> issuer_mask(const IssuerConfig& issuer, const Dataset& d) {
    issuer.validate();
    std::vector<char> approved(d.records.size());
    for (std::size_t i = 0; i < d.records.size(); ++i)
        approved[i] = issuer_approves(issuer, d.records[i]) ? 1 : 0;
    return approved;
}

StageMasks apply_thresholds(const StageScores& scores, double t0, double t1,
                            const std::vector<char>& approved) {
    const std::size_t n = static_cast<std::size_t>(scores.p0.size());
    if (!approved.empty() && approved.size() != n)
        throw ConfigError("approved: length does not match scores");
    StageMasks m;
    m.blocked0.resize(n);
    m.blocked1.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Index e = static_cast<Eigen::Index>(i);
        const bool reaches1 = approved.empty() || approved[i];
        m.blocked0[i] = scores.p0[e] >= t0 ? 1 : 0;
        m.blocked1[i] = !m.blocked0[i] && reaches1 && scores.p1[e] >= t1 ? 1 : 0;
    }
    return m;
}

DollarMetrics dollar_metrics(const StageMasks& masks, const Dataset& d) {
    if (masks.blocked0.size() != d.records.size() || masks.blocked1.size() != d.records.size())
        throw ConfigError("masks: length does not match dataset");
    DollarMetrics m;
    for (std::size_t i = 0; i < d.records.size(); ++i) {
        const TransactionRecord& r = d.records[i];
        const bool blocked = masks.blocked0[i] || masks.blocked1[i];
        if (blocked && r.is_fraud)
            m.confusion.tp += r.wgt;
        else if (blocked)
            m.confusion.fp += r.wgt;
        else if (r.is_fraud)
            m.confusion.fn += r.wgt;
        else
            m.confusion.tn += r.wgt;
        if (masks.blocked0[i]) {
            m.blocked_gmv_step0 += r.wgt;
            if (r.is_fraud) m.tp_gmv_step0 += r.wgt;
        } else if (masks.blocked1[i]) {
            m.blocked_gmv_step1 += r.wgt;
            if (r.is_fraud) m.tp_gmv_step1 += r.wgt;
        }
    }
    const double blocked_gmv = m.confusion.tp + m.confusion.fp;
    const double fraud_gmv = m.confusion.tp + m.confusion.fn;
    m.blocked_nothing = blocked_gmv == 0.0;
    m.zero_fraud = fraud_gmv == 0.0;
    m.precision = m.blocked_nothing ? 1.0 : m.confusion.tp / blocked_gmv;
    m.recall = m.zero_fraud ? 1.0 : m.confusion.tp / fraud_gmv;
    return m;
}

std::vector<ThresholdResult> threshold_search_multi(const StageScores& scores, const Dataset& d,
                                                    const std::vector<double>& thetas,
                                                    const IssuerConfig& issuer) {
    for (double t : thetas) check_theta(t);
    const Prepared pr = prepare(scores, d, issuer);
    const std::vector<std::size_t> idx0 = argsort_desc(pr.p0);
    const std::vector<std::size_t> idx1 = argsort_desc(pr.p1);
    std::vector<Best> best(thetas.size());
    std::vector<char> in_prefix(pr.n, 0);

    // Fraud/total GMV needed at stage 1 for each theta, given the prefix.
    auto consider = [&](double t0, double f_blocked, double t_blocked, double t1) {
        const double recall = pr.fraud_gmv == 0.0 ? 1.0 : f_blocked / pr.fraud_gmv;
        const double precision = t_blocked == 0.0 ? 1.0 : f_blocked / t_blocked;
        for (std::size_t k = 0; k < thetas.size(); ++k) {
            if (pr.fraud_gmv > 0.0 && recall < thetas[k]) continue;
            if (precision > best[k].precision) {
                best[k] = {true, precision, t0, t1};
            }
        }
    };

    // Walks stage-1 candidates for a fixed stage-0 prefix. Transactions the
    // issuer declined never contribute at stage 1.
    auto scan_stage1 = [&](double t0, double f0, double g0) {
        consider(t0, f0, g0, kInf);
        double cum_f = 0.0, cum_g = 0.0;
        std::size_t j = 0;
        while (j < pr.n) {
            const double v = pr.p1[idx1[j]];
            while (j < pr.n && pr.p1[idx1[j]] == v) {
                const std::size_t i = idx1[j];
                if (!in_prefix[i] && pr.approved[i]) {
                    cum_g += pr.wgt[i];
                    if (pr.fraud[i]) cum_f += pr.wgt[i];
                }
                ++j;
            }
            consider(t0, f0 + cum_f, g0 + cum_g, v);
        }
    };

    // Stage-0 candidates: +infinity (empty prefix), then each distinct
    // observed p0 value in descending order.
    double f0 = 0.0, g0 = 0.0;
    scan_stage1(kInf, 0.0, 0.0);
    std::size_t i = 0;
    while (i < pr.n) {
        const double v = pr.p0[idx0[i]];
        while (i < pr.n && pr.p0[idx0[i]] == v) {
            const std::size_t r = idx0[i];
            in_prefix[r] = 1;
            g0 += pr.wgt[r];
            if (pr.fraud[r]) f0 += pr.wgt[r];
            ++i;
        }
        scan_stage1(v, f0, g0);
    }

    std::vector<ThresholdResult> out(thetas.size());
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        if (!best[k].found) throw EvalError("recall target unreachable");
        // Canonical metrics recomputed from the chosen pair's masks.
        const DollarMetrics m =
            dollar_metrics(apply_thresholds(scores, best[k].t0, best[k].t1, pr.approved), d);
        out[k] = {best[k].t0, best[k].t1, m.precision, m.recall, m.blocked_nothing};
    }
    return out;
}

ThresholdResult threshold_search(const StageScores& scores, const Dataset& d, double theta,
                                 const IssuerConfig& issuer) {
    return threshold_search_multi(scores, d, {theta}, issuer)[0];
}

std::vector<BaselineResult> baseline_eval_multi(const Dataset& d,
                                                const std::vector<double>& thetas,
                                                const BaselineConfig& cfg) {
    for (double t : thetas) check_theta(t);
    if (cfg.pre_score_index < 0 || cfg.pre_score_index > 1)
        throw ConfigError("pre_score_index: must be 0 or 1");
    std::vector<double> score(d.records.size());
    double fraud_gmv = 0.0;
    for (std::size_t i = 0; i < d.records.size(); ++i) {
        score[i] = d.records[i].pre_scores[cfg.pre_score_index];
        if (d.records[i].is_fraud) fraud_gmv += d.records[i].wgt;
    }
    const std::vector<std::size_t> idx = argsort_desc(score);
    std::vector<Best> best(thetas.size());

    auto consider = [&](double t, double f_blocked, double g_blocked) {
        const double recall = fraud_gmv == 0.0 ? 1.0 : f_blocked / fraud_gmv;
        const double precision = g_blocked == 0.0 ? 1.0 : f_blocked / g_blocked;
        for (std::size_t k = 0; k < thetas.size(); ++k) {
            if (fraud_gmv > 0.0 && recall < thetas[k]) continue;
            if (precision > best[k].precision) best[k] = {true, precision, t, kInf};
        }
    };

    consider(kInf, 0.0, 0.0);
    double f = 0.0, g = 0.0;
    std::size_t i = 0;
    while (i < idx.size()) {
        const double v = score[idx[i]];
        while (i < idx.size() && score[idx[i]] == v) {
            g += d.records[idx[i]].wgt;
            if (d.records[idx[i]].is_fraud) f += d.records[idx[i]].wgt;
            ++i;
        }
        consider(v, f, g);
    }

    std::vector<BaselineResult> out(thetas.size());
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        if (!best[k].found) throw EvalError("recall target unreachable");
        double bf = 0.0, bg = 0.0;
        for (std::size_t r = 0; r < d.records.size(); ++r) {
            if (score[r] >= best[k].t0) {
                bg += d.records[r].wgt;
                if (d.records[r].is_fraud) bf += d.records[r].wgt;
            }
        }
        out[k].threshold = best[k].t0;
        out[k].blocked_nothing = bg == 0.0;
        out[k].precision = bg == 0.0 ? 1.0 : bf / bg;
        out[k].recall = fraud_gmv == 0.0 ? 1.0 : bf / fraud_gmv;
    }
    return out;
}

BaselineResult baseline_eval(const Dataset& d, double theta, const BaselineConfig& cfg) {
    return baseline_eval_multi(d, {theta}, cfg)[0];
}

EvalReport evaluate_policy(const PolicyParams& params, const Dataset& d,
                           const std::vector<double>& thetas, StateLayout layout,
                           const IssuerConfig& issuer) {
    if (thetas.empty()) throw ConfigError("thetas: at least one recall target required");
    const StageScores scores = score_dataset(params, d, layout);
    const std::vector<ThresholdResult> found = threshold_search_multi(scores, d, thetas, issuer);
    const std::vector<BaselineResult> base = baseline_eval_multi(d, thetas);

    EvalReport report;
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        report.levels.push_back({thetas[k], found[k].recall, found[k].precision, found[k].t0,
                                 found[k].t1, found[k].blocked_nothing});
        report.baseline_precisions.push_back(base[k].precision);
        report.baseline_recalls.push_back(base[k].recall);
    }
    const std::size_t ref = (thetas.size() - 1) / 2;
    const std::vector<char> approved = issuer_mask(issuer, d);
    const DollarMetrics m =
        dollar_metrics(apply_thresholds(scores, found[ref].t0, found[ref].t1, approved), d);
    report.stage = {thetas[ref], m.tp_gmv_step0, m.tp_gmv_step1, m.blocked_gmv_step0,
                    m.blocked_gmv_step1};
    report.zero_fraud = m.zero_fraud;
    return report;
}

std::vector<WindowReport> longterm_report(const PolicyParams& params, const Dataset& d,
                                          int window_days, const std::vector<double>& thetas,
                                          StateLayout layout, const IssuerConfig& issuer) {
    if (window_days < 1) throw ConfigError("window_days: must be positive");
    std::vector<WindowReport> out;
    if (d.records.empty()) return out;
    for (int start = d.meta.day_min; start <= d.meta.day_max; start += window_days) {
        Dataset window;
        window.meta = d.meta;
        window.meta.day_min = start;
        window.meta.day_max = std::min(start + window_days - 1, d.meta.day_max);
        for (const TransactionRecord& r : d.records)
            if (r.day >= start && r.day < start + window_days) window.records.push_back(r);
        if (window.records.empty()) continue;
        out.push_back({start, evaluate_policy(params, window, thetas, layout, issuer)});
    }
    return out;
}

std::string longterm_csv(const std::vector<WindowReport>& windows) {
    std::string out = "window_start,theta,precision,baseline_precision,recall,t0,t1\n";
    char buf[256];
    for (const WindowReport& w : windows) {
        for (std::size_t k = 0; k < w.report.levels.size(); ++k) {
            const LevelResult& lv = w.report.levels[k];
            std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.6f,%f,%f\n", w.window_start,
                          lv.theta, lv.precision, w.report.baseline_precisions[k],
                          lv.achieved_recall, lv.t0, lv.t1);
            out += buf;
        }
    }
    return out;
}

namespace {

nlohmann::json threshold_json(double t) {
    if (std::isinf(t)) return nullptr;
    return t;
}

}  // namespace

void to_json(nlohmann::json& j, const EvalReport& r) {
    j = nlohmann::json::object();
    j["levels"] = nlohmann::json::array();
    for (std::size_t k = 0; k < r.levels.size(); ++k) {
        const LevelResult& lv = r.levels[k];
        j["levels"].push_back({
            {"theta", lv.theta},
            {"achieved_recall", lv.achieved_recall},
            {"precision", lv.precision},
            {"baseline_precision", r.baseline_precisions[k]},
            {"baseline_recall", r.baseline_recalls[k]},
            {"t0", threshold_json(lv.t0)},
            {"t1", threshold_json(lv.t1)},
            {"blocked_nothing", lv.blocked_nothing},
        });
    }
    j["stage"] = {
        {"reference_theta", r.stage.reference_theta},
        {"tp_gmv_step0", r.stage.tp_gmv_step0},
        {"tp_gmv_step1", r.stage.tp_gmv_step1},
        {"blocked_gmv_step0", r.stage.blocked_gmv_step0},
        {"blocked_gmv_step1", r.stage.blocked_gmv_step1},
    };
    j["zero_fraud"] = r.zero_fraud;
}

void from_json(const nlohmann::json& j, EvalReport& r) {
    r = EvalReport{};
    auto threshold = [](const nlohmann::json& t) {
        return t.is_null() ? kInf : t.get<double>();
    };
    for (const auto& e : j.at("levels")) {
        LevelResult lv;
        lv.theta = e.at("theta").get<double>();
        lv.achieved_recall = e.at("achieved_recall").get<double>();
        lv.precision = e.at("precision").get<double>();
        lv.t0 = threshold(e.at("t0"));
        lv.t1 = threshold(e.at("t1"));
        lv.blocked_nothing = e.at("blocked_nothing").get<bool>();
        r.levels.push_back(lv);
        r.baseline_precisions.push_back(e.at("baseline_precision").get<double>());
        r.baseline_recalls.push_back(e.at("baseline_recall").get<double>());
    }
    const nlohmann::json& s = j.at("stage");
    r.stage.reference_theta = s.at("reference_theta").get<double>();
    r.stage.tp_gmv_step0 = s.at("tp_gmv_step0").get<double>();
    r.stage.tp_gmv_step1 = s.at("tp_gmv_step1").get<double>();
    r.stage.blocked_gmv_step0 = s.at("blocked_gmv_step0").get<double>();
    r.stage.blocked_gmv_step1 = s.at("blocked_gmv_step1").get<double>();
    r.zero_fraud = j.at("zero_fraud").get<bool>();
}

}  // namespace trisk
