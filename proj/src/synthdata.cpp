#include "trisk/synthdata.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "trisk/errors.hpp"
#include "trisk/random.hpp"

namespace trisk {

namespace {

const char* kScoreNames[4] = {"pre0", "pre1", "post0", "post1"};

void check_beta(const BetaParams& p, const std::string& field) {
    if (!(p.a > 0.0) || !(p.b > 0.0))
        throw ConfigError("score_beta." + field + ": Beta parameters must be positive");
}

double clip01(double x) { return std::min(1.0, std::max(0.0, x)); }

}  // namespace

void GenConfig::validate() const {
    if (n_transactions < 0) throw ConfigError("n_transactions: must be non-negative");
    if (!(fraud_rate > 0.0) || !(fraud_rate < 1.0))
        throw ConfigError("fraud_rate: must be in (0, 1)");
    for (int s = 0; s < 4; ++s) {
        check_beta(score_beta[s].legit, std::string(kScoreNames[s]) + ".legit");
        check_beta(score_beta[s].fraud, std::string(kScoreNames[s]) + ".fraud");
    }
    if (signal_boost_post < 0.0) throw ConfigError("signal_boost_post: must be non-negative");
    if (!(weight_legit.sigma >= 0.0)) throw ConfigError("weight_legit.sigma: must be non-negative");
    if (!(weight_fraud.sigma >= 0.0)) throw ConfigError("weight_fraud.sigma: must be non-negative");
    if (!(fraud_value_decay > 0.0) || fraud_value_decay > 1.0)
        throw ConfigError("fraud_value_decay: must be in (0, 1]");
    if (n_days < 1) throw ConfigError("n_days: must be at least 1");
}

std::string config_digest(const GenConfig& cfg) {
    nlohmann::json j;
    to_json(j, cfg);
    const std::string canon = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return buf;
}

Dataset generate_dataset(const GenConfig& cfg) {
    cfg.validate();
    Dataset d;
    d.meta.seed = cfg.seed;
    d.meta.config_digest = config_digest(cfg);
    d.meta.day_min = 0;
    d.meta.day_max = cfg.n_days - 1;
    d.records.reserve(static_cast<std::size_t>(cfg.n_transactions));

    Rng rng(cfg.seed);
    for (std::int64_t i = 0; i < cfg.n_transactions; ++i) {
        TransactionRecord r;
        r.id = i;
        // Spread ids evenly over the day range; keeps records sorted by day.
        r.day = static_cast<int>((i * cfg.n_days) / cfg.n_transactions);
        r.is_fraud = rng.bernoulli(cfg.fraud_rate);
        for (int s = 0; s < 4; ++s) {
            const BetaParams& bp = r.is_fraud ? cfg.score_beta[s].fraud : cfg.score_beta[s].legit;
            double score = rng.beta(bp.a, bp.b);
            if (r.is_fraud && s >= 2) score = clip01(score + cfg.signal_boost_post);
            if (s < 2)
                r.pre_scores[s] = score;
            else
                r.post_scores[s - 2] = score;
        }
        const LogNormalParams& wp = r.is_fraud ? cfg.weight_fraud : cfg.weight_legit;
        r.wgt = rng.lognormal(wp.mu, wp.sigma);
        if (r.is_fraud) r.wgt *= std::pow(cfg.fraud_value_decay, r.day);
        d.records.push_back(r);
    }
    return d;
}

std::vector<Dataset> split_dataset(const Dataset& d, const std::vector<int>& boundaries) {
    for (std::size_t i = 1; i < boundaries.size(); ++i)
        if (boundaries[i] <= boundaries[i - 1])
            throw ConfigError("boundaries: cut points must be strictly increasing");

    std::vector<Dataset> parts(boundaries.size() + 1);
    for (std::size_t p = 0; p < parts.size(); ++p) {
        parts[p].meta = d.meta;
        parts[p].meta.day_min = p == 0 ? d.meta.day_min : boundaries[p - 1];
        parts[p].meta.day_max = p < boundaries.size() ? boundaries[p] - 1 : d.meta.day_max;
    }
    for (const TransactionRecord& r : d.records) {
        const std::size_t p = static_cast<std::size_t>(
            std::upper_bound(boundaries.begin(), boundaries.end(), r.day) - boundaries.begin());
        parts[p].records.push_back(r);
    }
    return parts;
}

std::string to_csv(const Dataset& d) {
    std::string out = "id,day,pre0,pre1,post0,post1,label,wgt\n";
    char buf[256];
    for (const TransactionRecord& r : d.records) {
        std::snprintf(buf, sizeof(buf), "%" PRId64 ",%d,%.6f,%.6f,%.6f,%.6f,%d,%.6f\n", r.id,
                      r.day, r.pre_scores[0], r.pre_scores[1], r.post_scores[0], r.post_scores[1],
                      r.is_fraud ? 1 : 0, r.wgt);
        out += buf;
    }
    return out;
}

void save_csv(const Dataset& d, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f << to_csv(d);
    if (!f) throw IoError("write failed: " + path.string());
}

Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path.string());
    std::string line;
    if (!std::getline(f, line)) throw IoError("empty file: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "id,day,pre0,pre1,post0,post1,label,wgt")
        throw IoError("bad header in " + path.string() + ": " + line);

    Dataset d;
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        TransactionRecord r;
        long long id = 0;
        int label = 0;
        const int n = std::sscanf(line.c_str(), "%lld,%d,%lf,%lf,%lf,%lf,%d,%lf", &id, &r.day,
                                  &r.pre_scores[0], &r.pre_scores[1], &r.post_scores[0],
                                  &r.post_scores[1], &label, &r.wgt);
        if (n != 8)
            throw IoError("malformed row at line " + std::to_string(lineno) + " in " +
                          path.string());
        r.id = id;
        r.is_fraud = label != 0;
        d.records.push_back(r);
        d.meta.day_min = d.records.size() == 1 ? r.day : std::min(d.meta.day_min, r.day);
        d.meta.day_max = d.records.size() == 1 ? r.day : std::max(d.meta.day_max, r.day);
    }
    return d;
}

void to_json(nlohmann::json& j, const GenConfig& cfg) {
    j = nlohmann::json{
        {"n_transactions", cfg.n_transactions},
        {"fraud_rate", cfg.fraud_rate},
        {"signal_boost_post", cfg.signal_boost_post},
        {"weight_legit", {{"mu", cfg.weight_legit.mu}, {"sigma", cfg.weight_legit.sigma}}},
        {"weight_fraud", {{"mu", cfg.weight_fraud.mu}, {"sigma", cfg.weight_fraud.sigma}}},
        {"fraud_value_decay", cfg.fraud_value_decay},
        {"n_days", cfg.n_days},
        {"seed", cfg.seed},
    };
    nlohmann::json scores;
    for (int s = 0; s < 4; ++s) {
        scores[kScoreNames[s]] = {
            {"legit", {cfg.score_beta[s].legit.a, cfg.score_beta[s].legit.b}},
            {"fraud", {cfg.score_beta[s].fraud.a, cfg.score_beta[s].fraud.b}},
        };
    }
    j["score_beta"] = scores;
}

void from_json(const nlohmann::json& j, GenConfig& cfg) {
    cfg = GenConfig{};
    if (j.contains("n_transactions")) j.at("n_transactions").get_to(cfg.n_transactions);
    if (j.contains("fraud_rate")) j.at("fraud_rate").get_to(cfg.fraud_rate);
    if (j.contains("signal_boost_post")) j.at("signal_boost_post").get_to(cfg.signal_boost_post);
    if (j.contains("weight_legit")) {
        j.at("weight_legit").at("mu").get_to(cfg.weight_legit.mu);
        j.at("weight_legit").at("sigma").get_to(cfg.weight_legit.sigma);
    }
    if (j.contains("weight_fraud")) {
        j.at("weight_fraud").at("mu").get_to(cfg.weight_fraud.mu);
        j.at("weight_fraud").at("sigma").get_to(cfg.weight_fraud.sigma);
    }
    if (j.contains("fraud_value_decay")) j.at("fraud_value_decay").get_to(cfg.fraud_value_decay);
    if (j.contains("n_days")) j.at("n_days").get_to(cfg.n_days);
    if (j.contains("seed")) j.at("seed").get_to(cfg.seed);
    if (j.contains("score_beta")) {
        const nlohmann::json& scores = j.at("score_beta");
        for (int s = 0; s < 4; ++s) {
            if (!scores.contains(kScoreNames[s])) continue;
            const nlohmann::json& m = scores.at(kScoreNames[s]);
            cfg.score_beta[s].legit = {m.at("legit").at(0).get<double>(),
                                       m.at("legit").at(1).get<double>()};
            cfg.score_beta[s].fraud = {m.at("fraud").at(0).get<double>(),
                                       m.at("fraud").at(1).get<double>()};
        }
    }
}

}  // namespace trisk
