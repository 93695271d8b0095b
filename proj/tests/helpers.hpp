#pragma once

// Shared test utilities: hand-built records, temp directories, file helpers
// and brute-force metric oracles written independently of the library code.

#include <unistd.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "trisk/synthdata.hpp"

namespace testutil {

inline trisk::TransactionRecord record(std::int64_t id, int day, double pre0, double pre1,
                                       double post0, double post1, bool fraud, double wgt) {
    trisk::TransactionRecord r;
    r.id = id;
    r.day = day;
    r.pre_scores = {pre0, pre1};
    r.post_scores = {post0, post1};
    r.is_fraud = fraud;
    r.wgt = wgt;
    return r;
}

inline trisk::Dataset dataset(std::vector<trisk::TransactionRecord> records) {
    trisk::Dataset d;
    d.records = std::move(records);
    d.meta.seed = 0;
    d.meta.config_digest = "test";
    if (!d.records.empty()) {
        int lo = d.records.front().day;
        int hi = lo;
        for (const auto& r : d.records) {
            lo = std::min(lo, r.day);
            hi = std::max(hi, r.day);
        }
        d.meta.day_min = lo;
        d.meta.day_max = hi;
    }
    return d;
}

// Unique scratch directory removed on destruction.
class TempDir {
   public:
    TempDir() {
        const auto base = std::filesystem::temp_directory_path();
        for (int i = 0;; ++i) {
            std::filesystem::path candidate =
                base / ("trisk_test_" + std::to_string(::getpid()) + "_" + std::to_string(next_id()));
            std::error_code ec;
            if (std::filesystem::create_directory(candidate, ec)) {
                path_ = candidate;
                return;
            }
            if (i > 1000) throw std::runtime_error("cannot create temp dir");
        }
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string str() const { return path_.string(); }

   private:
    static int next_id() {
        static int counter = 0;
        return counter++;
    }
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

inline std::size_t count_occurrences(const std::string& haystack, const std::string& needle) {
    std::size_t n = 0;
    for (std::size_t pos = haystack.find(needle); pos != std::string::npos;
         pos = haystack.find(needle, pos + 1))
        ++n;
    return n;
}

// ---- brute-force dollar-metric oracles (plain loops, no Eigen) ----

struct OracleConfusion {
    double tp = 0.0, fp = 0.0, fn = 0.0, tn = 0.0;
    double tp0 = 0.0, tp1 = 0.0, blocked0 = 0.0, blocked1 = 0.0;
    double recall = 1.0;
    double precision = 1.0;
    bool blocked_nothing = true;
};

inline OracleConfusion oracle_confusion(const std::vector<char>& blocked0,
                                        const std::vector<char>& blocked1,
                                        const std::vector<trisk::TransactionRecord>& records) {
    OracleConfusion c;
    double fraud_gmv = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const trisk::TransactionRecord& r = records[i];
        const bool blocked = blocked0[i] || blocked1[i];
        if (r.is_fraud) fraud_gmv += r.wgt;
        if (blocked && r.is_fraud) c.tp += r.wgt;
        if (blocked && !r.is_fraud) c.fp += r.wgt;
        if (!blocked && r.is_fraud) c.fn += r.wgt;
        if (!blocked && !r.is_fraud) c.tn += r.wgt;
        if (blocked0[i]) {
            c.blocked0 += r.wgt;
            if (r.is_fraud) c.tp0 += r.wgt;
        }
        if (blocked1[i]) {
            c.blocked1 += r.wgt;
            if (r.is_fraud) c.tp1 += r.wgt;
        }
    }
    const double blocked_gmv = c.tp + c.fp;
    c.blocked_nothing = blocked_gmv == 0.0;
    c.recall = fraud_gmv > 0.0 ? c.tp / fraud_gmv : 1.0;
    c.precision = blocked_gmv > 0.0 ? c.tp / blocked_gmv : 1.0;
    return c;
}

struct OracleSearchResult {
    double t0 = 0.0, t1 = 0.0;
    double precision = 1.0;
    double recall = 1.0;
};

// Exhaustive search over observed scores plus +infinity sentinels, applying
// the deployment rule by hand. approved empty means every pass reaches
// stage 1. Returns nullopt when no pair reaches theta.
inline std::optional<OracleSearchResult> oracle_threshold_search(
    const std::vector<double>& p0, const std::vector<double>& p1,
    const std::vector<trisk::TransactionRecord>& records, const std::vector<char>& approved,
    double theta) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> c0(p0.begin(), p0.end());
    std::vector<double> c1(p1.begin(), p1.end());
    c0.push_back(inf);
    c1.push_back(inf);

    std::optional<OracleSearchResult> best;
    std::vector<char> b0(records.size()), b1(records.size());
    for (double t0 : c0) {
        for (double t1 : c1) {
            for (std::size_t i = 0; i < records.size(); ++i) {
                b0[i] = p0[i] >= t0 ? 1 : 0;
                const bool reaches1 = !b0[i] && (approved.empty() || approved[i]);
                b1[i] = reaches1 && p1[i] >= t1 ? 1 : 0;
            }
            const OracleConfusion c = oracle_confusion(b0, b1, records);
            if (c.recall < theta) continue;
            const bool better =
                !best || c.precision > best->precision ||
                (c.precision == best->precision &&
                 (t0 > best->t0 || (t0 == best->t0 && t1 > best->t1)));
            if (better) best = OracleSearchResult{t0, t1, c.precision, c.recall};
        }
    }
    return best;
}

// Single-threshold baseline search on one score column, same rule.
inline std::optional<OracleSearchResult> oracle_baseline_search(
    const std::vector<double>& scores, const std::vector<trisk::TransactionRecord>& records,
    double theta) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> cand(scores.begin(), scores.end());
    cand.push_back(inf);

    std::optional<OracleSearchResult> best;
    std::vector<char> b0(records.size()), none(records.size(), 0);
    for (double t : cand) {
        for (std::size_t i = 0; i < records.size(); ++i) b0[i] = scores[i] >= t ? 1 : 0;
        const OracleConfusion c = oracle_confusion(b0, none, records);
        if (c.recall < theta) continue;
        const bool better = !best || c.precision > best->precision ||
                            (c.precision == best->precision && t > best->t0);
        if (better) best = OracleSearchResult{t, inf, c.precision, c.recall};
    }
    return best;
}

}  // namespace testutil
