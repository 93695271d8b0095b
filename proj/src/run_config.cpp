#include "trisk/run_config.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <set>

#include "trisk/errors.hpp"
#include "trisk/random.hpp"

namespace fs = std::filesystem;

namespace trisk {

void RunConfig::validate() const {
    gen.validate();
    train.validate();
    issuer.validate();
    reward.validate();
    evolve.validate();
    if (baseline.pre_score_index < 0 || baseline.pre_score_index > 1)
        throw ConfigError("baseline.pre_score_index: must be 0 or 1");
    if (recall_levels.empty()) throw ConfigError("recall_levels: must not be empty");
    for (std::size_t i = 0; i < recall_levels.size(); ++i) {
        if (!(recall_levels[i] > 0.0) || !(recall_levels[i] < 1.0))
            throw ConfigError("recall_levels: values must be in (0, 1)");
        if (i > 0 && recall_levels[i] <= recall_levels[i - 1])
            throw ConfigError("recall_levels: values must be strictly increasing");
    }
    if (longterm_window_days < 1) throw ConfigError("longterm_window_days: must be positive");
    if (llm != "mock" && llm != "live") throw ConfigError("llm: must be \"mock\" or \"live\"");
    if (test_short_n < 1 || test_long_n < 1)
        throw ConfigError("test split sizes: must be positive");
    if (test_short_days < 1 || test_long_days < 1)
        throw ConfigError("test split day spans: must be positive");
}

void RunConfig::apply_seed(std::uint64_t s) {
    seed = s;
    gen.seed = s;
    train.seed = s;
    evolve.seed = s;
    evolve.train.seed = s;
}

namespace {

const std::set<std::string> kKnownKeys = {
    "gen",         "train",         "issuer",          "baseline",
    "layout",      "reward",        "recall_levels",   "longterm_window_days",
    "mode",        "llm",           "fixture_path",    "data_dir",
    "seed",        "test_short_n",  "test_short_days", "test_long_n",
    "test_long_days", "evolve"};

}  // namespace

void from_json(const nlohmann::json& j, RunConfig& cfg) {
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!kKnownKeys.count(key)) throw ConfigError("config: unknown key \"" + key + "\"");
    }
    RunConfig def;
    if (j.contains("gen")) j.at("gen").get_to(cfg.gen);
    if (j.contains("train")) j.at("train").get_to(cfg.train);
    if (j.contains("issuer")) j.at("issuer").get_to(cfg.issuer);
    if (j.contains("baseline"))
        cfg.baseline.pre_score_index = j.at("baseline").value("pre_score_index", 0);
    cfg.layout = layout_from_string(j.value("layout", to_string(def.layout)));
    if (j.contains("reward")) {
        cfg.reward.alpha_step0 = j.at("reward").value("alpha_step0", def.reward.alpha_step0);
        cfg.reward.alpha_step1 = j.at("reward").value("alpha_step1", def.reward.alpha_step1);
    }
    cfg.recall_levels = j.value("recall_levels", def.recall_levels);
    cfg.longterm_window_days = j.value("longterm_window_days", def.longterm_window_days);
    cfg.mode = mode_from_string(j.value("mode", to_string(def.mode)));
    cfg.llm = j.value("llm", def.llm);
    cfg.fixture_path = j.value("fixture_path", def.fixture_path);
    cfg.data_dir = j.value("data_dir", def.data_dir);
    cfg.seed = j.value("seed", def.seed);
    cfg.test_short_n = j.value("test_short_n", def.test_short_n);
    cfg.test_short_days = j.value("test_short_days", def.test_short_days);
    cfg.test_long_n = j.value("test_long_n", def.test_long_n);
    cfg.test_long_days = j.value("test_long_days", def.test_long_days);
    if (j.contains("evolve")) j.at("evolve").get_to(cfg.evolve);

    // Shared sections flow from the top level; the evolve JSON section only
    // carries loop-specific keys.
    cfg.evolve.train = cfg.train;
    cfg.evolve.issuer = cfg.issuer;
    cfg.evolve.layout = cfg.layout;
    cfg.evolve.mode = cfg.mode;
    cfg.evolve.recall_levels = cfg.recall_levels;
    cfg.evolve.seed = cfg.seed;

    // Per-section seeds derive from the master seed unless set explicitly.
    if (!j.contains("gen") || !j.at("gen").contains("seed")) cfg.gen.seed = cfg.seed;
    if (!j.contains("train") || !j.at("train").contains("seed")) {
        cfg.train.seed = cfg.seed;
        cfg.evolve.train.seed = cfg.seed;
    }
}

void to_json(nlohmann::json& j, const RunConfig& cfg) {
    j = nlohmann::json::object();
    j["gen"] = cfg.gen;
    j["train"] = cfg.train;
    j["issuer"] = cfg.issuer;
    j["baseline"] = {{"pre_score_index", cfg.baseline.pre_score_index}};
    j["layout"] = to_string(cfg.layout);
    j["reward"] = {{"alpha_step0", cfg.reward.alpha_step0},
                   {"alpha_step1", cfg.reward.alpha_step1}};
    j["recall_levels"] = cfg.recall_levels;
    j["longterm_window_days"] = cfg.longterm_window_days;
    j["mode"] = to_string(cfg.mode);
    j["llm"] = cfg.llm;
    j["fixture_path"] = cfg.fixture_path;
    j["data_dir"] = cfg.data_dir;
    j["seed"] = cfg.seed;
    j["test_short_n"] = cfg.test_short_n;
    j["test_short_days"] = cfg.test_short_days;
    j["test_long_n"] = cfg.test_long_n;
    j["test_long_days"] = cfg.test_long_days;
    j["evolve"] = cfg.evolve;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse config file " + path.string() + ": " + e.what());
    }
    RunConfig cfg;
    try {
        j.get_to(cfg);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path.string() + ": " + e.what());
    }
    return cfg;
}

std::string run_config_digest(const RunConfig& cfg) {
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

namespace {

void shift_days(Dataset& d, int offset) {
    for (TransactionRecord& r : d.records) r.day += offset;
    d.meta.day_min += offset;
    d.meta.day_max += offset;
}

}  // namespace

GeneratedSplits generate_splits(const RunConfig& cfg) {
    GeneratedSplits out;
    out.train = generate_dataset(cfg.gen);

    GenConfig g_short = cfg.gen;
    g_short.n_transactions = cfg.test_short_n;
    g_short.n_days = cfg.test_short_days;
    g_short.seed = mix_seed(cfg.gen.seed, 0xA1);
    out.test_short = generate_dataset(g_short);
    shift_days(out.test_short, cfg.gen.n_days);

    GenConfig g_long = cfg.gen;
    g_long.n_transactions = cfg.test_long_n;
    g_long.n_days = cfg.test_long_days;
    g_long.seed = mix_seed(cfg.gen.seed, 0xA2);
    out.test_long = generate_dataset(g_long);
    shift_days(out.test_long, cfg.gen.n_days + cfg.test_short_days);
    return out;
}

void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& cfg) {
    nlohmann::json j;
    j["command"] = command;
    j["config_digest"] = run_config_digest(cfg);
    j["seed"] = cfg.seed;
    j["version"] = kVersion;
    fs::create_directories(dir);
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) throw IoError("cannot write manifest in " + dir.string());
    out << j.dump(2) << "\n";
}

}  // namespace trisk
