#pragma once
// Run configuration shared by the CLI subcommands: JSON file plus flag
// overrides. Unknown keys are rejected so typos fail fast instead of
// silently running with defaults.

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "kgplan/lm.hpp"
#include "kgplan/planner.hpp"
#include "kgplan/retrieval.hpp"

namespace kgplan {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct RunConfig {
    std::string domain_path;
    std::string graph_path;
    std::string backend = "oracle";  // oracle | faulty | scripted | http
    std::string playbook_path;       // oracle/faulty answers for the CLI
    std::string transcript_path;     // scripted replay input
    std::string templates_dir;       // optional prompt template overrides
    std::string run_dir = "runs";
    uint64_t seed = 0;
    long token_ceiling = 0;
    bool verifier = true;
    int retry_cap = 3;
    bool restrict_objects = false;
    RetrievalConfig retrieval;
    PlannerConfig planner;
    FaultProfile faults{0.3, 0.15, all_fault_kinds()};
    std::vector<std::string> always_include;

    void validate() const {
        static const std::set<std::string> backends = {"oracle", "faulty", "scripted", "http"};
        if (!backends.count(backend))
            throw ConfigError("unknown backend '" + backend + "'");
        if (retrieval.cutoff <= 0.0 || retrieval.cutoff > 1.0)
            throw ConfigError("cutoff must be in (0, 1]");
        if (retrieval.depth < 1) throw ConfigError("depth must be >= 1");
        if (retry_cap < 1) throw ConfigError("retry_cap must be >= 1");
    }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known,
                           const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
    RunConfig cfg;
    detail::reject_unknown(
        j,
        {"domain", "graph", "backend", "playbook", "transcript", "templates_dir", "run_dir",
         "seed", "token_ceiling", "verifier", "retry_cap", "restrict_objects", "retriever",
         "planner", "faults", "always_include"},
        "config");
    cfg.domain_path = j.value("domain", cfg.domain_path);
    cfg.graph_path = j.value("graph", cfg.graph_path);
    cfg.backend = j.value("backend", cfg.backend);
    cfg.playbook_path = j.value("playbook", cfg.playbook_path);
    cfg.transcript_path = j.value("transcript", cfg.transcript_path);
    cfg.templates_dir = j.value("templates_dir", cfg.templates_dir);
    cfg.run_dir = j.value("run_dir", cfg.run_dir);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.token_ceiling = j.value("token_ceiling", cfg.token_ceiling);
    cfg.verifier = j.value("verifier", cfg.verifier);
    cfg.retry_cap = j.value("retry_cap", cfg.retry_cap);
    cfg.restrict_objects = j.value("restrict_objects", cfg.restrict_objects);

    if (j.contains("retriever")) {
        const auto& r = j["retriever"];
        detail::reject_unknown(
            r, {"mode", "depth", "cutoff", "relation_weight", "edge_base_credit", "lm_retry_cap"},
            "retriever");
        std::string mode = r.value("mode", "search");
        if (mode == "full")
            cfg.retrieval.mode = RetrieverMode::Full;
        else if (mode == "baseline")
            cfg.retrieval.mode = RetrieverMode::Baseline;
        else if (mode == "search")
            cfg.retrieval.mode = RetrieverMode::Search;
        else
            throw ConfigError("unknown retriever mode '" + mode + "'");
        cfg.retrieval.depth = r.value("depth", cfg.retrieval.depth);
        cfg.retrieval.cutoff = r.value("cutoff", cfg.retrieval.cutoff);
        cfg.retrieval.relation_weight = r.value("relation_weight", cfg.retrieval.relation_weight);
        cfg.retrieval.edge_base_credit =
            r.value("edge_base_credit", cfg.retrieval.edge_base_credit);
        cfg.retrieval.lm_retry_cap = r.value("lm_retry_cap", cfg.retrieval.lm_retry_cap);
    }
    if (j.contains("planner")) {
        const auto& p = j["planner"];
        detail::reject_unknown(p,
                               {"timeout_ms", "expansion_cap", "plateau_expansions",
                                "max_ground_actions", "minimize"},
                               "planner");
        cfg.planner.timeout_ms = p.value("timeout_ms", cfg.planner.timeout_ms);
        cfg.planner.expansion_cap = p.value("expansion_cap", cfg.planner.expansion_cap);
        cfg.planner.plateau_expansions =
            p.value("plateau_expansions", cfg.planner.plateau_expansions);
        cfg.planner.max_ground_actions =
            p.value("max_ground_actions", cfg.planner.max_ground_actions);
        cfg.planner.minimize = p.value("minimize", cfg.planner.minimize);
    }
    if (j.contains("faults")) {
        const auto& f = j["faults"];
        detail::reject_unknown(f, {"first_attempt_rate", "retry_rate"}, "faults");
        cfg.faults.first_attempt_rate = f.value("first_attempt_rate", cfg.faults.first_attempt_rate);
        cfg.faults.retry_rate = f.value("retry_rate", cfg.faults.retry_rate);
    }
    if (j.contains("always_include"))
        cfg.always_include = j["always_include"].get<std::vector<std::string>>();

    cfg.validate();
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error in '" + path.string() + "': " + e.what());
    }
    return parse_config(j);
}

// Playbook: a JSON array of {match, query_graph?, selection?, update?, goal?}
// entries; `match` is matched as a substring of the request text.
inline void load_playbook(OracleBackend& oracle, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open playbook '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("playbook parse error: " + std::string(e.what()));
    }
    if (!j.is_array()) throw ConfigError("playbook must be a JSON array");
    for (const auto& entry : j) {
        detail::reject_unknown(entry, {"match", "query_graph", "selection", "update", "goal"},
                               "playbook entry");
        OracleAnswers a;
        a.query_graph = entry.value("query_graph", "");
        a.selection = entry.value("selection", "");
        a.update = entry.value("update", "");
        a.goal = entry.value("goal", "");
        oracle.add_playbook_entry(entry.value("match", ""), std::move(a));
    }
}

}  // namespace kgplan
