#pragma once
// The seven-variant ablation harness over the simulator: each variant runs
// against a freshly regenerated (hence byte-identical) stream for the seed,
// with its own retriever/verifier switches, and is scored per event and per
// task against the stream's ground truth.
//
//   s    static: full initial graph, no updates at all
//   r-   full-context updates, no verifier
//   r-v  full-context updates, verified
//   r+   baseline retrieval (LM picks names), no verifier
//   r+v  baseline retrieval, verified
//   rs   search retrieval, no verifier
//   rsv  search retrieval, verified

#include <filesystem>
#include <fstream>

#include "kgplan/simulator.hpp"

namespace kgplan {

struct VariantSpec {
    std::string id;
    bool updates_enabled = true;
    RetrieverMode retriever = RetrieverMode::Search;
    bool verifier = true;
};

inline std::vector<VariantSpec> all_variants() {
    return {{"s", false, RetrieverMode::Full, false},
            {"r-", true, RetrieverMode::Full, false},
            {"r-v", true, RetrieverMode::Full, true},
            {"r+", true, RetrieverMode::Baseline, false},
            {"r+v", true, RetrieverMode::Baseline, true},
            {"rs", true, RetrieverMode::Search, false},
            {"rsv", true, RetrieverMode::Search, true}};
}

inline std::optional<VariantSpec> find_variant(const std::string& id) {
    for (auto& v : all_variants())
        if (v.id == id) return v;
    return std::nullopt;
}

enum class SimBackend { Oracle, Faulty };

struct AblationConfig {
    uint64_t seed = 0;
    WorldSpec world;
    SimBackend backend = SimBackend::Oracle;
    FaultProfile faults{0.3, 0.15, all_fault_kinds()};
    long token_ceiling = 0;  // 0 = unlimited
    RetrievalConfig retrieval;
    PlannerConfig planner;
    std::filesystem::path run_dir;  // artifacts per variant when set
};

struct EventRecord {
    bool attempted = false;
    bool update_success = false;  // the NL update applied
    bool graphs_match = false;    // agent graph equals ground truth afterwards
    int attempts = 0;
    long tokens = 0;  // prompt+completion tokens spent on this event
};

struct TaskRecord {
    PlanScore score = PlanScore::NoPlan;
    std::string stage;  // pipeline failure tag when not success
    size_t plan_length = 0;
    long tokens = 0;
    double retrieval_ms = 0;
    double plan_ms = 0;       // grounding + search on the agent's problem
    double full_plan_ms = 0;  // same goal solved from the full ground-truth init
};

struct VariantResult {
    VariantSpec spec;
    std::vector<EventRecord> events;
    std::vector<TaskRecord> tasks;
    bool incomplete = false;  // token budget exhausted mid-run
    long prompt_tokens = 0;
    long completion_tokens = 0;

    double state_change_rate() const {
        if (events.empty()) return 0.0;
        int ok = 0;
        for (const auto& e : events) ok += e.graphs_match ? 1 : 0;
        return static_cast<double>(ok) / static_cast<double>(events.size());
    }
    double plan_success_rate() const {
        if (tasks.empty()) return 0.0;
        int ok = 0;
        for (const auto& t : tasks) ok += t.score == PlanScore::Success ? 1 : 0;
        return static_cast<double>(ok) / static_cast<double>(tasks.size());
    }
};

struct ScoreBoard {
    uint64_t seed = 0;
    std::string stream_digest;
    std::string backend;
    std::vector<VariantResult> variants;
};

inline VariantResult run_variant(const Simulator& sim, const SimStream& stream,
                                 const VariantSpec& spec, const AblationConfig& cfg) {
    VariantResult result;
    result.spec = spec;

    WorldGraph agent = stream.initial;
    auto oracle = std::make_shared<OracleBackend>();
    std::shared_ptr<LmBackend> backend = oracle;
    std::shared_ptr<FaultyBackend> faulty;
    if (cfg.backend == SimBackend::Faulty) {
        faulty = std::make_shared<FaultyBackend>(oracle, cfg.faults, cfg.seed,
                                                 [&agent]() -> const WorldGraph* { return &agent; });
        backend = faulty;
    }
    LmGateway gw(backend);
    gw.set_token_ceiling(cfg.token_ceiling);

    RetrievalConfig retrieval = cfg.retrieval;
    retrieval.mode = spec.retriever;
    Retriever retriever(retrieval);

    PipelineConfig pipeline_cfg;
    pipeline_cfg.retrieval = retrieval;
    pipeline_cfg.planner = cfg.planner;
    pipeline_cfg.always_include = household_always_include();
    TaskPipeline pipeline(pipeline_cfg);
    if (!cfg.run_dir.empty()) pipeline.set_run_dir(cfg.run_dir / spec.id);

    UpdaterConfig updater_cfg;
    updater_cfg.use_verifier = spec.verifier;

    for (size_t i = 0; i < stream.steps.size(); ++i) {
        const SimStep& step = stream.steps[i];
        if (faulty) faulty->set_event_key(i);
        try {
            if (step.kind == SimStep::Kind::Event) {
                EventRecord rec;
                if (spec.updates_enabled) {
                    oracle->stage(step.event.answers);
                    long tokens_before = gw.transcript().total_tokens();
                    rec.attempted = true;
                    try {
                        auto [outcome, next] =
                            process_nl_update(agent, step.event.text, retriever, gw, updater_cfg);
                        agent = std::move(next);
                        rec.update_success = outcome.success;
                        rec.attempts = outcome.attempts_used;
                    } catch (const LmError&) {
                        rec.update_success = false;
                    } catch (const GraphError&) {
                        // unverified delta clashed with a diverged graph
                        rec.update_success = false;
                    }
                    rec.tokens = gw.transcript().total_tokens() - tokens_before;
                }
                rec.graphs_match = score_state_change(agent, step.truth_after).match;
                result.events.push_back(rec);
            } else {
                TaskRecord rec;
                oracle->stage(step.task.answers);
                long tokens_before = gw.transcript().total_tokens();
                PlanOutcome outcome = pipeline.plan_task(agent, step.task.text, gw);
                rec.tokens = gw.transcript().total_tokens() - tokens_before;
                rec.stage = outcome.stage;
                rec.plan_length = outcome.plan.length();
                rec.retrieval_ms = outcome.timings.retrieval_ms;
                rec.plan_ms = outcome.timings.ground_ms + outcome.timings.search_ms;
                rec.score = score_plan(*sim.domain(), step.task.truth_problem, outcome);

                // reference: the same goal planned from the full ground-truth init
                SolveResult full = solve(*sim.domain(), step.task.truth_problem, cfg.planner);
                rec.full_plan_ms = full.plan.stats.ground_ms + full.plan.stats.search_ms;
                result.tasks.push_back(rec);

                // the robot's own execution reaches the graph through the
                // perception channel; if the belief graph diverged too far
                // for a clean delta, perception overrides it set-wise
                if (spec.updates_enabled && !step.task.execution_delta.empty()) {
                    try {
                        agent = process_perception_update(agent, step.task.execution_delta);
                    } catch (const GraphError&) {
                        agent = agent.apply_delta_unchecked(step.task.execution_delta);
                    }
                }
            }
        } catch (const BudgetExceeded&) {
            result.incomplete = true;
            break;
        }
    }
    result.prompt_tokens = gw.transcript().total_input_tokens();
    result.completion_tokens = gw.transcript().total_output_tokens();

    if (!cfg.run_dir.empty()) {
        std::filesystem::create_directories(cfg.run_dir / spec.id);
        std::ofstream out(cfg.run_dir / spec.id / "transcript.jsonl");
        gw.transcript().dump_jsonl(out);
    }
    return result;
}

inline ScoreBoard run_ablation(const std::vector<VariantSpec>& variants,
                               const AblationConfig& cfg) {
    Simulator sim;
    ScoreBoard board;
    board.seed = cfg.seed;
    board.backend = cfg.backend == SimBackend::Oracle ? "oracle" : "faulty";
    for (const auto& spec : variants) {
        // regenerate per variant; identical digests certify paired fairness
        SimStream stream = sim.generate(cfg.seed, cfg.world);
        if (board.stream_digest.empty())
            board.stream_digest = stream.digest;
        else if (board.stream_digest != stream.digest)
            throw std::logic_error("stream digest diverged between variants");
        board.variants.push_back(run_variant(sim, stream, spec, cfg));
    }
    return board;
}

// --- reports -----------------------------------------------------------------

inline nlohmann::json scoreboard_json(const ScoreBoard& board) {
    nlohmann::json j;
    j["seed"] = board.seed;
    j["stream_digest"] = board.stream_digest;
    j["backend"] = board.backend;
    j["variants"] = nlohmann::json::array();
    for (const auto& v : board.variants) {
        nlohmann::json vj;
        vj["id"] = v.spec.id;
        vj["retriever"] = retriever_mode_name(v.spec.retriever);
        vj["verifier"] = v.spec.verifier;
        vj["updates"] = v.spec.updates_enabled;
        vj["incomplete"] = v.incomplete;
        vj["events"] = v.events.size();
        vj["tasks"] = v.tasks.size();
        vj["state_change_rate"] = v.state_change_rate();
        vj["plan_success_rate"] = v.plan_success_rate();
        vj["prompt_tokens"] = v.prompt_tokens;
        vj["completion_tokens"] = v.completion_tokens;
        std::map<std::string, int> failures;
        for (const auto& t : v.tasks)
            if (t.score != PlanScore::Success) failures[plan_score_name(t.score)]++;
        vj["plan_failures"] = failures;
        j["variants"].push_back(std::move(vj));
    }
    return j;
}

// Per-event token usage, one row per (variant, event).
inline std::string token_report_csv(const ScoreBoard& board) {
    std::ostringstream os;
    os << "variant,event_index,attempted,update_success,graphs_match,attempts,tokens\n";
    for (const auto& v : board.variants)
        for (size_t i = 0; i < v.events.size(); ++i) {
            const auto& e = v.events[i];
            os << v.spec.id << "," << i << "," << e.attempted << "," << e.update_success << ","
               << e.graphs_match << "," << e.attempts << "," << e.tokens << "\n";
        }
    return os.str();
}

// Per-task planner timing, one row per (variant, task).
inline std::string plan_time_report_csv(const ScoreBoard& board) {
    std::ostringstream os;
    os << "variant,task_index,score,plan_length,retrieval_ms,plan_ms,full_plan_ms,tokens\n";
    for (const auto& v : board.variants)
        for (size_t i = 0; i < v.tasks.size(); ++i) {
            const auto& t = v.tasks[i];
            os << v.spec.id << "," << i << "," << plan_score_name(t.score) << ","
               << t.plan_length << "," << t.retrieval_ms << "," << t.plan_ms << ","
               << t.full_plan_ms << "," << t.tokens << "\n";
        }
    return os.str();
}

inline void write_reports(const ScoreBoard& board, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "scoreboard.json") << scoreboard_json(board).dump(2) << "\n";
    std::ofstream(dir / "state_change_tokens.csv") << token_report_csv(board);
    std::ofstream(dir / "planner_times.csv") << plan_time_report_csv(board);
}

}  // namespace kgplan
