#pragma once
// NL task to validated plan: retrieve context, ask the LM for a (:goal ...)
// block, synthesize a problem whose :init is the retrieved triplet set, and
// run the planner. Static facts named in the always-include list are merged
// into the init so retrieval pruning cannot starve the planner of topology.

#include <filesystem>
#include <fstream>
#include <string>

#include "kgplan/lm.hpp"
#include "kgplan/pddl_parser.hpp"
#include "kgplan/planner.hpp"
#include "kgplan/retrieval.hpp"
#include "kgplan/world_graph.hpp"

namespace kgplan {

struct PipelineConfig {
    RetrievalConfig retrieval;
    PlannerConfig planner;
    std::vector<std::string> always_include;  // predicates protected from pruning
    bool restrict_objects = false;            // :objects from retrieved entities only
    int goal_retry_cap = 3;
};

struct PlanTimings {
    double retrieval_ms = 0;
    double lm_ms = 0;
    double ground_ms = 0;
    double search_ms = 0;
    double total_ms = 0;
};

struct PlanOutcome {
    bool success = false;
    std::string stage;    // failing stage tag when !success
    std::string failure;  // human-readable reason
    TripletSet retrieved;  // E_t^rel after the always-include merge
    GoalFormula goal;
    Problem problem;
    SolveStatus solve_status = SolveStatus::Unsolvable;
    Plan plan;
    PlanTimings timings;
    RetrievalDiagnostics retrieval_diag;
};

inline std::string render_domain_excerpt(const Domain& d) {
    std::ostringstream os;
    os << "types:";
    for (const auto& [child, parent] : d.types()) os << " " << child << " - " << parent << ";";
    os << "\npredicates:";
    for (const auto& [name, p] : d.predicates()) {
        os << " (" << name;
        for (const auto& param : p.params) os << " " << param.name << " - " << param.type;
        os << ")";
    }
    os << "\nactions:";
    for (const auto& a : d.actions()) {
        os << " " << a.name << "(";
        for (size_t i = 0; i < a.params.size(); ++i)
            os << (i ? ", " : "") << a.params[i].name << " - " << a.params[i].type;
        os << ")";
    }
    return os.str();
}

class TaskPipeline {
public:
    TaskPipeline(PipelineConfig cfg, SimilarityScorer scorer = SimilarityScorer{})
        : cfg_(std::move(cfg)), retriever_(cfg_.retrieval, std::move(scorer)) {}

    const PipelineConfig& config() const { return cfg_; }
    const std::vector<PlanOutcome>& history() const { return history_; }

    // Writes problem_<k>.pddl and plan_<k>.txt per planned task when set.
    void set_run_dir(std::filesystem::path dir) { run_dir_ = std::move(dir); }

    PlanOutcome plan_task(const WorldGraph& g, const std::string& task, LmGateway& gw) {
        last_task_ = task;
        PlanOutcome out = run(g, task, gw);
        history_.push_back(out);
        return out;
    }

    // Re-runs the previous task against a fresh snapshot; the prior outcome
    // stays in history.
    PlanOutcome replan_on_update(const WorldGraph& g, LmGateway& gw) {
        if (last_task_.empty()) throw std::logic_error("replan_on_update without a prior task");
        PlanOutcome out = run(g, last_task_, gw);
        history_.push_back(out);
        return out;
    }

private:
    PlanOutcome run(const WorldGraph& g, const std::string& task, LmGateway& gw) {
        PlanOutcome out;
        Stopwatch total;

        // 1. retrieve
        Stopwatch clock;
        RetrievalResult retrieved;
        try {
            retrieved = retriever_.retrieve(g, task, gw);
        } catch (const LmError& e) {
            out.stage = "retrieval";
            out.failure = e.what();
            out.timings.total_ms = total.elapsed_ms();
            return out;
        }
        out.retrieval_diag = retrieved.diagnostics;
        out.retrieved = retrieved.relevant;
        for (const auto& t : g.triplets())
            for (const auto& pred : cfg_.always_include)
                if (t.predicate == pred) out.retrieved.insert(t);
        out.timings.retrieval_ms = clock.elapsed_ms();

        // 2. goal generation
        clock.reset();
        std::string entities;
        for (const auto& [name, e] : g.entities())
            entities += name + " - " + e.type + "\n";
        std::string parse_failure;
        bool have_goal = false;
        for (int attempt = 1; attempt <= cfg_.goal_retry_cap && !have_goal; ++attempt) {
            PromptBundle bundle =
                gw.make_prompt("goal", {{"domain", render_domain_excerpt(*g.domain())},
                                        {"entities", entities},
                                        {"context", render_context(out.retrieved)},
                                        {"task", task}},
                               attempt);
            try {
                std::string completion = gw.complete(bundle);
                out.goal = parse_goal_formula(extract_goal_block(completion), *g.domain());
                have_goal = true;
            } catch (const OutputParseError& e) {
                parse_failure = e.what();
            } catch (const ParseError& e) {
                parse_failure = e.what();
            }
        }
        out.timings.lm_ms = clock.elapsed_ms();
        if (!have_goal) {
            out.stage = "goal-generation";
            out.failure = parse_failure;
            out.timings.total_ms = total.elapsed_ms();
            return out;
        }

        // 3. problem synthesis
        out.problem = make_problem(g, out.retrieved, out.goal, slug(task));
        if (cfg_.restrict_objects) {
            std::set<std::string> keep;
            for (const auto& t : out.retrieved) {
                keep.insert(t.subject);
                if (t.form == Triplet::Form::Relationship) keep.insert(t.object);
            }
            std::erase_if(out.problem.objects,
                          [&](const TypedObject& o) { return !keep.count(o.name); });
        }

        // 4. solve + self-check
        try {
            SolveResult r = solve(*g.domain(), out.problem, cfg_.planner);
            out.solve_status = r.status;
            out.plan = r.plan;
            out.timings.ground_ms = r.plan.stats.ground_ms;
            out.timings.search_ms = r.plan.stats.search_ms;
            if (r.status == SolveStatus::Solved) {
                ValidationResult v = validate(*g.domain(), out.problem, r.plan);
                if (!v.valid) {
                    out.stage = "validation";
                    out.failure = v.reason;
                } else {
                    out.success = true;
                }
            } else if (r.status == SolveStatus::Timeout) {
                out.stage = "search";
                out.failure = "planner timeout";
            } else {
                bool restricted = cfg_.retrieval.mode != RetrieverMode::Full;
                out.stage = restricted ? "retrieval-insufficient" : "search";
                out.failure = restricted
                                  ? "unsolvable from the retrieved init; context may be missing"
                                  : "goal unreachable";
            }
        } catch (const PlannerError& e) {
            out.stage = "grounding";
            out.failure = e.what();
        }
        out.timings.total_ms = total.elapsed_ms();
        emit(out);
        return out;
    }

    void emit(const PlanOutcome& out) {
        if (run_dir_.empty()) return;
        std::filesystem::create_directories(run_dir_);
        std::string tag = std::to_string(history_.size() + 1);
        std::ofstream(run_dir_ / ("problem_" + tag + ".pddl")) << print_problem(out.problem);
        if (out.solve_status == SolveStatus::Solved)
            std::ofstream(run_dir_ / ("plan_" + tag + ".txt")) << print_plan(out.plan);
    }

    static std::string slug(const std::string& task) {
        std::string s = "task";
        std::string word;
        int words = 0;
        for (char raw : task + " ") {
            char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
            if (std::isalnum(static_cast<unsigned char>(c))) {
                word.push_back(c);
            } else if (!word.empty()) {
                s += "_" + word;
                word.clear();
                if (++words == 4) break;
            }
        }
        return s;
    }

    PipelineConfig cfg_;
    Retriever retriever_;
    std::string last_task_;
    std::vector<PlanOutcome> history_;
    std::filesystem::path run_dir_;
};

}  // namespace kgplan
