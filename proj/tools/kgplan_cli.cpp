// kgplan command-line front end: build worlds, apply NL/perception updates,
// plan tasks, run the ablation simulation, and drive an interactive session.
//
// Exit codes: 0 ok, 2 config/usage, 3 missing file, 4 backend failure,
// 5 update rejected, 6 planning failed, 7 parse error.

#include <sys/file.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "kgplan/http_backends.hpp"
#include "kgplan/kgplan.hpp"

namespace {

using namespace kgplan;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitMissingFile = 3;
constexpr int kExitBackend = 4;
constexpr int kExitUpdateFailed = 5;
constexpr int kExitPlanFailed = 6;
constexpr int kExitParse = 7;

// Exclusive advisory lock next to the graph file; released on destruction.
class FileLock {
public:
    explicit FileLock(const std::filesystem::path& target) {
        path_ = target;
        path_ += ".lock";
        fd_ = ::open(path_.c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0)
            throw ConfigError("cannot lock '" + path_.string() + "'");
    }
    ~FileLock() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }

private:
    std::filesystem::path path_;
    int fd_ = -1;
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw GraphError(GraphError::Code::Persistence, "cannot open '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string default_domain_path() {
    const char* env = std::getenv("KGPLAN_DOMAIN");
    if (env) return env;
    return std::string(KGPLAN_DATA_DIR) + "/household.pddl";
}

struct Session {
    RunConfig cfg;
    std::shared_ptr<const Domain> domain;
    std::shared_ptr<OracleBackend> oracle;  // set for oracle/faulty backends
    std::shared_ptr<LmBackend> backend;
    WorldGraph graph;

    LmGateway make_gateway() {
        TemplateSet templates = TemplateSet::builtin();
        if (!cfg.templates_dir.empty()) templates.load_overrides(cfg.templates_dir);
        LmGateway gw(backend, std::move(templates));
        gw.set_token_ceiling(cfg.token_ceiling);
        return gw;
    }
};

Session open_session(const RunConfig& cfg, bool need_graph) {
    Session s;
    s.cfg = cfg;
    std::string domain_path = cfg.domain_path.empty() ? default_domain_path() : cfg.domain_path;
    s.domain =
        std::make_shared<const Domain>(parse_domain(read_file(domain_path), domain_path));

    if (need_graph) {
        if (cfg.graph_path.empty()) throw ConfigError("no graph file configured (--graph)");
        s.graph = load_graph(cfg.graph_path, s.domain);
    } else {
        s.graph = WorldGraph(s.domain);
    }

    if (cfg.backend == "oracle" || cfg.backend == "faulty") {
        s.oracle = std::make_shared<OracleBackend>();
        if (!cfg.playbook_path.empty()) load_playbook(*s.oracle, cfg.playbook_path);
        s.backend = s.oracle;
        if (cfg.backend == "faulty") {
            WorldGraph* live = &s.graph;
            s.backend = std::make_shared<FaultyBackend>(
                s.oracle, cfg.faults, cfg.seed, [live]() -> const WorldGraph* { return live; });
        }
    } else if (cfg.backend == "scripted") {
        if (cfg.transcript_path.empty()) throw ConfigError("scripted backend needs --transcript");
        std::ifstream in(cfg.transcript_path);
        if (!in) throw ConfigError("cannot open transcript '" + cfg.transcript_path + "'");
        s.backend = std::make_shared<ScriptedBackend>(ScriptedBackend::from_transcript(in));
    } else {
        s.backend = std::make_shared<HttpChatBackend>(HttpChatBackend::from_env());
    }
    return s;
}

PipelineConfig pipeline_config(const RunConfig& cfg) {
    PipelineConfig p;
    p.retrieval = cfg.retrieval;
    p.planner = cfg.planner;
    p.always_include =
        cfg.always_include.empty() ? household_always_include() : cfg.always_include;
    p.restrict_objects = cfg.restrict_objects;
    return p;
}

void print_delta(const GraphDelta& d) {
    auto list = [](const TripletSet& set) {
        if (set.empty()) return std::string("empty");
        std::vector<std::string> parts;
        for (const auto& t : set) parts.push_back(t.str());
        return join(parts, ", ");
    };
    std::cout << "REMOVE: " << list(d.removals) << "\n";
    std::cout << "ADD: " << list(d.additions) << "\n";
}

int cmd_init(const RunConfig& cfg, bool demo, const std::string& problem_path, bool random,
             const WorldSpec& spec, bool force) {
    if (cfg.graph_path.empty()) throw ConfigError("init needs --graph");
    if (std::filesystem::exists(cfg.graph_path) && !force)
        throw ConfigError("'" + cfg.graph_path + "' exists; use --force to overwrite");

    std::string domain_path = cfg.domain_path.empty() ? default_domain_path() : cfg.domain_path;
    auto domain =
        std::make_shared<const Domain>(parse_domain(read_file(domain_path), domain_path));

    WorldGraph g(domain);
    if (demo) {
        g = demo_world(domain);
    } else if (!problem_path.empty()) {
        Problem p = parse_problem(read_file(problem_path), *domain, problem_path);
        for (const auto& o : p.objects) g.add_entity({o.name, o.type, {}});
        for (const auto& t : from_init_atoms(p.init, *domain)) g.add_triplet(t);
    } else if (random) {
        Simulator sim;
        g = sim.generate_world(cfg.seed, spec);
    } else {
        throw ConfigError("init needs one of --demo, --problem or --random");
    }
    save_graph(g, cfg.graph_path);
    std::cout << "wrote " << cfg.graph_path << " (" << g.entities().size() << " entities, "
              << g.triplets().size() << " triplets)\n";
    return kExitOk;
}

int cmd_update(const RunConfig& cfg, const std::string& text) {
    FileLock lock(cfg.graph_path);
    Session s = open_session(cfg, true);
    LmGateway gw = s.make_gateway();
    Retriever retriever(cfg.retrieval);
    UpdaterConfig ucfg{cfg.retry_cap, cfg.verifier};
    auto [outcome, next] = process_nl_update(s.graph, text, retriever, gw, ucfg);
    if (!outcome.success) {
        std::cerr << "update failed: " << outcome.failure << "\n";
        for (const auto& attempt : outcome.attempts)
            if (!attempt.report.clean()) std::cerr << attempt.report.render();
        return kExitUpdateFailed;
    }
    save_graph(next, cfg.graph_path);
    std::cout << "applied after " << outcome.attempts_used << " attempt(s):\n";
    print_delta(outcome.delta);
    return kExitOk;
}

int cmd_perceive(const RunConfig& cfg, const std::string& delta_path) {
    FileLock lock(cfg.graph_path);
    Session s = open_session(cfg, true);
    GraphDelta delta = to_delta(parse_update(read_file(delta_path)), DeltaSource::Perception);
    WorldGraph next = process_perception_update(s.graph, delta);
    save_graph(next, cfg.graph_path);
    std::cout << "applied perception delta:\n";
    print_delta(delta);
    return kExitOk;
}

int cmd_plan(const RunConfig& cfg, const std::string& task, bool diff_init) {
    Session s = open_session(cfg, true);
    LmGateway gw = s.make_gateway();
    TaskPipeline pipeline(pipeline_config(cfg));
    if (!cfg.run_dir.empty()) pipeline.set_run_dir(cfg.run_dir);
    PlanOutcome out = pipeline.plan_task(s.graph, task, gw);
    if (diff_init) {
        std::cout << "; init: " << out.retrieved.size() << " of " << s.graph.triplets().size()
                  << " triplets retrieved\n";
        for (const auto& t : s.graph.triplets())
            if (!out.retrieved.count(t)) std::cout << "; pruned " << t.str() << "\n";
    }
    if (!out.success) {
        std::cerr << "planning failed at stage '" << out.stage << "': " << out.failure << "\n";
        return kExitPlanFailed;
    }
    std::cout << print_plan(out.plan);
    if (out.plan.empty()) std::cout << "; empty plan, goal already satisfied\n";
    return kExitOk;
}

int cmd_simulate(const RunConfig& cfg, const std::string& variants_arg,
                 const std::string& sim_backend, const WorldSpec& spec,
                 const std::string& out_dir) {
    std::vector<VariantSpec> variants;
    if (variants_arg == "all") {
        variants = all_variants();
    } else {
        for (const auto& id : split(variants_arg, ',')) {
            auto v = find_variant(trim(id));
            if (!v) throw ConfigError("unknown variant '" + trim(id) + "'");
            variants.push_back(*v);
        }
    }
    AblationConfig acfg;
    acfg.seed = cfg.seed;
    acfg.world = spec;
    acfg.retrieval = cfg.retrieval;
    acfg.planner = cfg.planner;
    acfg.token_ceiling = cfg.token_ceiling;
    acfg.faults = cfg.faults;
    acfg.run_dir = out_dir;
    if (sim_backend == "oracle")
        acfg.backend = SimBackend::Oracle;
    else if (sim_backend == "faulty")
        acfg.backend = SimBackend::Faulty;
    else
        throw ConfigError("simulate backend must be oracle or faulty");

    ScoreBoard board = run_ablation(variants, acfg);
    write_reports(board, out_dir);
    std::cout << "stream digest: " << board.stream_digest << "\n";
    for (const auto& v : board.variants) {
        std::cout << v.spec.id << ": state-change "
                  << static_cast<int>(100 * v.state_change_rate() + 0.5) << "%  plans "
                  << static_cast<int>(100 * v.plan_success_rate() + 0.5) << "%  tokens "
                  << (v.prompt_tokens + v.completion_tokens)
                  << (v.incomplete ? "  [incomplete: budget exhausted]" : "") << "\n";
    }
    std::cout << "reports: " << (std::filesystem::path(out_dir) / "scoreboard.json").string()
              << ", " << (std::filesystem::path(out_dir) / "state_change_tokens.csv").string()
              << ", " << (std::filesystem::path(out_dir) / "planner_times.csv").string() << "\n";
    return kExitOk;
}

int cmd_repl(const RunConfig& cfg) {
    FileLock lock(cfg.graph_path);
    Session s = open_session(cfg, true);
    LmGateway gw = s.make_gateway();
    Retriever retriever(cfg.retrieval);
    TaskPipeline pipeline(pipeline_config(cfg));
    UpdaterConfig ucfg{cfg.retry_cap, cfg.verifier};

    std::cout << "kgplan repl; plain text updates the graph, '!plan <task>' plans, "
                 "'!quit' exits\n";
    std::string line;
    while (std::cout << "> " << std::flush, std::getline(std::cin, line)) {
        std::string text = trim(line);
        if (text.empty()) continue;
        if (text == "!quit" || text == "!q") break;
        try {
            if (starts_with(text, "!plan")) {
                PlanOutcome out = pipeline.plan_task(s.graph, trim(text.substr(5)), gw);
                if (out.success)
                    std::cout << print_plan(out.plan);
                else
                    std::cout << "planning failed at stage '" << out.stage << "': " << out.failure
                              << "\n";
            } else {
                auto [outcome, next] = process_nl_update(s.graph, text, retriever, gw, ucfg);
                if (outcome.success) {
                    s.graph = std::move(next);
                    save_graph(s.graph, cfg.graph_path);
                    print_delta(outcome.delta);
                } else {
                    std::cout << "update failed: " << outcome.failure << "\n";
                }
            }
        } catch (const LmError& e) {
            std::cout << "backend error: " << e.what() << "\n";
        }
    }
    if (!cfg.run_dir.empty()) {
        std::filesystem::create_directories(cfg.run_dir);
        auto path = std::filesystem::path(cfg.run_dir) / "repl_transcript.jsonl";
        std::ofstream out(path);
        gw.transcript().dump_jsonl(out);
        std::cout << "transcript: " << path.string() << "\n";
    }
    return kExitOk;
}

int cmd_inspect(const RunConfig& cfg, const std::string& pattern) {
    Session s = open_session(cfg, true);
    std::cout << "domain " << s.domain->name << ", revision " << s.graph.revision() << ", "
              << s.graph.entities().size() << " entities, " << s.graph.triplets().size()
              << " triplets\n";
    auto matches = [&](const std::string& text) {
        return pattern.empty() || text.find(pattern) != std::string::npos;
    };
    for (const auto& [name, e] : s.graph.entities()) {
        if (!matches(name)) continue;
        std::cout << "entity " << name << " - " << e.type;
        for (const auto& [k, v] : e.attributes) std::cout << " " << k << "=" << v;
        std::cout << "\n";
    }
    for (const auto& t : s.graph.triplets())
        if (matches(t.str())) std::cout << t.str() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"knowledge-graph world model with retrieval-backed PDDL planning"};
    app.require_subcommand(1);

    std::string config_path;
    RunConfig cli;
    bool no_verifier = false;
    std::string retriever_mode;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--domain", cli.domain_path, "domain PDDL file");
    app.add_option("--graph", cli.graph_path, "graph file");
    app.add_option("--backend", cli.backend, "oracle|faulty|scripted|http");
    app.add_option("--playbook", cli.playbook_path, "oracle playbook JSON");
    app.add_option("--transcript", cli.transcript_path, "scripted transcript (jsonl)");
    app.add_option("--templates", cli.templates_dir, "prompt template override dir");
    app.add_option("--run-dir", cli.run_dir, "artifact output directory");
    app.add_option("--seed", cli.seed, "random seed");
    app.add_option("--token-ceiling", cli.token_ceiling, "abort after this many tokens");
    app.add_option("--retriever", retriever_mode, "full|baseline|search");
    app.add_option("--cutoff", cli.retrieval.cutoff, "similarity cutoff fraction");
    app.add_option("--depth", cli.retrieval.depth, "neighborhood expansion depth");
    app.add_option("--retry-cap", cli.retry_cap, "LM retry cap");
    app.add_flag("--no-verifier", no_verifier, "disable update verification");

    auto* init = app.add_subcommand("init", "create a graph file");
    bool init_demo = false, init_random = false, init_force = false;
    std::string init_problem;
    WorldSpec spec;
    init->add_flag("--demo", init_demo, "built-in demo household");
    init->add_option("--problem", init_problem, "seed from a problem PDDL's objects and init");
    init->add_flag("--random", init_random, "random household world");
    init->add_flag("--force", init_force, "overwrite an existing graph");
    init->add_option("--rooms", spec.rooms, "random world: room count");
    init->add_option("--persons", spec.persons, "random world: household size");
    init->add_option("--items", spec.small_items, "random world: item count");

    auto* update = app.add_subcommand("update", "apply an NL state change");
    std::string update_text;
    update->add_option("text", update_text, "state change description")->required();

    auto* perceive = app.add_subcommand("perceive", "apply a structured delta file");
    std::string delta_path;
    perceive->add_option("file", delta_path, "delta file (REMOVE:/ADD: format)")->required();

    auto* plan = app.add_subcommand("plan", "plan an NL task");
    std::string plan_text;
    bool diff_init = false;
    plan->add_option("task", plan_text, "task description")->required();
    plan->add_flag("--diff-init", diff_init, "show retrieved vs full init");

    auto* simulate = app.add_subcommand("simulate", "run the ablation benchmark");
    std::string variants = "all", sim_backend = "oracle", sim_out = "runs/sim";
    simulate->add_option("--variants", variants,
                         "all or comma-separated ids (s,r-,r-v,r+,r+v,rs,rsv)");
    simulate->add_option("--sim-backend", sim_backend, "oracle|faulty");
    simulate->add_option("--events", spec.events, "event count");
    simulate->add_option("--tasks", spec.tasks, "task count");
    simulate->add_option("--rooms", spec.rooms, "room count");
    simulate->add_option("--items", spec.small_items, "item count");
    simulate->add_option("--min-triplets", spec.min_triplets, "grow world to this size");
    simulate->add_option("--out", sim_out, "report directory");

    auto* repl = app.add_subcommand("repl", "interactive session");
    auto* inspect = app.add_subcommand("inspect", "print entities and triplets");
    std::string pattern;
    inspect->add_option("pattern", pattern, "substring filter");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg = config_path.empty() ? RunConfig{} : kgplan::load_config(config_path);
        // flag overrides on top of the config file
        auto override_str = [](std::string& dst, const std::string& src) {
            if (!src.empty()) dst = src;
        };
        override_str(cfg.domain_path, cli.domain_path);
        override_str(cfg.graph_path, cli.graph_path);
        override_str(cfg.playbook_path, cli.playbook_path);
        override_str(cfg.transcript_path, cli.transcript_path);
        override_str(cfg.templates_dir, cli.templates_dir);
        if (cli.backend != "oracle") cfg.backend = cli.backend;
        if (cli.run_dir != "runs") cfg.run_dir = cli.run_dir;
        if (cli.seed != 0) cfg.seed = cli.seed;
        if (cli.token_ceiling != 0) cfg.token_ceiling = cli.token_ceiling;
        if (cli.retrieval.cutoff != 0.8) cfg.retrieval.cutoff = cli.retrieval.cutoff;
        if (cli.retrieval.depth != 2) cfg.retrieval.depth = cli.retrieval.depth;
        if (cli.retry_cap != 3) cfg.retry_cap = cli.retry_cap;
        if (no_verifier) cfg.verifier = false;
        if (!retriever_mode.empty()) {
            if (retriever_mode == "full")
                cfg.retrieval.mode = RetrieverMode::Full;
            else if (retriever_mode == "baseline")
                cfg.retrieval.mode = RetrieverMode::Baseline;
            else if (retriever_mode == "search")
                cfg.retrieval.mode = RetrieverMode::Search;
            else
                throw ConfigError("unknown retriever mode '" + retriever_mode + "'");
        }
        cfg.validate();

        if (init->parsed())
            return cmd_init(cfg, init_demo, init_problem, init_random, spec, init_force);
        if (update->parsed()) return cmd_update(cfg, update_text);
        if (perceive->parsed()) return cmd_perceive(cfg, delta_path);
        if (plan->parsed()) return cmd_plan(cfg, plan_text, diff_init);
        if (simulate->parsed()) return cmd_simulate(cfg, variants, sim_backend, spec, sim_out);
        if (repl->parsed()) return cmd_repl(cfg);
        if (inspect->parsed()) return cmd_inspect(cfg, pattern);
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitParse;
    } catch (const OutputParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitParse;
    } catch (const BudgetExceeded& e) {
        std::cerr << "budget exceeded: " << e.what() << "\n";
        return kExitBackend;
    } catch (const LmError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const PlannerError& e) {
        std::cerr << "planner error: " << e.what() << "\n";
        return kExitPlanFailed;
    } catch (const GraphError& e) {
        std::cerr << "graph error: " << e.what() << "\n";
        std::string msg = e.what();
        return msg.find("cannot open") != std::string::npos ? kExitMissingFile : kExitParse;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}
