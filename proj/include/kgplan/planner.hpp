#pragma once
// Embedded STRIPS planner: grounding, greedy best-first search on the
// additive delete-relaxation heuristic with breadth-first tie-breaking and a
// uniform-cost fallback when the heuristic plateaus, plus a VAL-style plan
// executor used for validation and scoring.
//
// Negative preconditions and negative goal literals are compiled into
// complement atoms so the relaxation can see progress on them; the search
// state itself stays a set of positive facts.

#include <cstdio>
#include <limits>
#include <queue>
#include <unordered_map>
#include <unordered_set>

#include "kgplan/pddl.hpp"
#include "kgplan/util.hpp"

namespace kgplan {

class PlannerError : public std::runtime_error {
public:
    explicit PlannerError(const std::string& msg) : std::runtime_error(msg) {}
};

struct PlannerConfig {
    long max_ground_actions = 500000;
    double timeout_ms = 30000;
    long expansion_cap = 2000000;
    long plateau_expansions = 4096;  // GBFS expansions without h improvement
    bool minimize = true;            // drop redundant steps from found plans
};

struct PlanStep {
    std::string action;
    std::vector<std::string> args;

    std::string str() const {
        std::string s = "(" + action;
        for (const auto& a : args) s += " " + a;
        return s + ")";
    }

    auto operator<=>(const PlanStep&) const = default;
};

struct SearchStats {
    double ground_ms = 0;
    double search_ms = 0;
    long expansions = 0;
    long generated = 0;
    long ground_actions = 0;
    long reachable_actions = 0;
    bool used_fallback = false;
};

struct Plan {
    std::vector<PlanStep> steps;
    SearchStats stats;

    bool empty() const { return steps.empty(); }
    size_t length() const { return steps.size(); }
};

enum class SolveStatus { Solved, Unsolvable, Timeout };

struct SolveResult {
    SolveStatus status = SolveStatus::Unsolvable;
    Plan plan;  // meaningful when status == Solved; stats always filled

    bool solved() const { return status == SolveStatus::Solved; }
};

// k) (action obj ...)
inline std::string print_plan(const Plan& plan) {
    std::ostringstream os;
    for (size_t i = 0; i < plan.steps.size(); ++i)
        os << (i + 1) << ") " << plan.steps[i].str() << "\n";
    return os.str();
}

inline std::vector<PlanStep> parse_plan_text(const std::string& text) {
    std::vector<PlanStep> steps;
    for (const auto& raw : split(text, '\n')) {
        std::string line = trim(raw);
        if (line.empty() || line[0] == ';') continue;
        size_t paren = line.find('(');
        if (paren == std::string::npos)
            throw PlannerError("plan line without an action: '" + line + "'");
        size_t close = line.rfind(')');
        if (close == std::string::npos || close < paren)
            throw PlannerError("unbalanced plan step: '" + line + "'");
        std::string inner = line.substr(paren + 1, close - paren - 1);
        std::vector<std::string> parts;
        for (auto& p : split(inner, ' '))
            if (!trim(p).empty()) parts.push_back(normalize_name(trim(p)));
        if (parts.empty()) throw PlannerError("empty plan step: '" + line + "'");
        PlanStep s;
        s.action = parts[0];
        s.args.assign(parts.begin() + 1, parts.end());
        steps.push_back(std::move(s));
    }
    return steps;
}

// --- grounding ---------------------------------------------------------------

struct GroundAction {
    std::string schema;
    std::vector<std::string> args;
    std::vector<Atom> pre_pos;
    std::vector<Atom> pre_neg;
    std::vector<Atom> add;
    std::vector<Atom> del;

    PlanStep step() const { return {schema, args}; }
};

struct GroundModel {
    std::vector<GroundAction> actions;
    std::set<Atom> init;
    std::set<Literal> goal;
};

namespace detail {

inline Atom bind_atom(const Atom& a, const std::map<std::string, std::string>& binding) {
    Atom out = a;
    for (auto& arg : out.args) {
        auto it = binding.find(arg);
        if (it != binding.end()) arg = it->second;
    }
    return out;
}

}  // namespace detail

// Instantiates every schema over type-compatible object tuples. Actions with
// a positive precondition over a predicate that is never achievable (absent
// from init and from every add list) are pruned; `add wins` resolves ground
// add/delete overlaps.
inline GroundModel ground(const Domain& d, const Problem& p, const PlannerConfig& cfg = {}) {
    GroundModel model;
    model.init = p.init;
    model.goal = ground_goal(p.goal, d, p.objects);

    std::set<std::string> achievable;  // predicate-level
    for (const auto& a : p.init) achievable.insert(a.pred);
    for (const auto& schema : d.actions())
        for (const auto& e : schema.effects)
            if (!e.negated) achievable.insert(e.atom.pred);

    std::map<std::string, std::vector<std::string>> objects_by_type;
    objects_by_type[kRootType] = {};
    for (const auto& entry : d.types()) objects_by_type[entry.first] = {};
    for (const auto& o : p.objects)
        for (auto& [type, list] : objects_by_type)
            if (d.is_subtype(o.type, type)) list.push_back(o.name);

    long count = 0;
    for (const auto& schema : d.actions()) {
        std::map<std::string, std::string> binding;
        std::vector<size_t> idx(schema.params.size(), 0);
        // odometer over per-parameter candidate lists
        std::vector<const std::vector<std::string>*> lists;
        bool empty_domain = false;
        for (const auto& param : schema.params) {
            auto it = objects_by_type.find(param.type);
            if (it == objects_by_type.end() || it->second.empty()) {
                empty_domain = true;
                break;
            }
            lists.push_back(&it->second);
        }
        if (empty_domain) continue;
        while (true) {
            if (++count > cfg.max_ground_actions)
                throw PlannerError("grounding exceeded the configured cap of " +
                                   std::to_string(cfg.max_ground_actions) + " actions");
            for (size_t i = 0; i < schema.params.size(); ++i)
                binding[schema.params[i].name] = (*lists[i])[idx[i]];

            GroundAction ga;
            ga.schema = schema.name;
            for (const auto& param : schema.params) ga.args.push_back(binding[param.name]);
            bool keep = true;
            for (const auto& lit : schema.precondition) {
                Atom a = detail::bind_atom(lit.atom, binding);
                if (!lit.negated && !achievable.count(a.pred)) keep = false;
                (lit.negated ? ga.pre_neg : ga.pre_pos).push_back(std::move(a));
            }
            if (keep) {
                std::set<Atom> adds;
                for (const auto& lit : schema.effects)
                    if (!lit.negated) adds.insert(detail::bind_atom(lit.atom, binding));
                for (const auto& lit : schema.effects) {
                    if (!lit.negated) continue;
                    Atom a = detail::bind_atom(lit.atom, binding);
                    if (!adds.count(a)) ga.del.push_back(std::move(a));
                }
                ga.add.assign(adds.begin(), adds.end());
                model.actions.push_back(std::move(ga));
            }

            size_t k = schema.params.size();
            while (k > 0) {
                --k;
                if (++idx[k] < lists[k]->size()) break;
                idx[k] = 0;
                if (k == 0) goto schema_done;
            }
            if (schema.params.empty()) break;
        }
    schema_done:;
    }
    return model;
}

// --- search ------------------------------------------------------------------

namespace detail {

constexpr uint32_t kInfCost = std::numeric_limits<uint32_t>::max();

struct CompiledModel {
    // atom ids: original ground atoms plus complement atoms for negatively
    // used facts
    std::map<Atom, int> atom_id;
    std::vector<Atom> atoms;  // original atoms only (complements unnamed)
    int num_bits = 0;

    struct Action {
        std::vector<int> pre;  // positive bits (complements included)
        std::vector<int> add;
        std::vector<int> del;
        int ground_index;  // into GroundModel::actions
    };
    std::vector<Action> actions;
    std::vector<int> init_bits;
    std::vector<int> goal_bits;
    bool goal_impossible = false;  // a positive goal atom can never hold
};

using State = std::vector<uint64_t>;

inline bool test_bit(const State& s, int bit) {
    return (s[static_cast<size_t>(bit) >> 6] >> (bit & 63)) & 1;
}
inline void set_bit(State& s, int bit) { s[static_cast<size_t>(bit) >> 6] |= 1ull << (bit & 63); }
inline void clear_bit(State& s, int bit) {
    s[static_cast<size_t>(bit) >> 6] &= ~(1ull << (bit & 63));
}

struct StateHash {
    size_t operator()(const State& s) const {
        uint64_t h = 0xcbf29ce484222325ULL;
        for (uint64_t w : s) {
            h ^= w;
            h *= 0x100000001b3ULL;
        }
        return static_cast<size_t>(h);
    }
};

// Relaxed reachability over positive preconditions; returns the set of
// fireable action indices and prunes everything else.
inline std::vector<int> relaxed_reachable(const GroundModel& model,
                                          const std::map<Atom, int>& atom_id, int num_atoms) {
    std::vector<char> atom_reached(static_cast<size_t>(num_atoms), 0);
    for (const auto& a : model.init) atom_reached[static_cast<size_t>(atom_id.at(a))] = 1;
    std::vector<char> fired(model.actions.size(), 0);
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t i = 0; i < model.actions.size(); ++i) {
            if (fired[i]) continue;
            bool ok = true;
            for (const auto& a : model.actions[i].pre_pos)
                if (!atom_reached[static_cast<size_t>(atom_id.at(a))]) {
                    ok = false;
                    break;
                }
            if (!ok) continue;
            fired[i] = 1;
            changed = true;
            for (const auto& a : model.actions[i].add) {
                auto& bit = atom_reached[static_cast<size_t>(atom_id.at(a))];
                if (!bit) bit = 1;
            }
        }
    }
    std::vector<int> out;
    for (size_t i = 0; i < fired.size(); ++i)
        if (fired[i]) out.push_back(static_cast<int>(i));
    return out;
}

inline CompiledModel compile(const GroundModel& model) {
    CompiledModel cm;
    auto intern = [&](const Atom& a) {
        auto [it, fresh] = cm.atom_id.emplace(a, static_cast<int>(cm.atoms.size()));
        if (fresh) cm.atoms.push_back(a);
        return it->second;
    };
    for (const auto& a : model.init) intern(a);
    for (const auto& ga : model.actions) {
        for (const auto& a : ga.pre_pos) intern(a);
        for (const auto& a : ga.pre_neg) intern(a);
        for (const auto& a : ga.add) intern(a);
        for (const auto& a : ga.del) intern(a);
    }
    for (const auto& lit : model.goal) intern(lit.atom);
    int num_atoms = static_cast<int>(cm.atoms.size());

    std::vector<int> keep = relaxed_reachable(model, cm.atom_id, num_atoms);

    // complement bits for atoms used negatively in kept preconditions/goal
    std::map<int, int> complement;
    int next_bit = num_atoms;
    auto comp_of = [&](int id) {
        auto [it, fresh] = complement.emplace(id, next_bit);
        if (fresh) ++next_bit;
        return it->second;
    };
    for (int i : keep)
        for (const auto& a : model.actions[static_cast<size_t>(i)].pre_neg)
            comp_of(cm.atom_id.at(a));
    for (const auto& lit : model.goal)
        if (lit.negated) comp_of(cm.atom_id.at(lit.atom));

    for (int i : keep) {
        const GroundAction& ga = model.actions[static_cast<size_t>(i)];
        CompiledModel::Action ca;
        ca.ground_index = i;
        for (const auto& a : ga.pre_pos) ca.pre.push_back(cm.atom_id.at(a));
        for (const auto& a : ga.pre_neg) ca.pre.push_back(complement.at(cm.atom_id.at(a)));
        for (const auto& a : ga.add) {
            int id = cm.atom_id.at(a);
            ca.add.push_back(id);
            auto it = complement.find(id);
            if (it != complement.end()) ca.del.push_back(it->second);
        }
        for (const auto& a : ga.del) {
            int id = cm.atom_id.at(a);
            ca.del.push_back(id);
            auto it = complement.find(id);
            if (it != complement.end()) ca.add.push_back(it->second);
        }
        cm.actions.push_back(std::move(ca));
    }

    for (const auto& a : model.init) cm.init_bits.push_back(cm.atom_id.at(a));
    for (const auto& [id, comp] : complement)
        if (!model.init.count(cm.atoms[static_cast<size_t>(id)])) cm.init_bits.push_back(comp);

    for (const auto& lit : model.goal) {
        int id = cm.atom_id.at(lit.atom);
        cm.goal_bits.push_back(lit.negated ? complement.at(id) : id);
    }
    cm.num_bits = next_bit;
    return cm;
}

// Additive heuristic over the compiled (all-positive) model.
class AdditiveHeuristic {
public:
    explicit AdditiveHeuristic(const CompiledModel& cm) : cm_(cm) {
        achievers_.resize(static_cast<size_t>(cm.num_bits));
        for (size_t ai = 0; ai < cm.actions.size(); ++ai)
            for (int pre : cm.actions[ai].pre)
                achievers_[static_cast<size_t>(pre)].push_back(static_cast<int>(ai));
    }

    // Sum of per-goal-atom costs in the delete relaxation; kInfCost when the
    // relaxed problem is unsolvable from `s`.
    uint32_t evaluate(const State& s) const {
        std::vector<uint32_t> cost(static_cast<size_t>(cm_.num_bits), kInfCost);
        std::vector<uint32_t> remaining(cm_.actions.size());
        std::vector<uint64_t> acc(cm_.actions.size(), 0);
        using Entry = std::pair<uint32_t, int>;
        std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;

        for (int b = 0; b < cm_.num_bits; ++b)
            if (test_bit(s, b)) {
                cost[static_cast<size_t>(b)] = 0;
                pq.push({0, b});
            }
        for (size_t ai = 0; ai < cm_.actions.size(); ++ai) {
            remaining[ai] = static_cast<uint32_t>(cm_.actions[ai].pre.size());
            if (remaining[ai] == 0) relax_action(static_cast<int>(ai), cost, acc, pq);
        }
        while (!pq.empty()) {
            auto [c, bit] = pq.top();
            pq.pop();
            if (c > cost[static_cast<size_t>(bit)]) continue;
            for (int ai : achievers_[static_cast<size_t>(bit)]) {
                acc[static_cast<size_t>(ai)] += c;
                if (--remaining[static_cast<size_t>(ai)] == 0)
                    relax_action(ai, cost, acc, pq);
            }
        }
        uint64_t total = 0;
        for (int b : cm_.goal_bits) {
            uint32_t c = cost[static_cast<size_t>(b)];
            if (c == kInfCost) return kInfCost;
            total += c;
        }
        return total > kInfCost - 1 ? kInfCost - 1 : static_cast<uint32_t>(total);
    }

private:
    void relax_action(int ai, std::vector<uint32_t>& cost, std::vector<uint64_t>& acc,
                      std::priority_queue<std::pair<uint32_t, int>,
                                          std::vector<std::pair<uint32_t, int>>,
                                          std::greater<>>& pq) const {
        uint64_t action_cost = acc[static_cast<size_t>(ai)] + 1;
        uint32_t ac = action_cost > kInfCost - 1 ? kInfCost - 1
                                                 : static_cast<uint32_t>(action_cost);
        for (int b : cm_.actions[static_cast<size_t>(ai)].add) {
            if (ac < cost[static_cast<size_t>(b)]) {
                cost[static_cast<size_t>(b)] = ac;
                pq.push({ac, b});
            }
        }
    }

    const CompiledModel& cm_;
    std::vector<std::vector<int>> achievers_;
};

}  // namespace detail

// --- validation ----------------------------------------------------------------
//
// Stepwise simulation against the domain schemas; independent of the search
// machinery so it can double as the scoring oracle.

struct ValidationResult {
    bool valid = false;
    int failed_step = -1;  // 1-based; -1 when the failure is the final goal or none
    std::string reason;

    static ValidationResult ok() { return {true, -1, ""}; }
};

inline ValidationResult validate(const Domain& d, const Problem& p,
                                 const std::vector<PlanStep>& steps) {
    std::set<Atom> state = p.init;
    std::map<std::string, std::string> type_of;
    for (const auto& o : p.objects) type_of[o.name] = o.type;

    for (size_t i = 0; i < steps.size(); ++i) {
        const PlanStep& step = steps[i];
        const ActionSchema* schema = d.find_action(step.action);
        if (!schema)
            return {false, static_cast<int>(i + 1), "unknown action '" + step.action + "'"};
        if (schema->params.size() != step.args.size())
            return {false, static_cast<int>(i + 1),
                    "action '" + step.action + "' expects " +
                        std::to_string(schema->params.size()) + " argument(s)"};
        std::map<std::string, std::string> binding;
        for (size_t j = 0; j < step.args.size(); ++j) {
            auto it = type_of.find(step.args[j]);
            if (it == type_of.end())
                return {false, static_cast<int>(i + 1), "unknown object '" + step.args[j] + "'"};
            if (!d.is_subtype(it->second, schema->params[j].type))
                return {false, static_cast<int>(i + 1),
                        "argument " + std::to_string(j + 1) + " of " + step.str() +
                            " has type " + it->second + ", expected " + schema->params[j].type};
            binding[schema->params[j].name] = step.args[j];
        }
        for (const auto& lit : schema->precondition) {
            Atom a = detail::bind_atom(lit.atom, binding);
            bool holds = state.count(a) > 0;
            if (holds == lit.negated)
                return {false, static_cast<int>(i + 1),
                        "precondition " + lit.str() + " fails at " + step.str() + " (" + a.str() +
                            (lit.negated ? " holds)" : " does not hold)")};
        }
        for (const auto& lit : schema->effects)
            if (lit.negated) state.erase(detail::bind_atom(lit.atom, binding));
        for (const auto& lit : schema->effects)
            if (!lit.negated) state.insert(detail::bind_atom(lit.atom, binding));
    }

    auto goal = ground_goal(p.goal, d, p.objects);
    for (const auto& lit : goal) {
        bool holds = state.count(lit.atom) > 0;
        if (holds == lit.negated)
            return {false, -1, "goal literal " + lit.str() + " unsatisfied in the final state"};
    }
    return ValidationResult::ok();
}

inline ValidationResult validate(const Domain& d, const Problem& p, const Plan& plan) {
    return validate(d, p, plan.steps);
}

// Greedily removes steps whose absence keeps the plan valid. Quadratic in
// plan length, negligible at this scale.
inline Plan minimize_plan(const Domain& d, const Problem& p, Plan plan) {
    for (size_t i = plan.steps.size(); i > 0; --i) {
        std::vector<PlanStep> candidate = plan.steps;
        candidate.erase(candidate.begin() + static_cast<long>(i - 1));
        if (validate(d, p, candidate).valid) plan.steps = std::move(candidate);
    }
    return plan;
}

// --- solve -----------------------------------------------------------------------

namespace detail {

struct SearchNode {
    State state;
    int parent = -1;
    int action = -1;  // compiled action index applied to reach this node
};

enum class QueueOrder { Heuristic, UniformCost };

struct OpenEntry {
    uint32_t key;      // h or g
    long tiebreak;     // FIFO among equal keys
    int node;
    bool operator>(const OpenEntry& o) const {
        return key != o.key ? key > o.key : tiebreak > o.tiebreak;
    }
};

}  // namespace detail

inline SolveResult solve(const Domain& d, const Problem& p, const PlannerConfig& cfg = {}) {
    Stopwatch total;
    GroundModel model = ground(d, p, cfg);
    detail::CompiledModel cm = detail::compile(model);

    SolveResult result;
    result.plan.stats.ground_actions = static_cast<long>(model.actions.size());
    result.plan.stats.reachable_actions = static_cast<long>(cm.actions.size());
    result.plan.stats.ground_ms = total.elapsed_ms();

    Stopwatch search_clock;
    auto finish = [&](SolveStatus status) {
        result.status = status;
        result.plan.stats.search_ms = search_clock.elapsed_ms();
        return result;
    };

    detail::State init(static_cast<size_t>((cm.num_bits + 63) / 64), 0);
    for (int b : cm.init_bits) detail::set_bit(init, b);
    auto is_goal = [&](const detail::State& s) {
        for (int b : cm.goal_bits)
            if (!detail::test_bit(s, b)) return false;
        return true;
    };

    detail::AdditiveHeuristic h(cm);
    if (h.evaluate(init) == detail::kInfCost) return finish(SolveStatus::Unsolvable);

    auto extract = [&](const std::vector<detail::SearchNode>& nodes, int node_id) {
        std::vector<int> actions;
        for (int id = node_id; nodes[static_cast<size_t>(id)].parent >= 0;
             id = nodes[static_cast<size_t>(id)].parent)
            actions.push_back(nodes[static_cast<size_t>(id)].action);
        std::reverse(actions.begin(), actions.end());
        result.plan.steps.clear();
        for (int a : actions)
            result.plan.steps.push_back(
                model.actions[static_cast<size_t>(cm.actions[static_cast<size_t>(a)].ground_index)]
                    .step());
        if (cfg.minimize) result.plan = minimize_plan(d, p, std::move(result.plan));
    };

    // One search pass; returns Solved/Unsolvable/Timeout, or nullopt when the
    // heuristic plateaued and the caller should fall back to uniform cost.
    auto run = [&](detail::QueueOrder order) -> std::optional<SolveStatus> {
        std::vector<detail::SearchNode> nodes;
        std::unordered_map<detail::State, int, detail::StateHash> seen;
        std::priority_queue<detail::OpenEntry, std::vector<detail::OpenEntry>, std::greater<>>
            open;
        std::vector<uint32_t> gval;

        nodes.push_back({init, -1, -1});
        seen.emplace(init, 0);
        gval.push_back(0);
        if (is_goal(init)) {
            extract(nodes, 0);
            return SolveStatus::Solved;
        }
        open.push({order == detail::QueueOrder::Heuristic ? h.evaluate(init) : 0, 0, 0});

        long tiebreak = 1;
        uint32_t best_h = detail::kInfCost;
        long since_improvement = 0;

        while (!open.empty()) {
            if (result.plan.stats.expansions >= cfg.expansion_cap ||
                total.elapsed_ms() > cfg.timeout_ms)
                return SolveStatus::Timeout;
            auto top = open.top();
            open.pop();
            const detail::State current = nodes[static_cast<size_t>(top.node)].state;
            ++result.plan.stats.expansions;

            if (order == detail::QueueOrder::Heuristic) {
                if (top.key < best_h) {
                    best_h = top.key;
                    since_improvement = 0;
                } else if (++since_improvement > cfg.plateau_expansions) {
                    return std::nullopt;  // plateau; switch strategies
                }
            }

            for (size_t ai = 0; ai < cm.actions.size(); ++ai) {
                const auto& action = cm.actions[ai];
                bool applicable = true;
                for (int b : action.pre)
                    if (!detail::test_bit(current, b)) {
                        applicable = false;
                        break;
                    }
                if (!applicable) continue;
                detail::State next = current;
                for (int b : action.del) detail::clear_bit(next, b);
                for (int b : action.add) detail::set_bit(next, b);

                uint32_t g = gval[static_cast<size_t>(top.node)] + 1;
                auto it = seen.find(next);
                if (it != seen.end()) {
                    if (order != detail::QueueOrder::UniformCost ||
                        g >= gval[static_cast<size_t>(it->second)])
                        continue;
                    // uniform cost may re-open with a shorter path
                    gval[static_cast<size_t>(it->second)] = g;
                    nodes[static_cast<size_t>(it->second)].parent = top.node;
                    nodes[static_cast<size_t>(it->second)].action = static_cast<int>(ai);
                    open.push({g, tiebreak++, it->second});
                    continue;
                }

                int node_id = static_cast<int>(nodes.size());
                nodes.push_back({next, top.node, static_cast<int>(ai)});
                seen.emplace(std::move(next), node_id);
                gval.push_back(g);
                ++result.plan.stats.generated;

                const detail::State& stored = nodes[static_cast<size_t>(node_id)].state;
                if (is_goal(stored)) {
                    extract(nodes, node_id);
                    return SolveStatus::Solved;
                }
                uint32_t key;
                if (order == detail::QueueOrder::Heuristic) {
                    key = h.evaluate(stored);
                    if (key == detail::kInfCost) continue;  // relaxed-unsolvable, prune
                } else {
                    key = g;
                }
                open.push({key, tiebreak++, node_id});
            }
        }
        return SolveStatus::Unsolvable;
    };

    auto status = run(detail::QueueOrder::Heuristic);
    if (!status) {
        result.plan.stats.used_fallback = true;
        status = run(detail::QueueOrder::UniformCost);
    }
    return finish(*status);
}

// --- external planner hook ---------------------------------------------------
//
// Spawns `command <domain-file> <problem-file>` and parses numbered plan
// steps from its stdout. Lets parity experiments swap in another planner
// without linking it.

inline SolveResult solve_with_external(const std::string& command, const Domain& d,
                                       const Problem& p,
                                       const std::filesystem::path& workdir) {
    std::filesystem::create_directories(workdir);
    auto domain_path = workdir / "domain.pddl";
    auto problem_path = workdir / "problem.pddl";
    {
        std::ofstream(domain_path) << print_domain(d);
        std::ofstream(problem_path) << print_problem(p);
    }
    std::string cmd = command + " " + domain_path.string() + " " + problem_path.string();
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) throw PlannerError("failed to spawn external planner: " + command);
    std::string output;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) output.append(buf, n);
    int rc = ::pclose(pipe);
    if (rc != 0)
        throw PlannerError("external planner exited with status " + std::to_string(rc));

    SolveResult r;
    std::string low = lower(output);
    if (low.find("unsolvable") != std::string::npos) {
        r.status = SolveStatus::Unsolvable;
        return r;
    }
    r.status = SolveStatus::Solved;
    r.plan.steps = parse_plan_text(output);
    return r;
}

}  // namespace kgplan
