#pragma once
// Random model generators for property tests. Kept independent of the
// parsing/printing code under test: structures are built directly.

#include <functional>
#include <string>
#include <vector>

#include "kgplan/pddl.hpp"
#include "kgplan/util.hpp"

namespace testgen {

using namespace kgplan;

inline std::string gen_name(Rng& rng, const std::string& prefix) {
    static const std::vector<std::string> syllables = {"ka", "ro", "mi", "ta", "zu",
                                                       "lo", "pe", "na", "vi", "su"};
    std::string s = prefix + "_";
    int n = rng.range(1, 3);
    for (int i = 0; i < n; ++i) s += rng.pick(syllables);
    return s;
}

struct GeneratedModel {
    Domain domain;
    Problem problem;
};

inline Domain gen_domain(Rng& rng) {
    Domain d;
    d.name = gen_name(rng, "dom");

    int num_types = rng.range(1, 5);
    std::vector<std::string> types = {kRootType};
    for (int i = 0; i < num_types; ++i) {
        std::string t = gen_name(rng, "t" + std::to_string(i));
        d.add_type(t, rng.pick(types));
        types.push_back(t);
    }

    int num_preds = rng.range(1, 6);
    for (int i = 0; i < num_preds; ++i) {
        Predicate p;
        p.name = gen_name(rng, "p" + std::to_string(i));
        int arity = rng.range(0, 2);
        for (int j = 0; j < arity; ++j)
            p.params.push_back({"?x" + std::to_string(j), rng.pick(types)});
        d.add_predicate(p);
    }

    std::vector<std::string> pred_names;
    for (const auto& [name, p] : d.predicates()) pred_names.push_back(name);

    int num_actions = rng.range(0, 4);
    for (int i = 0; i < num_actions; ++i) {
        ActionSchema a;
        a.name = gen_name(rng, "act" + std::to_string(i));
        int num_params = rng.range(1, 3);
        for (int j = 0; j < num_params; ++j)
            a.params.push_back({"?v" + std::to_string(j), rng.pick(types)});
        auto gen_literal = [&](bool allow_neg) {
            const Predicate& p = *d.find_predicate(rng.pick(pred_names));
            Atom atom;
            atom.pred = p.name;
            for (size_t j = 0; j < p.arity(); ++j) atom.args.push_back(rng.pick(a.params).name);
            return Literal{atom, allow_neg && rng.chance(0.3)};
        };
        int pre = rng.range(1, 3);
        for (int j = 0; j < pre; ++j) a.precondition.push_back(gen_literal(true));
        int eff = rng.range(1, 3);
        for (int j = 0; j < eff; ++j) a.effects.push_back(gen_literal(true));
        try {
            d.add_action(a);
        } catch (const std::invalid_argument&) {
            // duplicate generated name; rare, skip
        }
    }
    return d;
}

inline Problem gen_problem(Rng& rng, const Domain& d, int num_objects = -1, int num_init = -1) {
    Problem p;
    p.name = gen_name(rng, "prob");
    p.domain_name = d.name;

    std::vector<std::string> types = {kRootType};
    for (const auto& [child, parent] : d.types()) types.push_back(child);

    if (num_objects < 0) num_objects = rng.range(2, 8);
    for (int i = 0; i < num_objects; ++i)
        p.objects.push_back({gen_name(rng, "o" + std::to_string(i)), rng.pick(types)});
    std::sort(p.objects.begin(), p.objects.end());
    p.objects.erase(std::unique(p.objects.begin(), p.objects.end(),
                                [](const TypedObject& a, const TypedObject& b) {
                                    return a.name == b.name;
                                }),
                    p.objects.end());

    auto objects_of = [&](const std::string& type) {
        std::vector<std::string> out;
        for (const auto& o : p.objects)
            if (d.is_subtype(o.type, type)) out.push_back(o.name);
        return out;
    };

    std::vector<std::string> pred_names;
    for (const auto& [name, pred] : d.predicates()) pred_names.push_back(name);

    if (num_init < 0) num_init = rng.range(0, 12);
    for (int i = 0; i < num_init && !pred_names.empty(); ++i) {
        const Predicate& pred = *d.find_predicate(rng.pick(pred_names));
        Atom a;
        a.pred = pred.name;
        bool ok = true;
        for (const auto& param : pred.params) {
            auto candidates = objects_of(param.type);
            if (candidates.empty()) {
                ok = false;
                break;
            }
            a.args.push_back(rng.pick(candidates));
        }
        if (ok) p.init.insert(a);
    }

    // Goal: a conjunction of random literals over init (positive) plus an
    // occasional forall over a type.
    std::vector<GoalFormula> parts;
    if (!p.init.empty() && rng.chance(0.8)) {
        auto it = p.init.begin();
        std::advance(it, static_cast<long>(rng.below(p.init.size())));
        parts.push_back(GoalFormula::make_atom(*it));
    }
    for (const auto& [name, pred] : d.predicates()) {
        if (pred.arity() == 1 && rng.chance(0.25)) {
            Atom a;
            a.pred = name;
            a.args = {"?q"};
            parts.push_back(GoalFormula::make_forall({"?q", pred.params[0].type},
                                                     rng.chance(0.5)
                                                         ? GoalFormula::make_not(a)
                                                         : GoalFormula::make_atom(a)));
            break;
        }
    }
    p.goal = GoalFormula::make_and(std::move(parts));
    return p;
}

inline GeneratedModel gen_model(Rng& rng) {
    GeneratedModel m;
    m.domain = gen_domain(rng);
    m.problem = gen_problem(rng, m.domain);
    return m;
}

// --- planning instances -------------------------------------------------
//
// Small random STRIPS tasks. Solvable ones derive their goal from a random
// walk, so reachability is guaranteed by construction; `unsolvable = true`
// swaps in a goal atom over a predicate nothing ever adds.

struct PlanningInstance {
    Domain domain;
    Problem problem;
};

inline Domain gen_plan_domain(Rng& rng) {
    Domain d;
    d.name = gen_name(rng, "pd");
    int num_types = rng.range(1, 2);
    std::vector<std::string> types;
    for (int i = 0; i < num_types; ++i) {
        std::string t = "ty" + std::to_string(i);
        d.add_type(t, kRootType);
        types.push_back(t);
    }
    int num_preds = rng.range(3, 5);
    for (int i = 0; i < num_preds; ++i) {
        Predicate p;
        p.name = "pp" + std::to_string(i);
        int arity = rng.range(0, 2);
        for (int j = 0; j < arity; ++j)
            p.params.push_back({"?x" + std::to_string(j), rng.pick(types)});
        d.add_predicate(p);
    }
    // one predicate no action ever adds, for provably unsolvable goals
    d.add_predicate({"unreachable_marker", {}});

    std::vector<std::string> pred_names;
    for (const auto& [name, p] : d.predicates())
        if (name != "unreachable_marker") pred_names.push_back(name);

    int num_actions = rng.range(2, 4);
    for (int i = 0; i < num_actions; ++i) {
        ActionSchema a;
        a.name = "go" + std::to_string(i);
        int num_params = rng.range(1, 3);
        for (int j = 0; j < num_params; ++j)
            a.params.push_back({"?v" + std::to_string(j), rng.pick(types)});
        auto gen_atom = [&] {
            const Predicate& p = *d.find_predicate(rng.pick(pred_names));
            Atom atom;
            atom.pred = p.name;
            for (size_t j = 0; j < p.arity(); ++j) atom.args.push_back(rng.pick(a.params).name);
            return atom;
        };
        int pre = rng.range(1, 2);
        for (int j = 0; j < pre; ++j) a.precondition.push_back({gen_atom(), rng.chance(0.25)});
        std::set<Atom> adds;
        int num_adds = rng.range(1, 2);
        for (int j = 0; j < num_adds; ++j) {
            Atom atom = gen_atom();
            adds.insert(atom);
            a.effects.push_back({atom, false});
        }
        int num_dels = rng.range(0, 2);
        for (int j = 0; j < num_dels; ++j) {
            Atom atom = gen_atom();
            if (!adds.count(atom)) a.effects.push_back({atom, true});
        }
        d.add_action(a);
    }
    return d;
}

// Enumerates all ground atoms of the domain's predicates over the objects.
inline std::vector<Atom> all_ground_atoms(const Domain& d, const std::vector<TypedObject>& objs) {
    std::vector<Atom> out;
    for (const auto& [name, pred] : d.predicates()) {
        std::vector<Atom> partial = {Atom{name, {}}};
        for (const auto& param : pred.params) {
            std::vector<Atom> next;
            for (const auto& a : partial)
                for (const auto& o : objs)
                    if (d.is_subtype(o.type, param.type)) {
                        Atom extended = a;
                        extended.args.push_back(o.name);
                        next.push_back(std::move(extended));
                    }
            partial = std::move(next);
        }
        for (auto& a : partial) out.push_back(std::move(a));
    }
    return out;
}

inline PlanningInstance gen_planning_instance(
    Rng& rng, bool unsolvable,
    const std::function<std::vector<std::set<Atom>>(const Domain&, const Problem&,
                                                    const std::set<Atom>&)>& successors) {
    PlanningInstance inst;
    inst.domain = gen_plan_domain(rng);

    std::vector<std::string> types;
    for (const auto& [t, parent] : inst.domain.types()) types.push_back(t);
    inst.problem.name = gen_name(rng, "pi");
    inst.problem.domain_name = inst.domain.name;
    int num_objects = rng.range(2, 4);
    for (int i = 0; i < num_objects; ++i)
        inst.problem.objects.push_back({"ob" + std::to_string(i), rng.pick(types)});
    std::sort(inst.problem.objects.begin(), inst.problem.objects.end());

    auto atoms = all_ground_atoms(inst.domain, inst.problem.objects);
    for (const auto& a : atoms)
        if (a.pred != "unreachable_marker" && rng.chance(0.25)) inst.problem.init.insert(a);

    if (unsolvable) {
        inst.problem.goal = GoalFormula::make_and(
            {GoalFormula::make_atom(Atom{"unreachable_marker", {}})});
        return inst;
    }

    // random walk to a guaranteed-reachable goal
    std::set<Atom> state = inst.problem.init;
    int walk = rng.range(1, 8);
    for (int i = 0; i < walk; ++i) {
        auto succs = successors(inst.domain, inst.problem, state);
        if (succs.empty()) break;
        state = succs[rng.below(succs.size())];
    }
    std::vector<GoalFormula> parts;
    std::vector<Atom> pool(state.begin(), state.end());
    int goal_atoms = std::min<int>(rng.range(1, 3), static_cast<int>(pool.size()));
    for (int i = 0; i < goal_atoms; ++i)
        parts.push_back(GoalFormula::make_atom(rng.pick(pool)));
    // occasionally a negative literal that already fails in `state`'s complement
    if (rng.chance(0.4)) {
        for (const auto& a : atoms) {
            if (a.pred != "unreachable_marker" && !state.count(a)) {
                parts.push_back(GoalFormula::make_not(a));
                break;
            }
        }
    }
    if (parts.empty()) parts.push_back(GoalFormula::make_and({}));
    inst.problem.goal = GoalFormula::make_and(std::move(parts));
    return inst;
}

}  // namespace testgen
