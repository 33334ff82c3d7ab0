#pragma once
// Breadth-first reference planner. Interprets action schemas directly over
// std::set<Atom> states — no grounding tables, no heuristics — so it shares
// nothing with the search implementation under test.

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kgplan/pddl.hpp"

namespace testoracle {

using namespace kgplan;

struct BfsOutcome {
    enum class Kind { Solved, Unsolvable, CapExceeded };
    Kind kind = Kind::CapExceeded;
    int optimal_length = -1;
    long states_seen = 0;
};

namespace detail {

inline std::string state_key(const std::set<Atom>& state) {
    std::string key;
    for (const auto& a : state) key += a.str();
    return key;
}

inline void bindings_rec(const ActionSchema& schema, const Domain& d,
                         const std::vector<TypedObject>& objects, size_t param,
                         std::map<std::string, std::string>& binding,
                         const std::function<void(const std::map<std::string, std::string>&)>& f) {
    if (param == schema.params.size()) {
        f(binding);
        return;
    }
    for (const auto& o : objects) {
        if (!d.is_subtype(o.type, schema.params[param].type)) continue;
        binding[schema.params[param].name] = o.name;
        bindings_rec(schema, d, objects, param + 1, binding, f);
    }
    binding.erase(schema.params[param].name);
}

inline Atom subst(const Atom& a, const std::map<std::string, std::string>& binding) {
    Atom out = a;
    for (auto& arg : out.args) {
        auto it = binding.find(arg);
        if (it != binding.end()) arg = it->second;
    }
    return out;
}

}  // namespace detail

inline std::vector<std::set<Atom>> successor_states(const Domain& d, const Problem& p,
                                                    const std::set<Atom>& state) {
    std::vector<std::set<Atom>> out;
    for (const auto& schema : d.actions()) {
        std::map<std::string, std::string> binding;
        detail::bindings_rec(schema, d, p.objects, 0, binding,
                             [&](const std::map<std::string, std::string>& b) {
                                 for (const auto& lit : schema.precondition) {
                                     bool holds = state.count(detail::subst(lit.atom, b)) > 0;
                                     if (holds == lit.negated) return;
                                 }
                                 std::set<Atom> next = state;
                                 for (const auto& lit : schema.effects)
                                     if (lit.negated) next.erase(detail::subst(lit.atom, b));
                                 for (const auto& lit : schema.effects)
                                     if (!lit.negated) next.insert(detail::subst(lit.atom, b));
                                 out.push_back(std::move(next));
                             });
    }
    return out;
}

inline BfsOutcome bfs_plan(const Domain& d, const Problem& p, long state_cap = 100000) {
    BfsOutcome outcome;
    auto goal = ground_goal(p.goal, d, p.objects);

    std::deque<std::pair<std::set<Atom>, int>> frontier;
    std::set<std::string> visited;
    frontier.push_back({p.init, 0});
    visited.insert(detail::state_key(p.init));

    while (!frontier.empty()) {
        auto [state, depth] = frontier.front();
        frontier.pop_front();
        ++outcome.states_seen;
        if (goal_satisfied(goal, state)) {
            outcome.kind = BfsOutcome::Kind::Solved;
            outcome.optimal_length = depth;
            return outcome;
        }
        if (outcome.states_seen + static_cast<long>(frontier.size()) > state_cap) {
            outcome.kind = BfsOutcome::Kind::CapExceeded;
            return outcome;
        }
        for (auto& next : successor_states(d, p, state)) {
            std::string key = detail::state_key(next);
            if (visited.insert(std::move(key)).second)
                frontier.push_back({std::move(next), depth + 1});
        }
    }
    outcome.kind = BfsOutcome::Kind::Unsolvable;
    return outcome;
}

}  // namespace testoracle
