#pragma once
// PDDL model for the subset the engine plans over:
// STRIPS + :typing + negative preconditions, with `forall`/`not` allowed in
// goals. Types form a single-inheritance tree rooted at `object`.
//
// Identifiers are normalized on construction (case-folded, `-` -> `_`) so
// graph entity names and PDDL names stay joinable.

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgplan/util.hpp"

namespace kgplan {

inline std::string normalize_name(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        if (c == '-') c = '_';
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

// `[a-z_?][a-z0-9_]*`; leading '?' marks a variable.
inline bool is_valid_name(std::string_view s) {
    if (s.empty()) return false;
    size_t i = 0;
    if (s[0] == '?') {
        if (s.size() == 1) return false;
        i = 1;
    }
    if (!(std::islower(static_cast<unsigned char>(s[i])) || s[i] == '_')) return false;
    for (; i < s.size(); ++i) {
        char c = s[i];
        if (!(std::islower(static_cast<unsigned char>(c)) ||
              std::isdigit(static_cast<unsigned char>(c)) || c == '_'))
            return false;
    }
    return true;
}

inline bool is_variable(std::string_view s) { return !s.empty() && s[0] == '?'; }

// Thrown for lexical, syntactic, semantic and unsupported-feature errors.
// what() is formatted `file:line:col: message`.
class ParseError : public std::runtime_error {
public:
    enum class Kind { Lex, Syntax, Unsupported, Semantic, TypeMismatch };

    ParseError(Kind kind, std::string file, int line, int col, const std::string& message)
        : std::runtime_error(file + ":" + std::to_string(line) + ":" + std::to_string(col) +
                             ": " + message),
          kind_(kind),
          file_(std::move(file)),
          line_(line),
          col_(col),
          message_(message) {}

    Kind kind() const { return kind_; }
    const std::string& file() const { return file_; }
    int line() const { return line_; }
    int col() const { return col_; }
    const std::string& message() const { return message_; }

private:
    Kind kind_;
    std::string file_;
    int line_;
    int col_;
    std::string message_;
};

struct Parameter {
    std::string name;  // includes the leading '?'
    std::string type;

    auto operator<=>(const Parameter&) const = default;
};

struct Predicate {
    std::string name;
    std::vector<Parameter> params;

    size_t arity() const { return params.size(); }
    auto operator<=>(const Predicate&) const = default;
};

struct Atom {
    std::string pred;
    std::vector<std::string> args;  // object names or ?variables

    bool ground() const {
        for (const auto& a : args)
            if (is_variable(a)) return false;
        return true;
    }

    std::string str() const {
        std::string s = "(" + pred;
        for (const auto& a : args) s += " " + a;
        s += ")";
        return s;
    }

    auto operator<=>(const Atom&) const = default;
};

struct Literal {
    Atom atom;
    bool negated = false;

    std::string str() const { return negated ? "(not " + atom.str() + ")" : atom.str(); }
    auto operator<=>(const Literal&) const = default;
};

struct ActionSchema {
    std::string name;
    std::vector<Parameter> params;
    std::vector<Literal> precondition;  // conjunction
    std::vector<Literal> effects;       // negated -> delete list

    std::vector<Atom> add_list() const {
        std::vector<Atom> out;
        for (const auto& e : effects)
            if (!e.negated) out.push_back(e.atom);
        return out;
    }
    std::vector<Atom> delete_list() const {
        std::vector<Atom> out;
        for (const auto& e : effects)
            if (e.negated) out.push_back(e.atom);
        return out;
    }

    auto operator<=>(const ActionSchema&) const = default;
};

// Goal grammar: atom | (not atom) | (and g*) | (forall (?v - type) g).
struct GoalFormula {
    enum class Kind { Atom, Not, And, Forall };

    Kind kind = Kind::And;
    Atom atom;                         // Kind::Atom / Kind::Not
    std::vector<GoalFormula> children;  // Kind::And / Kind::Forall (single child)
    Parameter quantified;              // Kind::Forall

    static GoalFormula make_atom(Atom a) {
        GoalFormula g;
        g.kind = Kind::Atom;
        g.atom = std::move(a);
        return g;
    }
    static GoalFormula make_not(Atom a) {
        GoalFormula g;
        g.kind = Kind::Not;
        g.atom = std::move(a);
        return g;
    }
    static GoalFormula make_and(std::vector<GoalFormula> gs) {
        GoalFormula g;
        g.kind = Kind::And;
        g.children = std::move(gs);
        return g;
    }
    static GoalFormula make_forall(Parameter var, GoalFormula body) {
        GoalFormula g;
        g.kind = Kind::Forall;
        g.quantified = std::move(var);
        g.children.push_back(std::move(body));
        return g;
    }

    bool operator==(const GoalFormula& o) const {
        if (kind != o.kind) return false;
        switch (kind) {
            case Kind::Atom:
            case Kind::Not:
                return atom == o.atom;
            case Kind::Forall:
                if (quantified != o.quantified) return false;
                [[fallthrough]];
            case Kind::And:
                return children == o.children;
        }
        return false;
    }
};

struct TypedObject {
    std::string name;
    std::string type;

    auto operator<=>(const TypedObject&) const = default;
};

constexpr const char* kRootType = "object";

class Domain {
public:
    std::string name;

    const std::map<std::string, std::string>& types() const { return parent_of_; }
    const std::map<std::string, Predicate>& predicates() const { return predicates_; }
    const std::vector<ActionSchema>& actions() const { return actions_; }

    bool has_type(const std::string& t) const {
        return t == kRootType || parent_of_.count(t) > 0;
    }

    // Registers `child - parent`; parents are implicitly declared.
    void add_type(const std::string& child, const std::string& parent) {
        if (child == kRootType) return;
        auto it = parent_of_.find(child);
        if (it != parent_of_.end() && it->second != parent) {
            throw std::invalid_argument("type '" + child + "' declared twice with parents '" +
                                        it->second + "' and '" + parent + "'");
        }
        parent_of_[child] = parent;
        if (parent != kRootType && parent_of_.find(parent) == parent_of_.end())
            parent_of_[parent] = kRootType;
    }

    // True if `t` equals `ancestor` or sits below it in the tree.
    bool is_subtype(const std::string& t, const std::string& ancestor) const {
        if (ancestor == kRootType) return has_type(t);
        std::string cur = t;
        while (true) {
            if (cur == ancestor) return true;
            if (cur == kRootType) return false;
            auto it = parent_of_.find(cur);
            if (it == parent_of_.end()) return false;
            cur = it->second;
        }
    }

    void add_predicate(Predicate p) {
        if (!predicates_.emplace(p.name, p).second)
            throw std::invalid_argument("predicate '" + p.name + "' declared twice");
    }

    const Predicate* find_predicate(const std::string& name) const {
        auto it = predicates_.find(name);
        return it == predicates_.end() ? nullptr : &it->second;
    }

    void add_action(ActionSchema a) {
        for (const auto& existing : actions_)
            if (existing.name == a.name)
                throw std::invalid_argument("action '" + a.name + "' declared twice");
        actions_.push_back(std::move(a));
    }

    const ActionSchema* find_action(const std::string& name) const {
        for (const auto& a : actions_)
            if (a.name == name) return &a;
        return nullptr;
    }

    bool operator==(const Domain& o) const {
        return name == o.name && parent_of_ == o.parent_of_ && predicates_ == o.predicates_ &&
               actions_ == o.actions_;
    }

private:
    std::map<std::string, std::string> parent_of_;  // child -> parent; root not stored
    std::map<std::string, Predicate> predicates_;
    std::vector<ActionSchema> actions_;
};

struct Problem {
    std::string name;
    std::string domain_name;
    std::vector<TypedObject> objects;  // kept sorted by name
    std::set<Atom> init;
    GoalFormula goal;

    std::optional<std::string> type_of(const std::string& obj) const {
        for (const auto& o : objects)
            if (o.name == obj) return o.type;
        return std::nullopt;
    }

    bool operator==(const Problem& o) const {
        return name == o.name && domain_name == o.domain_name && objects == o.objects &&
               init == o.init && goal == o.goal;
    }
};

// --- type checking ------------------------------------------------------

// Checks a ground atom against the domain signature; returns an error
// message naming the atom and argument position, or nullopt when fine.
inline std::optional<std::string> check_ground_atom(const Atom& atom, const Domain& d,
                                                    const std::vector<TypedObject>& objects) {
    const Predicate* p = d.find_predicate(atom.pred);
    if (!p) return "unknown predicate '" + atom.pred + "' in " + atom.str();
    if (p->arity() != atom.args.size())
        return "predicate '" + atom.pred + "' expects " + std::to_string(p->arity()) +
               " argument(s), got " + std::to_string(atom.args.size()) + " in " + atom.str();
    for (size_t i = 0; i < atom.args.size(); ++i) {
        const std::string& arg = atom.args[i];
        std::string type;
        bool found = false;
        for (const auto& o : objects)
            if (o.name == arg) {
                type = o.type;
                found = true;
                break;
            }
        if (!found) return "unknown object '" + arg + "' in " + atom.str();
        if (!d.is_subtype(type, p->params[i].type))
            return "type mismatch in " + atom.str() + ": argument " + std::to_string(i + 1) +
                   " ('" + arg + "' of type " + type + ") is not a " + p->params[i].type;
    }
    return std::nullopt;
}

// --- goal grounding -----------------------------------------------------

namespace detail {

inline void ground_goal_rec(const GoalFormula& g, const Domain& d,
                            const std::vector<TypedObject>& objects,
                            std::map<std::string, std::string>& binding,
                            std::set<Literal>& out) {
    auto substitute = [&](const Atom& a) {
        Atom ground = a;
        for (auto& arg : ground.args) {
            auto it = binding.find(arg);
            if (it != binding.end()) arg = it->second;
        }
        return ground;
    };
    switch (g.kind) {
        case GoalFormula::Kind::Atom:
            out.insert({substitute(g.atom), false});
            break;
        case GoalFormula::Kind::Not:
            out.insert({substitute(g.atom), true});
            break;
        case GoalFormula::Kind::And:
            for (const auto& c : g.children) ground_goal_rec(c, d, objects, binding, out);
            break;
        case GoalFormula::Kind::Forall: {
            if (!d.has_type(g.quantified.type))
                throw std::invalid_argument("unknown type '" + g.quantified.type +
                                            "' in forall quantifier");
            for (const auto& o : objects) {
                if (!d.is_subtype(o.type, g.quantified.type)) continue;
                binding[g.quantified.name] = o.name;
                ground_goal_rec(g.children.front(), d, objects, binding, out);
            }
            binding.erase(g.quantified.name);
            break;
        }
    }
}

}  // namespace detail

// Expands quantifiers over the object list; the result is the literal
// conjunction equivalent to the formula. A forall over an empty type
// contributes nothing (vacuously true).
inline std::set<Literal> ground_goal(const GoalFormula& g, const Domain& d,
                                     const std::vector<TypedObject>& objects) {
    std::set<Literal> out;
    std::map<std::string, std::string> binding;
    detail::ground_goal_rec(g, d, objects, binding, out);
    return out;
}

inline bool goal_satisfied(const std::set<Literal>& goal, const std::set<Atom>& state) {
    for (const auto& lit : goal) {
        bool holds = state.count(lit.atom) > 0;
        if (holds == lit.negated) return false;
    }
    return true;
}

// --- printing -----------------------------------------------------------

namespace detail {

inline void print_typed_list(std::ostringstream& os, const std::vector<Parameter>& params) {
    for (size_t i = 0; i < params.size(); ++i) {
        if (i) os << " ";
        os << params[i].name << " - " << params[i].type;
    }
}

inline void print_goal(std::ostringstream& os, const GoalFormula& g, int indent) {
    std::string pad(static_cast<size_t>(indent), ' ');
    switch (g.kind) {
        case GoalFormula::Kind::Atom:
            os << g.atom.str();
            break;
        case GoalFormula::Kind::Not:
            os << "(not " << g.atom.str() << ")";
            break;
        case GoalFormula::Kind::And:
            os << "(and";
            for (const auto& c : g.children) {
                os << " ";
                print_goal(os, c, indent);
            }
            os << ")";
            break;
        case GoalFormula::Kind::Forall:
            os << "(forall (" << g.quantified.name << " - " << g.quantified.type << ") ";
            print_goal(os, g.children.front(), indent);
            os << ")";
            break;
    }
}

}  // namespace detail

// Canonical rendering: types/predicates/actions sorted by name, init and
// objects sorted, goal structure preserved. print -> parse -> print is a
// fixed point.
inline std::string print_domain(const Domain& d) {
    std::ostringstream os;
    os << "(define (domain " << d.name << ")\n";
    os << "  (:requirements :strips :typing :negative-preconditions)\n";
    if (!d.types().empty()) {
        os << "  (:types";
        for (const auto& [child, parent] : d.types()) os << "\n    " << child << " - " << parent;
        os << ")\n";
    }
    os << "  (:predicates";
    for (const auto& [name, p] : d.predicates()) {
        os << "\n    (" << name;
        for (const auto& param : p.params) os << " " << param.name << " - " << param.type;
        os << ")";
    }
    os << ")\n";
    std::vector<const ActionSchema*> actions;
    for (const auto& a : d.actions()) actions.push_back(&a);
    std::sort(actions.begin(), actions.end(),
              [](const ActionSchema* a, const ActionSchema* b) { return a->name < b->name; });
    for (const ActionSchema* a : actions) {
        os << "  (:action " << a->name << "\n    :parameters (";
        detail::print_typed_list(os, a->params);
        os << ")\n    :precondition (and";
        for (const auto& lit : a->precondition) os << " " << lit.str();
        os << ")\n    :effect (and";
        for (const auto& lit : a->effects) os << " " << lit.str();
        os << "))\n";
    }
    os << ")\n";
    return os.str();
}

inline std::string print_problem(const Problem& p) {
    std::ostringstream os;
    os << "(define (problem " << p.name << ")\n";
    os << "  (:domain " << p.domain_name << ")\n";
    os << "  (:objects";
    for (const auto& o : p.objects) os << "\n    " << o.name << " - " << o.type;
    os << ")\n";
    os << "  (:init";
    for (const auto& a : p.init) os << "\n    " << a.str();
    os << ")\n";
    os << "  (:goal ";
    std::ostringstream goal;
    detail::print_goal(goal, p.goal, 2);
    os << goal.str() << ")\n";
    os << ")\n";
    return os.str();
}

}  // namespace kgplan
