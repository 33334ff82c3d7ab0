#pragma once
// Recursive-descent parser for the PDDL subset in pddl.hpp.
//
// The lexer produces an s-expression tree with source positions; the parser
// walks it. Unsupported PDDL features are rejected by name rather than
// ignored, so a domain using e.g. :functions fails loudly.

#include <memory>
#include <string>
#include <vector>

#include "kgplan/pddl.hpp"

namespace kgplan {

namespace sexp {

struct Node {
    bool is_list = false;
    std::string token;  // raw, unnormalized
    std::vector<Node> items;
    int line = 1;
    int col = 1;
};

class Lexer {
public:
    Lexer(std::string_view text, std::string file) : text_(text), file_(std::move(file)) {}

    // Parses the whole input as a sequence of top-level s-expressions.
    std::vector<Node> parse_all() {
        std::vector<Node> out;
        skip_ws();
        while (pos_ < text_.size()) {
            out.push_back(parse_node());
            skip_ws();
        }
        return out;
    }

private:
    [[noreturn]] void fail(ParseError::Kind kind, const std::string& msg, int line, int col) {
        throw ParseError(kind, file_, line, col, msg);
    }

    void skip_ws() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == ';') {
                while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
            } else if (c == '\n') {
                ++line_;
                col_ = 1;
                ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++col_;
                ++pos_;
            } else {
                break;
            }
        }
    }

    Node parse_node() {
        char c = text_[pos_];
        if (c == '(') {
            Node n;
            n.is_list = true;
            n.line = line_;
            n.col = col_;
            advance();
            skip_ws();
            while (pos_ < text_.size() && text_[pos_] != ')') {
                n.items.push_back(parse_node());
                skip_ws();
            }
            if (pos_ >= text_.size()) fail(ParseError::Kind::Lex, "unclosed '('", n.line, n.col);
            advance();  // ')'
            return n;
        }
        if (c == ')') fail(ParseError::Kind::Lex, "unexpected ')'", line_, col_);
        Node n;
        n.line = line_;
        n.col = col_;
        while (pos_ < text_.size()) {
            c = text_[pos_];
            if (c == '(' || c == ')' || c == ';' || std::isspace(static_cast<unsigned char>(c)))
                break;
            n.token.push_back(c);
            advance();
        }
        return n;
    }

    void advance() {
        ++pos_;
        ++col_;
    }

    std::string_view text_;
    std::string file_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

}  // namespace sexp

namespace detail {

class PddlReader {
public:
    PddlReader(std::string_view text, std::string file) : file_(std::move(file)) {
        sexp::Lexer lexer(text, file_);
        roots_ = lexer.parse_all();
        if (roots_.empty()) fail(ParseError::Kind::Syntax, "empty input", 1, 1);
        if (roots_.size() > 1)
            fail(ParseError::Kind::Syntax, "trailing content after top-level form",
                 roots_[1].line, roots_[1].col);
    }

    Domain read_domain() {
        const sexp::Node& root = roots_.front();
        expect_head(root, "define");
        const sexp::Node& decl = list_item(root, 1, "(domain NAME)");
        expect_head(decl, "domain");
        Domain d;
        d.name = name_token(list_item(decl, 1, "domain name"));
        for (size_t i = 2; i < root.items.size(); ++i) {
            const sexp::Node& section = root.items[i];
            const std::string head = head_of(section);
            if (head == ":requirements") {
                read_requirements(section);
            } else if (head == ":types") {
                for (auto& [name, type] : read_typed_names(section, 1))
                    wrap_invalid(section, [&] { d.add_type(name, type); });
            } else if (head == ":predicates") {
                for (size_t j = 1; j < section.items.size(); ++j) {
                    const sexp::Node& pn = section.items[j];
                    if (!pn.is_list || pn.items.empty())
                        fail(ParseError::Kind::Syntax, "expected (predicate ...)", pn.line, pn.col);
                    Predicate p;
                    p.name = name_token(pn.items[0]);
                    p.params = read_parameters(pn, 1, d);
                    wrap_invalid(pn, [&] { d.add_predicate(std::move(p)); });
                }
            } else if (head == ":action") {
                read_action(section, d);
            } else {
                fail(ParseError::Kind::Unsupported,
                     "unsupported feature " + lower(section.items[0].token), section.line,
                     section.col);
            }
        }
        check_domain(d, root);
        return d;
    }

    Problem read_problem(const Domain& d) {
        const sexp::Node& root = roots_.front();
        expect_head(root, "define");
        const sexp::Node& decl = list_item(root, 1, "(problem NAME)");
        expect_head(decl, "problem");
        Problem p;
        p.name = name_token(list_item(decl, 1, "problem name"));
        bool saw_goal = false;
        for (size_t i = 2; i < root.items.size(); ++i) {
            const sexp::Node& section = root.items[i];
            const std::string head = head_of(section);
            if (head == ":domain") {
                p.domain_name = name_token(list_item(section, 1, "domain name"));
                if (p.domain_name != d.name)
                    fail(ParseError::Kind::Semantic,
                         "problem references domain '" + p.domain_name + "' but '" + d.name +
                             "' was provided",
                         section.line, section.col);
            } else if (head == ":objects") {
                for (auto& [name, type] : read_typed_names(section, 1)) {
                    if (!d.has_type(type))
                        fail(ParseError::Kind::Semantic,
                             "object '" + name + "' has undeclared type '" + type + "'",
                             section.line, section.col);
                    p.objects.push_back({name, type});
                }
                std::sort(p.objects.begin(), p.objects.end());
                for (size_t j = 1; j < p.objects.size(); ++j)
                    if (p.objects[j].name == p.objects[j - 1].name)
                        fail(ParseError::Kind::Semantic,
                             "object '" + p.objects[j].name + "' declared twice", section.line,
                             section.col);
            } else if (head == ":init") {
                for (size_t j = 1; j < section.items.size(); ++j) {
                    Atom a = read_atom(section.items[j]);
                    if (!a.ground())
                        fail(ParseError::Kind::Semantic, "variables not allowed in :init",
                             section.items[j].line, section.items[j].col);
                    if (auto err = check_ground_atom(a, d, p.objects))
                        fail(ParseError::Kind::TypeMismatch, *err, section.items[j].line,
                             section.items[j].col);
                    p.init.insert(std::move(a));
                }
            } else if (head == ":goal") {
                const sexp::Node& body = list_item(section, 1, "goal formula");
                p.goal = read_goal(body, d);
                saw_goal = true;
            } else {
                fail(ParseError::Kind::Unsupported,
                     "unsupported feature " + lower(section.items[0].token), section.line,
                     section.col);
            }
        }
        if (!saw_goal) fail(ParseError::Kind::Syntax, "problem has no :goal", root.line, root.col);
        return p;
    }

    // Parses a bare goal formula (used for LM-generated `(:goal ...)` blocks).
    GoalFormula read_goal_formula(const Domain& d) {
        const sexp::Node& root = roots_.front();
        if (root.is_list && !root.items.empty() && head_of(root) == ":goal")
            return read_goal(list_item(root, 1, "goal formula"), d);
        return read_goal(root, d);
    }

private:
    [[noreturn]] void fail(ParseError::Kind kind, const std::string& msg, int line, int col) {
        throw ParseError(kind, file_, line, col, msg);
    }

    template <typename F>
    void wrap_invalid(const sexp::Node& at, F&& f) {
        try {
            f();
        } catch (const std::invalid_argument& e) {
            fail(ParseError::Kind::Semantic, e.what(), at.line, at.col);
        }
    }

    std::string head_of(const sexp::Node& n) {
        if (!n.is_list || n.items.empty() || n.items[0].is_list)
            fail(ParseError::Kind::Syntax, "expected (keyword ...)", n.line, n.col);
        return normalize_name(n.items[0].token);
    }

    void expect_head(const sexp::Node& n, const std::string& head) {
        if (head_of(n) != head)
            fail(ParseError::Kind::Syntax, "expected (" + head + " ...)", n.line, n.col);
    }

    const sexp::Node& list_item(const sexp::Node& n, size_t idx, const std::string& what) {
        if (!n.is_list || n.items.size() <= idx)
            fail(ParseError::Kind::Syntax, "expected " + what, n.line, n.col);
        return n.items[idx];
    }

    std::string name_token(const sexp::Node& n) {
        if (n.is_list) fail(ParseError::Kind::Syntax, "expected a name", n.line, n.col);
        std::string name = normalize_name(n.token);
        if (!is_valid_name(name))
            fail(ParseError::Kind::Lex, "invalid identifier '" + n.token + "'", n.line, n.col);
        return name;
    }

    void read_requirements(const sexp::Node& section) {
        static const std::set<std::string> supported = {":strips", ":typing",
                                                        ":negative-preconditions"};
        for (size_t i = 1; i < section.items.size(); ++i) {
            const sexp::Node& r = section.items[i];
            std::string req = lower(r.token);
            if (!supported.count(req))
                fail(ParseError::Kind::Unsupported, "unsupported feature " + req, r.line, r.col);
        }
    }

    // Reads `name+ - type` groups; names without a trailing type get `object`.
    std::vector<std::pair<std::string, std::string>> read_typed_names(const sexp::Node& n,
                                                                      size_t from) {
        std::vector<std::pair<std::string, std::string>> out;
        std::vector<std::string> pending;
        for (size_t i = from; i < n.items.size(); ++i) {
            const sexp::Node& tok = n.items[i];
            if (tok.is_list)
                fail(ParseError::Kind::Syntax, "unexpected list in typed name list", tok.line,
                     tok.col);
            if (tok.token == "-") {
                if (pending.empty())
                    fail(ParseError::Kind::Syntax, "dangling '-' in typed list", tok.line, tok.col);
                ++i;
                if (i >= n.items.size())
                    fail(ParseError::Kind::Syntax, "missing type after '-'", tok.line, tok.col);
                std::string type = name_token(n.items[i]);
                for (auto& name : pending) out.emplace_back(std::move(name), type);
                pending.clear();
            } else {
                pending.push_back(name_token(tok));
            }
        }
        for (auto& name : pending) out.emplace_back(std::move(name), kRootType);
        return out;
    }

    std::vector<Parameter> read_parameters(const sexp::Node& n, size_t from, const Domain& d) {
        std::vector<Parameter> params;
        for (auto& [name, type] : read_typed_names(n, from)) {
            if (!is_variable(name))
                fail(ParseError::Kind::Syntax, "expected ?variable, got '" + name + "'", n.line,
                     n.col);
            if (!d.has_type(type))
                fail(ParseError::Kind::Semantic, "undeclared type '" + type + "'", n.line, n.col);
            for (const auto& existing : params)
                if (existing.name == name)
                    fail(ParseError::Kind::Semantic, "parameter '" + name + "' repeated", n.line,
                         n.col);
            params.push_back({name, type});
        }
        return params;
    }

    Atom read_atom(const sexp::Node& n) {
        if (!n.is_list || n.items.empty() || n.items[0].is_list)
            fail(ParseError::Kind::Syntax, "expected (predicate args...)", n.line, n.col);
        Atom a;
        a.pred = name_token(n.items[0]);
        for (size_t i = 1; i < n.items.size(); ++i) a.args.push_back(name_token(n.items[i]));
        return a;
    }

    // Literal list from `atom`, `(not atom)` or `(and ...)`, shared by action
    // preconditions and effects. `forall`, `or`, `when` etc. are rejected.
    void read_literals(const sexp::Node& n, std::vector<Literal>& out) {
        if (!n.is_list || n.items.empty())
            fail(ParseError::Kind::Syntax, "expected a formula", n.line, n.col);
        const std::string head = head_of(n);
        if (head == "and") {
            for (size_t i = 1; i < n.items.size(); ++i) read_literals(n.items[i], out);
        } else if (head == "not") {
            out.push_back({read_atom(list_item(n, 1, "atom under (not ...)")), true});
        } else if (head == "or" || head == "when" || head == "forall" || head == "exists" ||
                   head == "imply" || head == "=" || head == "increase" || head == "decrease") {
            fail(ParseError::Kind::Unsupported, "unsupported feature " + head, n.line, n.col);
        } else {
            out.push_back({read_atom(n), false});
        }
    }

    void read_action(const sexp::Node& section, Domain& d) {
        ActionSchema a;
        a.name = name_token(list_item(section, 1, "action name"));
        size_t i = 2;
        while (i < section.items.size()) {
            const sexp::Node& key = section.items[i];
            std::string kw = key.is_list ? "" : lower(key.token);
            if (kw == ":parameters") {
                a.params = read_parameters(list_item(section, i + 1, "parameter list"), 0, d);
            } else if (kw == ":precondition") {
                read_literals(list_item(section, i + 1, "precondition"), a.precondition);
            } else if (kw == ":effect") {
                read_literals(list_item(section, i + 1, "effect"), a.effects);
            } else {
                fail(ParseError::Kind::Unsupported, "unsupported feature " + kw, key.line, key.col);
            }
            i += 2;
        }
        check_action(a, section, d);
        wrap_invalid(section, [&] { d.add_action(std::move(a)); });
    }

    GoalFormula read_goal(const sexp::Node& n, const Domain& d) {
        if (!n.is_list || n.items.empty())
            fail(ParseError::Kind::Syntax, "expected a goal formula", n.line, n.col);
        const std::string head = head_of(n);
        if (head == "and") {
            std::vector<GoalFormula> children;
            for (size_t i = 1; i < n.items.size(); ++i)
                children.push_back(read_goal(n.items[i], d));
            return GoalFormula::make_and(std::move(children));
        }
        if (head == "not") {
            return GoalFormula::make_not(checked_goal_atom(list_item(n, 1, "atom"), d));
        }
        if (head == "forall") {
            const sexp::Node& binder = list_item(n, 1, "(?var - type)");
            auto vars = read_typed_names(binder, 0);
            if (vars.size() != 1 || !is_variable(vars[0].first))
                fail(ParseError::Kind::Syntax, "forall expects a single (?var - type) binder",
                     binder.line, binder.col);
            if (!d.has_type(vars[0].second))
                fail(ParseError::Kind::Semantic,
                     "unknown type '" + vars[0].second + "' in forall quantifier", binder.line,
                     binder.col);
            GoalFormula body = read_goal(list_item(n, 2, "forall body"), d);
            return GoalFormula::make_forall({vars[0].first, vars[0].second}, std::move(body));
        }
        if (head == "or" || head == "exists" || head == "imply" || head == "when" || head == "=") {
            fail(ParseError::Kind::Unsupported, "unsupported feature " + head, n.line, n.col);
        }
        return GoalFormula::make_atom(checked_goal_atom(n, d));
    }

    Atom checked_goal_atom(const sexp::Node& n, const Domain& d) {
        Atom a = read_atom(n);
        const Predicate* p = d.find_predicate(a.pred);
        if (!p)
            fail(ParseError::Kind::Semantic, "unknown predicate '" + a.pred + "'", n.line, n.col);
        if (p->arity() != a.args.size())
            fail(ParseError::Kind::TypeMismatch,
                 "predicate '" + a.pred + "' expects " + std::to_string(p->arity()) +
                     " argument(s), got " + std::to_string(a.args.size()),
                 n.line, n.col);
        return a;
    }

    void check_action(const ActionSchema& a, const sexp::Node& at, const Domain& d) {
        auto check_literals = [&](const std::vector<Literal>& lits, const char* where) {
            for (const auto& lit : lits) {
                const Predicate* p = d.find_predicate(lit.atom.pred);
                if (!p)
                    fail(ParseError::Kind::Semantic,
                         std::string("unknown predicate '") + lit.atom.pred + "' in " + where +
                             " of action '" + a.name + "'",
                         at.line, at.col);
                if (p->arity() != lit.atom.args.size())
                    fail(ParseError::Kind::TypeMismatch,
                         "predicate '" + lit.atom.pred + "' expects " +
                             std::to_string(p->arity()) + " argument(s) in " + where +
                             " of action '" + a.name + "'",
                         at.line, at.col);
                for (const auto& arg : lit.atom.args) {
                    if (!is_variable(arg)) continue;
                    bool declared = false;
                    for (const auto& param : a.params)
                        if (param.name == arg) declared = true;
                    if (!declared)
                        fail(ParseError::Kind::Semantic,
                             "variable '" + arg + "' in " + where + " of action '" + a.name +
                                 "' is not a parameter",
                             at.line, at.col);
                }
            }
        };
        check_literals(a.precondition, "precondition");
        check_literals(a.effects, "effect");
    }

    void check_domain(const Domain& d, const sexp::Node& at) {
        // Type graph must be a tree rooted at `object`: no cycles.
        for (const auto& [child, parent] : d.types()) {
            std::string cur = parent;
            size_t steps = 0;
            while (cur != kRootType) {
                auto it = d.types().find(cur);
                if (it == d.types().end() || ++steps > d.types().size())
                    fail(ParseError::Kind::Semantic, "type cycle involving '" + child + "'",
                         at.line, at.col);
                cur = it->second;
            }
        }
        for (const auto& [name, p] : d.predicates())
            for (const auto& param : p.params)
                if (!d.has_type(param.type))
                    fail(ParseError::Kind::Semantic,
                         "predicate '" + name + "' uses undeclared type '" + param.type + "'",
                         at.line, at.col);
    }

    std::string file_;
    std::vector<sexp::Node> roots_;
};

}  // namespace detail

inline Domain parse_domain(std::string_view text, const std::string& file = "<domain>") {
    detail::PddlReader reader(text, file);
    return reader.read_domain();
}

inline Problem parse_problem(std::string_view text, const Domain& domain,
                             const std::string& file = "<problem>") {
    detail::PddlReader reader(text, file);
    return reader.read_problem(domain);
}

inline GoalFormula parse_goal_formula(std::string_view text, const Domain& domain,
                                      const std::string& file = "<goal>") {
    detail::PddlReader reader(text, file);
    return reader.read_goal_formula(domain);
}

}  // namespace kgplan
