#pragma once
// Typed knowledge graph mirroring ground PDDL atoms.
//
// Entities carry a type from the domain; triplets come in two forms:
//   relationship: (subject, predicate, object)  <-> binary atom
//   property:     (subject, predicate, true)    <-> unary atom
// Storage is closed-world: only true facts are stored, so a property value
// of `false` is expressed by absence.
//
// WorldGraph is a value type. apply_delta returns a new graph, which is what
// makes snapshots cheap to reason about: a reader holding a copy (or a
// shared_ptr<const WorldGraph>) never observes a partial update.

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgplan/pddl.hpp"
#include "kgplan/util.hpp"

namespace kgplan {

struct Entity {
    std::string name;
    std::string type;
    std::map<std::string, std::string> attributes;  // display only, similarity input

    auto operator<=>(const Entity&) const = default;
};

struct Triplet {
    enum class Form { Relationship, Property };

    Form form = Form::Relationship;
    std::string subject;
    std::string predicate;
    std::string object;  // empty for property form (value is implicitly true)

    static Triplet rel(std::string s, std::string p, std::string o) {
        return {Form::Relationship, std::move(s), std::move(p), std::move(o)};
    }
    static Triplet prop(std::string s, std::string p) {
        return {Form::Property, std::move(s), std::move(p), ""};
    }

    std::string str() const {
        return "(" + subject + ", " + predicate + ", " +
               (form == Form::Property ? "true" : object) + ")";
    }

    auto operator<=>(const Triplet&) const = default;
};

using TripletSet = std::set<Triplet>;

enum class DeltaSource { Verbal, Perception };

struct GraphDelta {
    TripletSet removals;   // E^-
    TripletSet additions;  // E^+
    DeltaSource source = DeltaSource::Verbal;
    uint64_t applied_at_revision = 0;  // set when applied

    bool empty() const { return removals.empty() && additions.empty(); }

    GraphDelta inverse() const {
        GraphDelta inv;
        inv.removals = additions;
        inv.additions = removals;
        inv.source = source;
        return inv;
    }
};

class GraphError : public std::runtime_error {
public:
    enum class Code {
        UnknownEntity,
        UnknownPredicate,
        TypeMismatch,
        WrongForm,
        RemoveAbsent,
        AddDuplicate,
        Conformance,
        Persistence,
    };

    GraphError(Code code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

class WorldGraph {
public:
    WorldGraph() = default;
    explicit WorldGraph(std::shared_ptr<const Domain> domain) : domain_(std::move(domain)) {}

    const std::map<std::string, Entity>& entities() const { return entities_; }
    const TripletSet& triplets() const { return triplets_; }
    uint64_t revision() const { return revision_; }
    const std::shared_ptr<const Domain>& domain() const { return domain_; }

    bool has_entity(const std::string& name) const { return entities_.count(name) > 0; }

    const Entity* find_entity(const std::string& name) const {
        auto it = entities_.find(name);
        return it == entities_.end() ? nullptr : &it->second;
    }

    void add_entity(Entity e) {
        if (!domain_) throw GraphError(GraphError::Code::Conformance, "graph has no domain");
        if (!domain_->has_type(e.type))
            throw GraphError(GraphError::Code::TypeMismatch,
                             "entity '" + e.name + "' has undeclared type '" + e.type + "'");
        if (!entities_.emplace(e.name, e).second)
            throw GraphError(GraphError::Code::AddDuplicate,
                             "entity '" + e.name + "' already exists");
    }

    // Validates a triplet against entities and the domain signature; returns
    // an error message or empty string.
    std::string check_triplet(const Triplet& t) const {
        const Entity* subj = find_entity(t.subject);
        if (!subj) return "unknown entity '" + t.subject + "' in " + t.str();
        const Predicate* pred = domain_ ? domain_->find_predicate(t.predicate) : nullptr;
        if (!pred) return "unknown predicate '" + t.predicate + "' in " + t.str();
        if (t.form == Triplet::Form::Relationship) {
            if (pred->arity() != 2)
                return "predicate '" + t.predicate + "' is not binary; " + t.str() +
                       " uses relationship form";
            const Entity* obj = find_entity(t.object);
            if (!obj) return "unknown entity '" + t.object + "' in " + t.str();
            if (!domain_->is_subtype(subj->type, pred->params[0].type))
                return "type mismatch in " + t.str() + ": argument 1 ('" + t.subject +
                       "' of type " + subj->type + ") is not a " + pred->params[0].type;
            if (!domain_->is_subtype(obj->type, pred->params[1].type))
                return "type mismatch in " + t.str() + ": argument 2 ('" + t.object +
                       "' of type " + obj->type + ") is not a " + pred->params[1].type;
        } else {
            if (pred->arity() != 1)
                return "predicate '" + t.predicate + "' is not unary; " + t.str() +
                       " uses property form";
            if (!domain_->is_subtype(subj->type, pred->params[0].type))
                return "type mismatch in " + t.str() + ": argument 1 ('" + t.subject +
                       "' of type " + subj->type + ") is not a " + pred->params[0].type;
        }
        return "";
    }

    void add_triplet(const Triplet& t) {
        std::string err = check_triplet(t);
        if (!err.empty()) throw triplet_error(err);
        if (!triplets_.insert(t).second)
            throw GraphError(GraphError::Code::AddDuplicate, "duplicate triplet " + t.str());
    }

    auto operator<=>(const WorldGraph&) const = delete;
    bool operator==(const WorldGraph& o) const {
        return entities_ == o.entities_ && triplets_ == o.triplets_ && revision_ == o.revision_;
    }

    // E_{t+1} = E_t - E^- + E^+. Entities never change. Throws on the first
    // invariant violation, leaving *this untouched (the new graph is built
    // aside and returned).
    WorldGraph apply_delta(const GraphDelta& d) const {
        for (const auto& t : d.removals) {
            if (d.additions.count(t))
                throw GraphError(GraphError::Code::AddDuplicate,
                                 "triplet " + t.str() + " appears in both removals and additions");
            if (!triplets_.count(t))
                throw GraphError(GraphError::Code::RemoveAbsent,
                                 "removal of absent triplet " + t.str());
        }
        WorldGraph next = *this;
        for (const auto& t : d.removals) next.triplets_.erase(t);
        for (const auto& t : d.additions) {
            std::string err = next.check_triplet(t);
            if (!err.empty()) throw triplet_error(err);
            if (!next.triplets_.insert(t).second)
                throw GraphError(GraphError::Code::AddDuplicate,
                                 "addition of duplicate triplet " + t.str());
        }
        next.revision_ = revision_ + 1;
        return next;
    }

    // Set-semantics application for unverified deltas: removals not present
    // are skipped, duplicate or ill-typed additions are dropped. Used by the
    // verifier-off ablations, where the model output is applied as-is.
    WorldGraph apply_delta_unchecked(const GraphDelta& d) const {
        WorldGraph next = *this;
        for (const auto& t : d.removals) next.triplets_.erase(t);
        for (const auto& t : d.additions) {
            if (next.check_triplet(t).empty()) next.triplets_.insert(t);
        }
        next.revision_ = revision_ + 1;
        return next;
    }

    // All triplets reachable by undirected traversal from the seed entities
    // within `depth` hops. Property triplets hang off their subject; they are
    // collected but do not extend the frontier.
    TripletSet neighborhood(const std::set<std::string>& seeds, int depth) const {
        for (const auto& s : seeds)
            if (!has_entity(s))
                throw GraphError(GraphError::Code::UnknownEntity, "unknown seed entity '" + s + "'");
        if (depth < 1) return {};

        std::map<std::string, int> dist;
        std::queue<std::string> frontier;
        for (const auto& s : seeds) {
            dist[s] = 0;
            frontier.push(s);
        }
        TripletSet out;
        while (!frontier.empty()) {
            std::string cur = frontier.front();
            frontier.pop();
            int d = dist[cur];
            if (d >= depth) continue;
            for (const auto& t : triplets_) {
                bool touches_subj = t.subject == cur;
                bool touches_obj = t.form == Triplet::Form::Relationship && t.object == cur;
                if (!touches_subj && !touches_obj) continue;
                out.insert(t);
                if (t.form != Triplet::Form::Relationship) continue;
                const std::string& other = touches_subj ? t.object : t.subject;
                if (!dist.count(other)) {
                    dist[other] = d + 1;
                    frontier.push(other);
                }
            }
        }
        return out;
    }

    std::vector<TypedObject> typed_objects() const {
        std::vector<TypedObject> out;
        out.reserve(entities_.size());
        for (const auto& [name, e] : entities_) out.push_back({name, e.type});
        return out;
    }

    // For loaders only: restores the persisted revision counter.
    void restore_revision(uint64_t revision) { revision_ = revision; }

private:
    GraphError triplet_error(const std::string& msg) const {
        GraphError::Code code = GraphError::Code::TypeMismatch;
        if (msg.find("unknown entity") != std::string::npos)
            code = GraphError::Code::UnknownEntity;
        else if (msg.find("unknown predicate") != std::string::npos)
            code = GraphError::Code::UnknownPredicate;
        else if (msg.find("form") != std::string::npos)
            code = GraphError::Code::WrongForm;
        return GraphError(code, msg);
    }

    std::map<std::string, Entity> entities_;
    TripletSet triplets_;
    uint64_t revision_ = 0;
    std::shared_ptr<const Domain> domain_;
};

// --- triplet <-> atom bridge ----------------------------------------------

inline Atom to_init_atom(const Triplet& t) {
    if (t.form == Triplet::Form::Property) return Atom{t.predicate, {t.subject}};
    return Atom{t.predicate, {t.subject, t.object}};
}

inline std::set<Atom> to_init_atoms(const TripletSet& triplets) {
    std::set<Atom> out;
    for (const auto& t : triplets) out.insert(to_init_atom(t));
    return out;
}

inline Triplet from_init_atom(const Atom& a, const Domain& d) {
    const Predicate* p = d.find_predicate(a.pred);
    if (!p)
        throw GraphError(GraphError::Code::UnknownPredicate,
                         "unknown predicate '" + a.pred + "' in " + a.str());
    if (a.args.size() != p->arity())
        throw GraphError(GraphError::Code::WrongForm,
                         "arity mismatch for '" + a.pred + "' in " + a.str());
    if (a.args.size() == 1) return Triplet::prop(a.args[0], a.pred);
    if (a.args.size() == 2) return Triplet::rel(a.args[0], a.pred, a.args[1]);
    throw GraphError(GraphError::Code::WrongForm,
                     "atom " + a.str() + " has arity > 2 and cannot be a graph triplet");
}

inline TripletSet from_init_atoms(const std::set<Atom>& atoms, const Domain& d) {
    TripletSet out;
    for (const auto& a : atoms) out.insert(from_init_atom(a, d));
    return out;
}

// One triplet per line, in set order; the serialization used in prompts.
inline std::string render_context(const TripletSet& triplets) {
    std::string out;
    for (const auto& t : triplets) {
        out += t.str();
        out += "\n";
    }
    return out;
}

// Problem synthesis: entities become the object list, the given triplets
// become the init block.
inline Problem make_problem(const WorldGraph& g, const TripletSet& init_triplets,
                            GoalFormula goal, const std::string& name) {
    Problem p;
    p.name = name;
    p.domain_name = g.domain() ? g.domain()->name : "";
    p.objects = g.typed_objects();
    p.init = to_init_atoms(init_triplets);
    p.goal = std::move(goal);
    return p;
}

// --- persistence -----------------------------------------------------------
//
// Line-delimited, UTF-8, deterministic ordering so files diff cleanly:
//   kgplan-graph v1 domain=<name> revision=<n> entities=<n> triplets=<n> checksum=<hex>
//   entity <name> <type> [key=value ...]
//   rel <subject> <predicate> <object>
//   prop <subject> <predicate>
// The checksum is FNV-1a over the body lines.

namespace detail {

inline std::string graph_body(const WorldGraph& g) {
    std::ostringstream os;
    for (const auto& [name, e] : g.entities()) {
        os << "entity " << name << " " << e.type;
        for (const auto& [k, v] : e.attributes) os << " " << k << "=" << v;
        os << "\n";
    }
    for (const auto& t : g.triplets()) {
        if (t.form == Triplet::Form::Relationship)
            os << "rel " << t.subject << " " << t.predicate << " " << t.object << "\n";
        else
            os << "prop " << t.subject << " " << t.predicate << "\n";
    }
    return os.str();
}

}  // namespace detail

inline std::string serialize_graph(const WorldGraph& g) {
    std::string body = detail::graph_body(g);
    std::ostringstream os;
    os << "kgplan-graph v1 domain=" << (g.domain() ? g.domain()->name : "")
       << " revision=" << g.revision() << " entities=" << g.entities().size()
       << " triplets=" << g.triplets().size() << " checksum=" << to_hex(fnv1a64(body)) << "\n"
       << body;
    return os.str();
}

// Atomic: writes to a temp file in the same directory, then renames over the
// target, so a crash never leaves a half-written graph at `path`.
inline void save_graph(const WorldGraph& g, const std::filesystem::path& path) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw GraphError(GraphError::Code::Persistence,
                             "cannot open '" + tmp.string() + "' for writing");
        out << serialize_graph(g);
        out.flush();
        if (!out)
            throw GraphError(GraphError::Code::Persistence, "write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline WorldGraph parse_graph(const std::string& text, std::shared_ptr<const Domain> domain,
                              const std::string& source = "<graph>") {
    auto bad = [&](const std::string& msg) {
        return GraphError(GraphError::Code::Persistence, source + ": " + msg);
    };

    size_t header_end = text.find('\n');
    if (header_end == std::string::npos) throw bad("missing header line");
    std::string header = text.substr(0, header_end);
    std::string body = text.substr(header_end + 1);

    auto fields = split(header, ' ');
    if (fields.size() < 2 || fields[0] != "kgplan-graph") throw bad("not a kgplan graph file");
    if (fields[1] != "v1") throw bad("unsupported graph format version '" + fields[1] + "'");
    std::map<std::string, std::string> kv;
    for (size_t i = 2; i < fields.size(); ++i) {
        auto eq = fields[i].find('=');
        if (eq == std::string::npos) throw bad("malformed header field '" + fields[i] + "'");
        kv[fields[i].substr(0, eq)] = fields[i].substr(eq + 1);
    }
    if (kv.count("checksum") && kv["checksum"] != to_hex(fnv1a64(body)))
        throw bad("checksum failure");
    if (domain && kv.count("domain") && kv["domain"] != domain->name)
        throw GraphError(GraphError::Code::Conformance,
                         source + ": graph was saved against domain '" + kv["domain"] +
                             "', not '" + domain->name + "'");

    WorldGraph g(std::move(domain));
    uint64_t revision = kv.count("revision") ? std::stoull(kv["revision"]) : 0;

    size_t line_no = 1;
    for (const auto& line : split(body, '\n')) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto parts = split(line, ' ');
        try {
            if (parts[0] == "entity") {
                if (parts.size() < 3) throw bad("malformed entity line " + std::to_string(line_no));
                Entity e;
                e.name = parts[1];
                e.type = parts[2];
                for (size_t i = 3; i < parts.size(); ++i) {
                    auto eq = parts[i].find('=');
                    if (eq == std::string::npos)
                        throw bad("malformed attribute on line " + std::to_string(line_no));
                    e.attributes[parts[i].substr(0, eq)] = parts[i].substr(eq + 1);
                }
                g.add_entity(std::move(e));
            } else if (parts[0] == "rel" && parts.size() == 4) {
                g.add_triplet(Triplet::rel(parts[1], parts[2], parts[3]));
            } else if (parts[0] == "prop" && parts.size() == 3) {
                g.add_triplet(Triplet::prop(parts[1], parts[2]));
            } else {
                throw bad("unrecognized record on line " + std::to_string(line_no));
            }
        } catch (const GraphError& e) {
            if (e.code() == GraphError::Code::Persistence) throw;
            throw GraphError(GraphError::Code::Conformance,
                             source + ": line " + std::to_string(line_no) + ": " + e.what());
        }
    }

    g.restore_revision(revision);
    return g;
}

inline WorldGraph load_graph(const std::filesystem::path& path,
                             std::shared_ptr<const Domain> domain) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw GraphError(GraphError::Code::Persistence, "cannot open '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return parse_graph(os.str(), std::move(domain), path.string());
}

// Shared handle for one-writer/many-readers use: readers grab an immutable
// snapshot, the writer swaps in a new graph atomically.
class WorldStore {
public:
    explicit WorldStore(WorldGraph g)
        : current_(std::make_shared<const WorldGraph>(std::move(g))) {}

    std::shared_ptr<const WorldGraph> snapshot() const {
        std::lock_guard lock(mutex_);
        return current_;
    }

    void replace(WorldGraph g) {
        auto next = std::make_shared<const WorldGraph>(std::move(g));
        std::lock_guard lock(mutex_);
        current_ = std::move(next);
    }

private:
    mutable std::mutex mutex_;
    std::shared_ptr<const WorldGraph> current_;
};

}  // namespace kgplan
