#pragma once
// Search-based retrieval: extract a query graph from NL text via the LM
// gateway, match it into the world graph by depth-first search over
// candidate mappings, and expand the matched entities into the relevant
// triplet set. A baseline retriever (LM picks names from an inventory) and
// a full-context retriever are provided for the ablations.

#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "kgplan/lm.hpp"
#include "kgplan/similarity.hpp"
#include "kgplan/world_graph.hpp"

namespace kgplan {

struct QueryRelation {
    size_t subject = 0;  // index into QueryGraph::entities
    std::string label;
    size_t object = 0;

    auto operator<=>(const QueryRelation&) const = default;
};

struct QueryGraph {
    std::vector<QueryEntity> entities;
    std::vector<QueryRelation> relations;

    bool empty() const { return entities.empty(); }
};

// Text format produced by the query_graph template:
//   ENTITIES:
//   1. red pen | type: pen | color=red
//   2. shelf
//   RELATIONS:
//   1 placed_at 2
inline QueryGraph parse_query_graph(const std::string& completion) {
    QueryGraph q;
    bool in_entities = false;
    bool in_relations = false;
    for (const auto& raw : split(completion, '\n')) {
        std::string line = trim(raw);
        if (line.empty()) continue;
        std::string low = lower(line);
        if (starts_with(low, "entities:")) {
            in_entities = true;
            in_relations = false;
            continue;
        }
        if (starts_with(low, "relations:")) {
            in_relations = true;
            in_entities = false;
            continue;
        }
        if (in_entities) {
            size_t dot = line.find('.');
            if (dot == std::string::npos)
                throw OutputParseError("entity line missing 'N.' prefix", line);
            QueryEntity e;
            for (auto& part : split(line.substr(dot + 1), '|')) {
                std::string p = trim(part);
                if (p.empty()) continue;
                if (starts_with(lower(p), "type:")) {
                    e.type_hint = normalize_name(trim(p.substr(5)));
                } else if (p.find('=') != std::string::npos) {
                    auto eq = p.find('=');
                    e.attributes[trim(p.substr(0, eq))] = trim(p.substr(eq + 1));
                } else if (e.name.empty()) {
                    e.name = p;
                } else {
                    throw OutputParseError("entity line has two names", line);
                }
            }
            if (e.name.empty()) throw OutputParseError("entity line has no name", line);
            q.entities.push_back(std::move(e));
        } else if (in_relations) {
            std::vector<std::string> parts;
            for (auto& p : split(line, ' '))
                if (!trim(p).empty()) parts.push_back(trim(p));
            if (parts.size() < 3)
                throw OutputParseError("relation line needs '<i> <label> <j>'", line);
            QueryRelation r;
            try {
                r.subject = std::stoul(parts.front()) - 1;
                r.object = std::stoul(parts.back()) - 1;
            } catch (const std::exception&) {
                throw OutputParseError("relation endpoints must be entity indices", line);
            }
            parts.erase(parts.begin());
            parts.pop_back();
            r.label = normalize_name(join(parts, "_"));
            if (r.subject >= q.entities.size() || r.object >= q.entities.size())
                throw OutputParseError("relation endpoint out of range", line);
            q.relations.push_back(std::move(r));
        } else {
            throw OutputParseError("unexpected text before ENTITIES:", line);
        }
    }
    if (!in_entities && !in_relations && !completion.empty() && !trim(completion).empty())
        throw OutputParseError("no ENTITIES: section found", completion.substr(0, 32));
    return q;
}

// Partial injective map from query entity indices to world entity names.
struct Mapping {
    std::map<size_t, std::string> assignment;
    double score = 0.0;
    bool complete = false;

    std::set<std::string> mapped_entities() const {
        std::set<std::string> out;
        for (const auto& [i, name] : assignment) out.insert(name);
        return out;
    }
};

enum class RetrieverMode { Full, Baseline, Search };

inline const char* retriever_mode_name(RetrieverMode m) {
    switch (m) {
        case RetrieverMode::Full: return "full";
        case RetrieverMode::Baseline: return "baseline";
        case RetrieverMode::Search: return "search";
    }
    return "?";
}

struct RetrievalConfig {
    RetrieverMode mode = RetrieverMode::Search;
    int depth = 2;
    double cutoff = 0.8;
    double relation_weight = 1.0;   // lambda in the mapping score
    double edge_base_credit = 0.5;  // credit floor for a connected query edge
    int lm_retry_cap = 3;
    long dfs_leaf_cap = 200000;  // safety valve on mapping enumeration
};

struct RetrievalDiagnostics {
    std::vector<size_t> candidate_counts;  // per query node, after cutoff
    double best_score = 0.0;
    bool complete = false;
    bool truncated = false;  // dfs_leaf_cap hit
    long leaves_visited = 0;
    Mapping mapping;
};

struct RetrievalResult {
    std::set<std::string> relevant_entities;  // V_r
    TripletSet relevant;                      // E_t^rel
    TripletSet irrelevant;                    // E_t - E_t^rel
    RetrievalDiagnostics diagnostics;
};

// Node-similarity sum plus relational-consistency credit: every query
// relation whose endpoints are mapped and connected by some triplet earns
// base credit plus a bonus for label/predicate name similarity.
inline double mapping_score(const Mapping& m, const QueryGraph& q, const WorldGraph& g,
                            const SimilarityMatrix& s, const RetrievalConfig& cfg = {}) {
    std::map<std::string, size_t> col_of;
    for (size_t j = 0; j < s.entities.size(); ++j) col_of[s.entities[j]] = j;

    double total = 0.0;
    for (const auto& [i, name] : m.assignment) total += s.at(i, col_of.at(name));

    static const LexicalSimilarity label_sim;
    for (const auto& rel : q.relations) {
        auto a = m.assignment.find(rel.subject);
        auto b = m.assignment.find(rel.object);
        if (a == m.assignment.end() || b == m.assignment.end()) continue;
        double credit = 0.0;
        for (const auto& t : g.triplets()) {
            if (t.form != Triplet::Form::Relationship) continue;
            bool connects = (t.subject == a->second && t.object == b->second) ||
                            (t.subject == b->second && t.object == a->second);
            if (!connects) continue;
            double c = cfg.edge_base_credit +
                       (1.0 - cfg.edge_base_credit) * label_sim.score(rel.label, t.predicate);
            credit = std::max(credit, c);
        }
        total += cfg.relation_weight * credit;
    }
    return total;
}

namespace detail {

struct MatchState {
    const QueryGraph& q;
    const WorldGraph& g;
    const SimilarityMatrix& s;
    const RetrievalConfig& cfg;
    const std::vector<std::vector<size_t>>& candidates;  // per node, cutoff-filtered columns
    const std::vector<size_t>& order;                    // node visit order

    Mapping current;
    std::set<std::string> used;
    Mapping best;
    bool have_best = false;
    long leaves = 0;
    bool truncated = false;

    void consider_leaf() {
        ++leaves;
        Mapping leaf = current;
        leaf.complete = leaf.assignment.size() == q.entities.size();
        leaf.score = mapping_score(leaf, q, g, s, cfg);
        bool better = !have_best || (leaf.complete && !best.complete) ||
                      (leaf.complete == best.complete && leaf.score > best.score);
        if (better) {
            best = leaf;
            have_best = true;
        }
    }

    void dfs(size_t pos) {
        if (truncated) return;
        if (leaves >= cfg.dfs_leaf_cap) {
            truncated = true;
            return;
        }
        if (pos == order.size()) {
            consider_leaf();
            return;
        }
        size_t node = order[pos];
        bool descended = false;
        for (size_t col : candidates[node]) {
            const std::string& name = s.entities[col];
            if (used.count(name)) continue;
            descended = true;
            current.assignment[node] = name;
            used.insert(name);
            dfs(pos + 1);
            used.erase(name);
            current.assignment.erase(node);
        }
        if (!descended) dfs(pos + 1);  // node unmatchable here; continue partially
    }
};

}  // namespace detail

// Best injective mapping under the cutoff candidate filter. Query nodes are
// visited in descending order of their best column score; a node whose
// candidates are all taken is skipped, so when no complete mapping exists
// the best partial one comes back flagged incomplete.
inline Mapping match(const SimilarityMatrix& s, const QueryGraph& q, const WorldGraph& g,
                     const RetrievalConfig& cfg = {}, RetrievalDiagnostics* diag = nullptr) {
    if (q.entities.empty()) return {};
    if (s.values.size() != q.entities.size() || s.entities.empty())
        throw std::invalid_argument("similarity matrix does not match the query graph");

    std::vector<std::vector<size_t>> candidates(q.entities.size());
    for (size_t i = 0; i < q.entities.size(); ++i) {
        double best = s.row_max(i);
        if (best <= 0.0) continue;  // no signal at all; leave the node unmapped
        std::vector<size_t> cols;
        for (size_t j = 0; j < s.entities.size(); ++j)
            if (s.at(i, j) >= cfg.cutoff * best) cols.push_back(j);
        std::stable_sort(cols.begin(), cols.end(),
                         [&](size_t a, size_t b) { return s.at(i, a) > s.at(i, b); });
        candidates[i] = std::move(cols);
    }

    std::vector<size_t> order(q.entities.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return s.row_max(a) > s.row_max(b); });

    detail::MatchState st{q, g, s, cfg, candidates, order, {}, {}, {}, false, 0, false};
    st.dfs(0);

    if (diag) {
        diag->candidate_counts.clear();
        for (const auto& c : candidates) diag->candidate_counts.push_back(c.size());
        diag->best_score = st.have_best ? st.best.score : 0.0;
        diag->complete = st.have_best && st.best.complete;
        diag->truncated = st.truncated;
        diag->leaves_visited = st.leaves;
        diag->mapping = st.best;
    }
    return st.have_best ? st.best : Mapping{};
}

// Prompts the LM for a query graph; malformed output is re-prompted up to
// the retry cap.
inline QueryGraph extract_query_graph(LmGateway& gw, const std::string& query, int retry_cap = 3) {
    if (trim(query).empty()) return {};
    std::string last_error;
    for (int attempt = 1; attempt <= retry_cap; ++attempt) {
        PromptBundle p = gw.make_prompt("query_graph", {{"text", query}}, attempt);
        std::string completion = gw.complete(p);
        try {
            return parse_query_graph(completion);
        } catch (const OutputParseError& e) {
            last_error = e.what();
        }
    }
    throw LmError("query graph extraction failed after " + std::to_string(retry_cap) +
                      " attempts: " + last_error,
                  false);
}

// Baseline retriever output: `RELEVANT: name, name, ...`
inline std::set<std::string> parse_selection(const std::string& completion, const WorldGraph& g) {
    std::string low = lower(completion);
    size_t pos = low.find("relevant:");
    if (pos == std::string::npos)
        throw OutputParseError("missing RELEVANT: marker", completion.substr(0, 32));
    std::set<std::string> out;
    for (auto& part : split(completion.substr(pos + 9), ',')) {
        std::string name = normalize_name(trim(part));
        if (name.empty()) continue;
        if (g.has_entity(name)) out.insert(name);  // hallucinated names are dropped
    }
    return out;
}

class Retriever {
public:
    Retriever(RetrievalConfig cfg, SimilarityScorer scorer = SimilarityScorer{})
        : cfg_(std::move(cfg)), scorer_(std::move(scorer)) {}

    const RetrievalConfig& config() const { return cfg_; }

    RetrievalResult retrieve(const WorldGraph& g, const std::string& query, LmGateway& gw) const {
        RetrievalResult r;
        switch (cfg_.mode) {
            case RetrieverMode::Full: {
                for (const auto& [name, e] : g.entities()) r.relevant_entities.insert(name);
                r.relevant = g.triplets();
                r.diagnostics.complete = true;
                break;
            }
            case RetrieverMode::Baseline: {
                std::vector<std::string> names;
                for (const auto& [name, e] : g.entities()) names.push_back(name);
                PromptBundle p = gw.make_prompt(
                    "select_entities", {{"entities", join(names, ", ")}, {"text", query}});
                r.relevant_entities = parse_selection(gw.complete(p), g);
                r.relevant = r.relevant_entities.empty()
                                 ? TripletSet{}
                                 : g.neighborhood(r.relevant_entities, cfg_.depth);
                r.diagnostics.complete = true;
                break;
            }
            case RetrieverMode::Search: {
                QueryGraph q = extract_query_graph(gw, query, cfg_.lm_retry_cap);
                if (!q.empty()) {
                    SimilarityMatrix s = scorer_.matrix(q.entities, g);
                    Mapping m = match(s, q, g, cfg_, &r.diagnostics);
                    r.relevant_entities = m.mapped_entities();
                }
                r.relevant = r.relevant_entities.empty()
                                 ? TripletSet{}
                                 : g.neighborhood(r.relevant_entities, cfg_.depth);
                break;
            }
        }
        for (const auto& t : g.triplets())
            if (!r.relevant.count(t)) r.irrelevant.insert(t);
        return r;
    }

private:
    RetrievalConfig cfg_;
    SimilarityScorer scorer_;
};

}  // namespace kgplan
